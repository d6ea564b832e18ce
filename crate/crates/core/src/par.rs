//! Replica scheduling.
//!
//! With the `parallel` feature (on by default) replicas fan out over a rayon
//! pool; without it, or with [`Parallelism::Sequential`], they run in order
//! on the calling thread. Results come back indexed by replica either way, so
//! the schedule never changes an answer.

/// How many workers a batch of replicas may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Parallelism {
    #[default]
    Sequential,
    /// A dedicated pool of this many threads; `0` means rayon's default.
    Threads(usize),
}

impl Parallelism {
    pub fn from_threads(n: usize) -> Self {
        if n == 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Threads(n)
        }
    }
}

/// `f(0), f(1), …, f(n-1)`, in index order.
pub fn map_indexed<T, F>(n: u64, par: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match par {
        Parallelism::Sequential => sequential(n, f),
        Parallelism::Threads(threads) => parallel(n, threads, f),
    }
}

fn sequential<T, F: Fn(u64) -> T>(n: u64, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
fn parallel<T, F>(n: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;

    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => sequential(n, f),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, F>(n: u64, _threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    sequential(n, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_schedule_free() {
        let f = |i: u64| i * i + 1;
        let a = map_indexed(1000, Parallelism::Sequential, f);
        let b = map_indexed(1000, Parallelism::Threads(8), f);
        let c = map_indexed(1000, Parallelism::Threads(0), f);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(map_indexed(0, Parallelism::Threads(4), f).is_empty());
        assert_eq!(Parallelism::from_threads(1), Parallelism::Sequential);
    }
}
