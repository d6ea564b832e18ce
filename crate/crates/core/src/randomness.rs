//! Per-edge unit-rate Poisson streams with uniform thinning marks.
//!
//! Every directed nearest-neighbor edge owns an independent unit-rate Poisson
//! process. Occurrences are generated counter-style: the time axis is cut into
//! unit cells `[k, k+1)`, and the content of cell `k` of edge `e` (a Poisson(1)
//! count, then sorted uniform positions with one uniform mark each) is a pure
//! function of `(master_seed, e, k)`. Any cell can be produced directly, so
//! looking up "the first occurrence after `t`" costs O(1) expected work
//! whatever `t` is, and two processes querying the same edge in any order see
//! the same occurrences.
//!
//! Keying, stable across versions:
//! * the ChaCha8 key is four SplitMix64 outputs of the master seed,
//!   little-endian;
//! * the ChaCha stream (nonce) is the 64-bit fold of the edge encoding
//!   `(dim, from_1, …, from_d, direction index)` through [`mix64`];
//! * cell `k` occupies words `[256 k, 256 (k + 1))` of that stream: one `u64`
//!   for the count, then `(position, mark)` `u64` pairs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::lattice::{direction_between, Site};

/// Sentinel time for "no occurrence, ever".
pub const NEVER: f64 = f64::INFINITY;

const WORDS_PER_CELL: u128 = 256;
// 2 words for the count plus 4 per occurrence must fit in one cell
const MAX_PER_CELL: usize = 60;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; a bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` under `master`: `mix64(mix64(master) + index)`.
/// Injective in `index` for a fixed master seed and independent of the order
/// in which replicas are scheduled.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(index))
}

fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Poisson(1) by inversion of a single uniform.
fn poisson1(u: f64) -> usize {
    let mut k = 0;
    let mut p = (-1.0f64).exp();
    let mut cdf = p;
    while u >= cdf && k < MAX_PER_CELL {
        k += 1;
        p /= k as f64;
        cdf += p;
    }
    k
}

/// An ordered nearest-neighbor pair `(from, to)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectedEdge {
    from: Site,
    to: Site,
}

impl DirectedEdge {
    pub fn new(from: Site, to: Site) -> Result<Self> {
        if direction_between(&from, &to).is_none() {
            return Err(Error::NotNeighbors(from, to));
        }
        Ok(DirectedEdge { from, to })
    }

    pub fn from_direction(from: Site, dir: usize) -> Self {
        let to = from.step(dir);
        DirectedEdge { from, to }
    }

    pub fn from(&self) -> &Site {
        &self.from
    }

    pub fn to(&self) -> &Site {
        &self.to
    }

    pub fn direction(&self) -> usize {
        direction_between(&self.from, &self.to).expect("edge endpoints are neighbors")
    }

    pub fn reversed(&self) -> DirectedEdge {
        DirectedEdge {
            from: self.to.clone(),
            to: self.from.clone(),
        }
    }

    /// 64-bit stream identifier of the canonical edge encoding.
    pub fn stream_id(&self) -> u64 {
        stream_id(&self.from, self.direction())
    }
}

pub(crate) fn stream_id(from: &Site, dir: usize) -> u64 {
    let mut h = mix64(0x7275_6963_6861_7264 ^ from.dim() as u64);
    for &c in from.coords() {
        h = mix64(h ^ u64::from(c as u32));
    }
    mix64(h ^ (0x100 + dir as u64))
}

/// One Poisson occurrence: its time and its thinning mark in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Occurrence {
    pub time: f64,
    pub mark: f64,
}

impl Occurrence {
    /// Whether the occurrence survives thinning at rate `lambda`.
    pub fn accepted(&self, lambda: f64) -> bool {
        self.mark < lambda
    }
}

type Cell = SmallVec<[Occurrence; 4]>;

/// The realization of every edge stream under one master seed.
///
/// Cheap to clone; clones (and any other realization built from the same
/// seed) produce identical streams edge for edge.
#[derive(Clone)]
pub struct Realization {
    master_seed: u64,
    base: ChaCha8Rng,
}

impl std::fmt::Debug for Realization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Realization")
            .field("master_seed", &self.master_seed)
            .finish()
    }
}

impl Realization {
    pub fn new(master_seed: u64) -> Self {
        let mut state = master_seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            let z = mix64(state);
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        Realization {
            master_seed,
            base: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn cell(&self, id: u64, k: u64) -> Cell {
        let mut rng = self.base.clone();
        rng.set_stream(id);
        rng.set_word_pos(u128::from(k) * WORDS_PER_CELL);
        let n = poisson1(unit(rng.next_u64()));
        let base = k as f64;
        let mut out: Cell = (0..n)
            .map(|_| {
                let pos = unit(rng.next_u64());
                let mark = unit(rng.next_u64());
                Occurrence {
                    time: base + pos,
                    mark,
                }
            })
            .collect();
        out.sort_by(|a, b| a.time.total_cmp(&b.time));
        out
    }

    /// All occurrences of `e` in the unit cell `[k, k+1)`, in time order.
    pub fn cell_occurrences(&self, e: &DirectedEdge, k: u64) -> Vec<Occurrence> {
        self.cell(e.stream_id(), k).into_vec()
    }

    /// The whole stream of `e`, from time 0.
    pub fn edge_stream(&self, e: &DirectedEdge) -> EdgeStream<'_> {
        EdgeStream::new(self, e.stream_id(), 0.0)
    }

    /// Occurrences of `e` with time strictly greater than `after`.
    pub fn stream_after(&self, e: &DirectedEdge, after: f64) -> EdgeStream<'_> {
        EdgeStream::new(self, e.stream_id(), after)
    }

    /// Earliest occurrence strictly after `after`.
    pub fn next_occurrence(&self, e: &DirectedEdge, after: f64) -> Occurrence {
        self.stream_after(e, after)
            .next()
            .expect("Poisson streams are unbounded")
    }

    /// Earliest occurrence strictly after `after` that survives thinning at
    /// rate `lambda`; [`NEVER`] when `lambda == 0`.
    pub fn next_accepted(&self, e: &DirectedEdge, after: f64, lambda: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidRate(lambda));
        }
        Ok(self.first_after(e.stream_id(), after, lambda))
    }

    pub(crate) fn first_after(&self, id: u64, after: f64, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return NEVER;
        }
        EdgeStream::new(self, id, after)
            .find(|o| o.accepted(lambda))
            .map(|o| o.time)
            .unwrap_or(NEVER)
    }
}

/// Iterator over one edge's occurrences after a given time. Never ends.
pub struct EdgeStream<'a> {
    real: &'a Realization,
    id: u64,
    cell: u64,
    buf: Cell,
    pos: usize,
    after: f64,
}

impl<'a> EdgeStream<'a> {
    fn new(real: &'a Realization, id: u64, after: f64) -> Self {
        let after = after.max(0.0);
        let cell = after.floor() as u64;
        EdgeStream {
            real,
            id,
            cell,
            buf: real.cell(id, cell),
            pos: 0,
            after,
        }
    }
}

impl Iterator for EdgeStream<'_> {
    type Item = Occurrence;

    fn next(&mut self) -> Option<Occurrence> {
        loop {
            while self.pos < self.buf.len() {
                let o = self.buf[self.pos];
                self.pos += 1;
                if o.time > self.after {
                    return Some(o);
                }
            }
            self.cell += 1;
            self.buf = self.real.cell(self.id, self.cell);
            self.pos = 0;
        }
    }
}
