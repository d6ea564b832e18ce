//! Strangling and fertility of initial pairs.
//!
//! `blocker` strangles `seeds` when no infinite self-avoiding path starts in
//! `seeds` and avoids `blocker`. The search is finite: any site strictly
//! outside the blocker's bounding box has a coordinate that can be marched to
//! infinity without meeting the blocker, so reaching such a site is an escape.
//! If the search never leaves the box it is confined to finitely many sites.

use std::collections::VecDeque;

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::lattice::{bounding_box, neighbors, Site, SiteSet};

/// Outcome of the escape search, with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub strangled: bool,
    /// First site found outside the blocker's bounding box.
    pub escape: Option<Site>,
    /// Sites visited, in breadth-first order. When `strangled` this is the
    /// whole region reachable from the seeds.
    pub reached: Vec<Site>,
}

fn check_pair(blocker: &SiteSet, seeds: &SiteSet) -> Result<()> {
    if blocker.is_empty() {
        return Err(Error::EmptySet("blocker"));
    }
    if seeds.is_empty() {
        return Err(Error::EmptySet("seeds"));
    }
    let d = blocker.dim().unwrap();
    seeds.check_dim(d)?;
    if let Some(x) = blocker.first_common(seeds) {
        return Err(Error::NotDisjoint(x.clone()));
    }
    Ok(())
}

/// Breadth-first search from `seeds` through `Z^d ∖ blocker`, stopping at the
/// first site strictly outside `bounding_box(blocker)`.
pub fn explore(blocker: &SiteSet, seeds: &SiteSet) -> Result<Exploration> {
    check_pair(blocker, seeds)?;
    let bbox = bounding_box(blocker)?;

    let mut seen: FxHashSet<Site> = FxHashSet::default();
    let mut queue = VecDeque::new();
    let mut reached = Vec::new();
    for s in seeds {
        if seen.insert(s.clone()) {
            queue.push_back(s.clone());
        }
    }
    while let Some(x) = queue.pop_front() {
        reached.push(x.clone());
        if !bbox.contains(&x) {
            return Ok(Exploration {
                strangled: false,
                escape: Some(x),
                reached,
            });
        }
        for y in neighbors(&x) {
            if !blocker.contains(&y) && seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    Ok(Exploration {
        strangled: true,
        escape: None,
        reached,
    })
}

pub fn strangles(blocker: &SiteSet, seeds: &SiteSet) -> Result<bool> {
    Ok(explore(blocker, seeds)?.strangled)
}

/// Neither set strangles the other.
pub fn is_fertile(xi1: &SiteSet, xi2: &SiteSet) -> Result<bool> {
    Ok(!strangles(xi1, xi2)? && !strangles(xi2, xi1)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Fertile,
    Xi1StranglesXi2,
    Xi2StranglesXi1,
    Mutual,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Fertile => "fertile",
            Verdict::Xi1StranglesXi2 => "xi1-strangles-xi2",
            Verdict::Xi2StranglesXi1 => "xi2-strangles-xi1",
            Verdict::Mutual => "mutual",
        }
    }
}

pub fn verdict(xi1: &SiteSet, xi2: &SiteSet) -> Result<Verdict> {
    Ok(match (strangles(xi1, xi2)?, strangles(xi2, xi1)?) {
        (false, false) => Verdict::Fertile,
        (true, false) => Verdict::Xi1StranglesXi2,
        (false, true) => Verdict::Xi2StranglesXi1,
        (true, true) => Verdict::Mutual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;
    use proptest::prelude::*;

    fn set(v: &[[i32; 2]]) -> SiteSet {
        v.iter().map(|c| Site::new(c)).collect()
    }

    fn axial_ring() -> SiteSet {
        set(&[[-1, 0], [1, 0], [0, -1], [0, 1]])
    }

    fn full_ring() -> SiteSet {
        let b = LatticeBox::new(Site::new(&[-1, -1]), Site::new(&[1, 1])).unwrap();
        let mut r = b.sites();
        r.remove(&Site::new(&[0, 0]));
        r
    }

    /// Independent check: flood fill restricted to the blocker box enlarged by
    /// two, escaping iff the outer face of that box is reached.
    fn brute_strangles(blocker: &SiteSet, seeds: &SiteSet) -> bool {
        let outer = bounding_box(blocker).unwrap().enlarge(2);
        let on_face = |x: &Site| {
            (0..x.dim()).any(|i| {
                x.coords()[i] == outer.lo().coords()[i] || x.coords()[i] == outer.hi().coords()[i]
            })
        };
        let mut stack: Vec<Site> = seeds.iter().cloned().collect();
        let mut seen: std::collections::BTreeSet<Site> = stack.iter().cloned().collect();
        while let Some(x) = stack.pop() {
            if !outer.contains(&x) || on_face(&x) {
                return false;
            }
            for y in neighbors(&x) {
                if !blocker.contains(&y) && seen.insert(y.clone()) {
                    stack.push(y);
                }
            }
        }
        true
    }

    #[test]
    fn examples() {
        let origin = set(&[[0, 0]]);
        assert!(strangles(&axial_ring(), &origin).unwrap());
        assert!(!strangles(&set(&[[5, 5]]), &origin).unwrap());
        assert!(strangles(&full_ring(), &origin).unwrap());

        assert!(is_fertile(&origin, &set(&[[1, 0]])).unwrap());
        assert!(!is_fertile(&axial_ring(), &origin).unwrap());
        assert_eq!(
            verdict(&axial_ring(), &origin).unwrap(),
            Verdict::Xi1StranglesXi2
        );
        assert_eq!(
            verdict(&origin, &axial_ring()).unwrap(),
            Verdict::Xi2StranglesXi1
        );
    }

    #[test]
    fn errors() {
        let origin = set(&[[0, 0]]);
        assert!(matches!(
            strangles(&origin, &origin),
            Err(Error::NotDisjoint(_))
        ));
        assert!(strangles(&SiteSet::new(), &origin).is_err());
        assert!(strangles(&origin, &SiteSet::new()).is_err());
    }

    #[test]
    fn certificate_is_the_enclosed_region() {
        // 5x5 ring enclosing a 3x3 cavity
        let b = LatticeBox::new(Site::new(&[-2, -2]), Site::new(&[2, 2])).unwrap();
        let cavity = LatticeBox::new(Site::new(&[-1, -1]), Site::new(&[1, 1])).unwrap();
        let ring = b.sites().difference(&cavity.sites());
        let e = explore(&ring, &set(&[[0, 0]])).unwrap();
        assert!(e.strangled);
        assert_eq!(e.reached.len(), 9);
        assert_eq!(e.reached[0], Site::new(&[0, 0]));
    }

    #[test]
    fn agrees_with_brute_force_on_some_3d_shells() {
        let cube = LatticeBox::new(Site::new(&[-1, -1, -1]), Site::new(&[1, 1, 1])).unwrap();
        let mut shell = cube.sites();
        shell.remove(&Site::origin(3));
        let seeds: SiteSet = [Site::origin(3)].into_iter().collect();
        assert!(strangles(&shell, &seeds).unwrap());
        assert!(brute_strangles(&shell, &seeds));
        let mut holed = shell.clone();
        holed.remove(&Site::new(&[0, 0, 1]));
        assert!(!strangles(&holed, &seeds).unwrap());
        assert!(!brute_strangles(&holed, &seeds));
    }

    fn window_pair() -> impl Strategy<Value = (SiteSet, SiteSet, [i32; 2])> {
        (proptest::collection::vec(0u8..3, 16), (-1i32..5, -1i32..5))
            .prop_filter_map("need nonempty sets", |(labels, extra)| {
                let mut b = SiteSet::new();
                let mut s = SiteSet::new();
                for (i, l) in labels.iter().enumerate() {
                    let x = Site::new(&[(i % 4) as i32, (i / 4) as i32]);
                    match l {
                        1 => {
                            b.insert(x);
                        }
                        2 => {
                            s.insert(x);
                        }
                        _ => {}
                    }
                }
                (!b.is_empty() && !s.is_empty()).then_some((b, s, [extra.0, extra.1]))
            })
    }

    proptest! {
        #[test]
        fn matches_brute_force_on_4x4_windows((b, s, _) in window_pair()) {
            prop_assert_eq!(strangles(&b, &s).unwrap(), brute_strangles(&b, &s));
        }

        #[test]
        fn monotone_in_blocker((b, s, extra) in window_pair()) {
            let x = Site::new(&extra);
            if strangles(&b, &s).unwrap() && !s.contains(&x) {
                let mut bigger = b.clone();
                bigger.insert(x);
                prop_assert!(strangles(&bigger, &s).unwrap());
            }
        }

        #[test]
        fn strangled_region_stays_in_box((b, s, _) in window_pair()) {
            let e = explore(&b, &s).unwrap();
            if e.strangled {
                let bbox = bounding_box(&b).unwrap();
                prop_assert!(e.reached.iter().all(|x| bbox.contains(x)));
            }
        }
    }
}
