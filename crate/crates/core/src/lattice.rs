//! Geometry of the cubic lattice `Z^d`.
//!
//! Sites are stored as short coordinate vectors; everything in here is a pure
//! function over immutable values.

use std::collections::btree_set;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest absolute coordinate (and stop radius) accepted at configuration
/// time. Leaves headroom so that growth from a validated configuration cannot
/// overflow `i32` coordinates.
pub const COORD_LIMIT: i64 = 1 << 30;

/// A point of `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(SmallVec<[i32; 4]>);

impl Site {
    pub fn new(coords: &[i32]) -> Self {
        Site(SmallVec::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Site(smallvec::smallvec![0; dim])
    }

    /// Checked constructor from wide integers; rejects coordinates beyond
    /// [`COORD_LIMIT`].
    pub fn try_from_i64(coords: &[i64]) -> Result<Self> {
        let mut out = SmallVec::with_capacity(coords.len());
        for &c in coords {
            if c.unsigned_abs() > COORD_LIMIT as u64 {
                return Err(Error::OutOfRange(c));
            }
            out.push(c as i32);
        }
        Ok(Site(out))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    /// Max-norm distance from the origin.
    pub fn linf_norm(&self) -> i64 {
        self.0.iter().map(|&c| i64::from(c).abs()).max().unwrap_or(0)
    }

    /// The neighbor reached by direction index `dir` (see [`neighbors`] for
    /// the ordering).
    pub fn step(&self, dir: usize) -> Site {
        let d = self.dim();
        debug_assert!(dir < 2 * d);
        let mut c = self.0.clone();
        if dir < d {
            c[dir] -= 1;
        } else {
            c[2 * d - 1 - dir] += 1;
        }
        Site(c)
    }

    fn check_dim(&self, other: &Site) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses `(a,b,…)`; whitespace around numbers is allowed.
impl FromStr for Site {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected a tuple like (0,1), got {s:?}"));
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let coords = inner
            .split(',')
            .map(|c| c.trim().parse::<i64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Site::try_from_i64(&coords)
    }
}

impl Serialize for Site {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i64>::deserialize(d)?;
        Site::try_from_i64(&v).map_err(serde::de::Error::custom)
    }
}

/// `δ(x, y) = Σ |x_i − y_i|`.
pub fn l1_distance(x: &Site, y: &Site) -> Result<u64> {
    x.check_dim(y)?;
    Ok(x.0
        .iter()
        .zip(y.0.iter())
        .map(|(&a, &b)| (i64::from(a) - i64::from(b)).unsigned_abs())
        .sum())
}

/// Number of nearest neighbors of any site in dimension `dim`.
pub fn direction_count(dim: usize) -> usize {
    2 * dim
}

/// Index of the direction opposite to `dir`.
pub fn opposite(dim: usize, dir: usize) -> usize {
    2 * dim - 1 - dir
}

/// Direction index taking `from` to `to`, if they are nearest neighbors.
pub fn direction_between(from: &Site, to: &Site) -> Option<usize> {
    if from.dim() != to.dim() {
        return None;
    }
    let d = from.dim();
    let mut found = None;
    for i in 0..d {
        match i64::from(to.0[i]) - i64::from(from.0[i]) {
            0 => {}
            -1 if found.is_none() => found = Some(i),
            1 if found.is_none() => found = Some(2 * d - 1 - i),
            _ => return None,
        }
    }
    found
}

/// The `2d` nearest neighbors of `x`, ordered lexicographically by offset
/// vector: `−e_1, …, −e_d, +e_d, …, +e_1`.
pub fn neighbors(x: &Site) -> Vec<Site> {
    (0..direction_count(x.dim())).map(|k| x.step(k)).collect()
}

/// A finite set of sites sharing one dimension, iterated in lexicographic
/// order.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct SiteSet(BTreeSet<Site>);

impl SiteSet {
    pub fn new() -> Self {
        SiteSet(BTreeSet::new())
    }

    /// Builds a set, rejecting members whose dimension differs from the
    /// first.
    pub fn from_sites<I: IntoIterator<Item = Site>>(sites: I) -> Result<Self> {
        let mut set = BTreeSet::new();
        let mut dim = None;
        for s in sites {
            match dim {
                None => dim = Some(s.dim()),
                Some(d) if d != s.dim() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: s.dim(),
                    })
                }
                _ => {}
            }
            set.insert(s);
        }
        Ok(SiteSet(set))
    }

    pub fn dim(&self) -> Option<usize> {
        self.0.first().map(Site::dim)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.0.contains(x)
    }

    pub fn insert(&mut self, x: Site) -> bool {
        debug_assert!(self.dim().is_none_or(|d| d == x.dim()));
        self.0.insert(x)
    }

    pub fn remove(&mut self, x: &Site) -> bool {
        self.0.remove(x)
    }

    pub fn iter(&self) -> btree_set::Iter<'_, Site> {
        self.0.iter()
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        SiteSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &SiteSet) -> SiteSet {
        SiteSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &SiteSet) -> SiteSet {
        SiteSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &SiteSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// First shared member, if any.
    pub fn first_common<'a>(&'a self, other: &'a SiteSet) -> Option<&'a Site> {
        self.0.intersection(&other.0).next()
    }

    /// Largest max-norm over the members; 0 for the empty set.
    pub fn linf_reach(&self) -> i64 {
        self.0.iter().map(Site::linf_norm).max().unwrap_or(0)
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != dim => Err(Error::DimensionMismatch {
                expected: dim,
                found: d,
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

/// Formats as semicolon-separated tuples, e.g. `(0,0);(2,1)`.
impl fmt::Display for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Inverse of the `Display` form; the empty string is the empty set.
impl FromStr for SiteSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(SiteSet::new());
        }
        let sites = s.split(';').map(str::parse).collect::<Result<Vec<Site>>>()?;
        let n = sites.len();
        let set = SiteSet::from_sites(sites)?;
        if set.len() != n {
            return Err(Error::Parse(format!("repeated site in {s:?}")));
        }
        Ok(set)
    }
}

impl FromIterator<Site> for SiteSet {
    /// Panics in debug builds on mixed dimensions; use [`SiteSet::from_sites`]
    /// for untrusted input.
    fn from_iter<I: IntoIterator<Item = Site>>(iter: I) -> Self {
        let set: BTreeSet<Site> = iter.into_iter().collect();
        debug_assert!(set
            .iter()
            .all(|s| Some(s.dim()) == set.first().map(Site::dim)));
        SiteSet(set)
    }
}

impl<'a> IntoIterator for &'a SiteSet {
    type Item = &'a Site;
    type IntoIter = btree_set::Iter<'a, Site>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl IntoIterator for SiteSet {
    type Item = Site;
    type IntoIter = btree_set::IntoIter<Site>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl Serialize for SiteSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter())
    }
}

impl<'de> Deserialize<'de> for SiteSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<Site>::deserialize(d)?;
        SiteSet::from_sites(v).map_err(serde::de::Error::custom)
    }
}

/// `∂η`: members of `eta` with at least one nearest neighbor outside `eta`.
pub fn inner_boundary(eta: &SiteSet) -> SiteSet {
    eta.iter()
        .filter(|x| neighbors(x).iter().any(|y| !eta.contains(y)))
        .cloned()
        .collect()
}

/// `η° = η ∖ ∂η`.
pub fn interior(eta: &SiteSet) -> SiteSet {
    eta.iter()
        .filter(|x| neighbors(x).iter().all(|y| eta.contains(y)))
        .cloned()
        .collect()
}

/// Axis-aligned box `{x : lo_i ≤ x_i ≤ hi_i}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct LatticeBox {
    lo: Site,
    hi: Site,
}

impl LatticeBox {
    pub fn new(lo: Site, hi: Site) -> Result<Self> {
        lo.check_dim(&hi)?;
        if let Some(i) = (0..lo.dim()).find(|&i| lo.0[i] > hi.0[i]) {
            return Err(Error::InvalidArgument(format!(
                "box corner {lo} exceeds {hi} in coordinate {i}"
            )));
        }
        Ok(LatticeBox { lo, hi })
    }

    pub fn lo(&self) -> &Site {
        &self.lo
    }

    pub fn hi(&self) -> &Site {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.dim() == self.dim()
            && x.0
                .iter()
                .zip(self.lo.0.iter().zip(self.hi.0.iter()))
                .all(|(c, (l, h))| l <= c && c <= h)
    }

    /// Number of lattice points in the box.
    pub fn volume(&self) -> u128 {
        self.lo
            .0
            .iter()
            .zip(self.hi.0.iter())
            .map(|(&l, &h)| (i64::from(h) - i64::from(l) + 1) as u128)
            .product()
    }

    /// `B^{+k}`: every face pushed out by `k` sites.
    pub fn enlarge(&self, k: u32) -> LatticeBox {
        let k = k as i32;
        LatticeBox {
            lo: Site(self.lo.0.iter().map(|c| c - k).collect()),
            hi: Site(self.hi.0.iter().map(|c| c + k).collect()),
        }
    }

    /// All lattice points of the box in lexicographic order.
    pub fn sites(&self) -> SiteSet {
        let d = self.dim();
        let mut out = BTreeSet::new();
        let mut cur = self.lo.clone();
        loop {
            out.insert(cur.clone());
            // odometer increment, last coordinate fastest
            let mut i = d;
            loop {
                if i == 0 {
                    return SiteSet(out);
                }
                i -= 1;
                if cur.0[i] < self.hi.0[i] {
                    cur.0[i] += 1;
                    break;
                }
                cur.0[i] = self.lo.0[i];
            }
        }
    }
}

impl fmt::Display for LatticeBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} .. {}]", self.lo, self.hi)
    }
}

/// `B_η`: the smallest box containing `eta`, with corners `m̲(η)` and `m̄(η)`.
pub fn bounding_box(eta: &SiteSet) -> Result<LatticeBox> {
    let mut it = eta.iter();
    let first = it.next().ok_or(Error::EmptySet("bounding box input"))?;
    let mut lo = first.clone();
    let mut hi = first.clone();
    for x in it {
        for i in 0..lo.dim() {
            lo.0[i] = lo.0[i].min(x.0[i]);
            hi.0[i] = hi.0[i].max(x.0[i]);
        }
    }
    Ok(LatticeBox { lo, hi })
}

/// `B_box^{+k}` as a free function.
pub fn enlarge(b: &LatticeBox, k: u32) -> LatticeBox {
    b.enlarge(k)
}

pub fn box_sites(b: &LatticeBox) -> SiteSet {
    b.sites()
}

pub fn box_contains(b: &LatticeBox, x: &Site) -> bool {
    b.contains(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(c: &[i32]) -> Site {
        Site::new(c)
    }

    #[test]
    fn parse_sets() {
        let a: SiteSet = "(0,0);(2,1)".parse().unwrap();
        assert_eq!(a, [s(&[0, 0]), s(&[2, 1])].into_iter().collect());
        assert_eq!(a.to_string(), "(0,0);(2,1)");
        assert_eq!(" ( -1 , 3 ) ".parse::<Site>().unwrap(), s(&[-1, 3]));
        assert!("".parse::<SiteSet>().unwrap().is_empty());
        for bad in ["(0,0);", "0,0", "(0,x)", "(0,0);(1,0,0)", "(0,0);(0,0)", "(9999999999,0)"] {
            assert!(bad.parse::<SiteSet>().is_err(), "{bad}");
        }
    }

    fn block(n: i32) -> SiteSet {
        (0..n)
            .flat_map(|i| (0..n).map(move |j| s(&[i, j])))
            .collect()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(l1_distance(&s(&[0, 0]), &s(&[1, 0])).unwrap(), 1);
        assert_eq!(l1_distance(&s(&[2, -1]), &s(&[-1, 3])).unwrap(), 7);
        assert_eq!(l1_distance(&s(&[4, 4]), &s(&[4, 4])).unwrap(), 0);
        assert!(matches!(
            l1_distance(&s(&[0, 0]), &s(&[0, 0, 0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn neighbor_order_is_lexicographic() {
        let n = neighbors(&s(&[0, 0]));
        assert_eq!(n, vec![s(&[-1, 0]), s(&[0, -1]), s(&[0, 1]), s(&[1, 0])]);
        let mut sorted = n.clone();
        sorted.sort();
        assert_eq!(n, sorted);

        let x = s(&[3, -2, 7]);
        let n3 = neighbors(&x);
        assert_eq!(n3.len(), 6);
        assert!(!n3.contains(&x));
        for (k, y) in n3.iter().enumerate() {
            assert_eq!(direction_between(&x, y), Some(k));
            assert_eq!(x.step(k).step(opposite(3, k)), x);
        }
    }

    #[test]
    fn boundary_and_interior() {
        let single: SiteSet = [s(&[5, 5])].into_iter().collect();
        assert_eq!(inner_boundary(&single), single);
        assert!(interior(&single).is_empty());

        let domino: SiteSet = [s(&[0, 0]), s(&[1, 0])].into_iter().collect();
        assert_eq!(inner_boundary(&domino), domino);

        let b = block(3);
        let bd = inner_boundary(&b);
        assert_eq!(bd.len(), 8);
        assert!(!bd.contains(&s(&[1, 1])));
        let int = interior(&b);
        assert_eq!(int, [s(&[1, 1])].into_iter().collect());
        assert!(int.is_disjoint(&bd));
        assert_eq!(int.union(&bd), b);

        assert!(inner_boundary(&SiteSet::new()).is_empty());
    }

    #[test]
    fn boxes() {
        let eta: SiteSet = [s(&[0, 0]), s(&[2, 1])].into_iter().collect();
        let b = bounding_box(&eta).unwrap();
        assert_eq!((b.lo(), b.hi()), (&s(&[0, 0]), &s(&[2, 1])));
        assert!(bounding_box(&SiteSet::new()).is_err());

        let single: SiteSet = [s(&[3, -4])].into_iter().collect();
        let b1 = bounding_box(&single).unwrap();
        assert_eq!(b1.lo(), b1.hi());

        let e2 = b1.enlarge(2);
        assert_eq!(e2.volume(), 25);
        assert_eq!(e2.sites().len(), 25);
        assert_eq!(b1.enlarge(0), b1);
        assert_eq!(b1.enlarge(1).enlarge(1), e2);

        let r = LatticeBox::new(s(&[0, 0]), s(&[1, 2])).unwrap();
        assert_eq!(box_sites(&r).len(), 6);
        assert!(box_contains(&r, r.lo()));
        assert!(!box_contains(&r, &s(&[0, 3])));
        assert!(LatticeBox::new(s(&[1, 0]), s(&[0, 0])).is_err());
    }

    #[test]
    fn site_set_rejects_mixed_dims() {
        assert!(SiteSet::from_sites([s(&[0, 0]), s(&[0, 0, 0])]).is_err());
        assert!(Site::try_from_i64(&[COORD_LIMIT + 1, 0]).is_err());
    }

    fn site2() -> impl Strategy<Value = Site> {
        (-20i32..20, -20i32..20).prop_map(|(a, b)| s(&[a, b]))
    }

    fn set2() -> impl Strategy<Value = SiteSet> {
        proptest::collection::vec((-3i32..4, -3i32..4), 1..20)
            .prop_map(|v| v.into_iter().map(|(a, b)| s(&[a, b])).collect())
    }

    proptest! {
        #[test]
        fn l1_is_a_metric(x in site2(), y in site2(), z in site2()) {
            let dxy = l1_distance(&x, &y).unwrap();
            prop_assert_eq!(dxy, l1_distance(&y, &x).unwrap());
            prop_assert_eq!(dxy == 0, x == y);
            prop_assert!(l1_distance(&x, &z).unwrap() <= dxy + l1_distance(&y, &z).unwrap());
        }

        #[test]
        fn boundary_matches_definition(eta in set2()) {
            let bd = inner_boundary(&eta);
            prop_assert!(bd.len() <= eta.len());
            // brute force: scan an enclosing box for outside neighbors
            let outer = bounding_box(&eta).unwrap().enlarge(1);
            for x in eta.iter() {
                let has_out = outer.sites().iter().any(|y| {
                    l1_distance(x, y).unwrap() == 1 && !eta.contains(y)
                });
                prop_assert_eq!(bd.contains(x), has_out);
            }
        }

        #[test]
        fn display_parse_round_trip(eta in set2()) {
            prop_assert_eq!(eta.to_string().parse::<SiteSet>().unwrap(), eta);
        }

        #[test]
        fn bounding_box_is_minimal(eta in set2()) {
            let b = bounding_box(&eta).unwrap();
            prop_assert!(eta.iter().all(|x| b.contains(x)));
            for i in 0..2 {
                prop_assert!(eta.iter().any(|x| x.coords()[i] == b.lo().coords()[i]));
                prop_assert!(eta.iter().any(|x| x.coords()[i] == b.hi().coords()[i]));
            }
        }
    }
}
