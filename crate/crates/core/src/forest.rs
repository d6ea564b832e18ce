//! Infection graphs `Ψ_1`, `Ψ_2`: who infected whom.
//!
//! Only parent pointers are stored. Events are append-only and every query
//! walks rootward.

use rustc_hash::FxHashMap;

use crate::engine::{EventRecord, InfectionType};
use crate::error::{Error, Result};
use crate::lattice::{l1_distance, Site, SiteSet};

#[derive(Clone, Debug, PartialEq)]
pub struct ForestNode {
    pub kind: InfectionType,
    pub time: f64,
    pub parent: Option<Site>,
}

#[derive(Clone, Debug, Default)]
pub struct InfectionForest {
    nodes: FxHashMap<Site, ForestNode>,
    roots: Vec<Site>,
    edges: usize,
}

impl InfectionForest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an initially infected, parentless site.
    pub fn add_root(&mut self, site: Site, kind: InfectionType) -> Result<()> {
        if self.nodes.contains_key(&site) {
            return Err(Error::AlreadyInfected(site));
        }
        self.nodes.insert(
            site.clone(),
            ForestNode {
                kind,
                time: 0.0,
                parent: None,
            },
        );
        self.roots.push(site);
        Ok(())
    }

    /// Adds the edge `(event.parent, event.site)` to `Ψ_{event.infection_type}`.
    pub fn record(&mut self, event: &EventRecord) -> Result<()> {
        if self.nodes.contains_key(&event.site) {
            return Err(Error::AlreadyInfected(event.site.clone()));
        }
        let bad_parent = || Error::BadParent {
            site: event.site.clone(),
            parent: event.parent.clone(),
        };
        let parent = self.nodes.get(&event.parent).ok_or_else(bad_parent)?;
        if parent.kind != event.infection_type
            || parent.time >= event.time
            || l1_distance(&event.parent, &event.site)? != 1
        {
            return Err(bad_parent());
        }
        self.nodes.insert(
            event.site.clone(),
            ForestNode {
                kind: event.infection_type,
                time: event.time,
                parent: Some(event.parent.clone()),
            },
        );
        self.edges += 1;
        Ok(())
    }

    pub fn node(&self, x: &Site) -> Option<&ForestNode> {
        self.nodes.get(x)
    }

    pub fn roots(&self) -> &[Site] {
        &self.roots
    }

    pub fn n_edges(&self) -> usize {
        self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.nodes.len()
    }

    /// Vertex set of `Ψ_kind`.
    pub fn vertices(&self, kind: InfectionType) -> SiteSet {
        self.nodes
            .iter()
            .filter(|(_, n)| n.kind == kind)
            .map(|(s, _)| s.clone())
            .collect()
    }

    /// The chain `x, parent(x), …, root`.
    pub fn path_to_seed(&self, x: &Site) -> Result<Vec<Site>> {
        let mut cur = x.clone();
        let mut path = vec![cur.clone()];
        loop {
            let node = self
                .nodes
                .get(&cur)
                .ok_or_else(|| Error::NotInfected(cur.clone()))?;
            match &node.parent {
                None => return Ok(path),
                Some(p) => {
                    // parent pointers only ever point to earlier sites, but a
                    // corrupted forest must not loop forever
                    if path.len() > self.nodes.len() {
                        return Err(Error::InvalidArgument(format!(
                            "cycle in parent chain of {x}"
                        )));
                    }
                    path.push(p.clone());
                    cur = p.clone();
                }
            }
        }
    }

    /// Root of the tree containing `x`.
    pub fn root_of(&self, x: &Site) -> Result<Site> {
        Ok(self.path_to_seed(x)?.pop().expect("path is never empty"))
    }
}

/// Result of [`validate_forest`]; `problems` lists every failed check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ForestReport {
    pub ok: bool,
    pub problems: Vec<String>,
}

/// Checks that `forest` is a forest on `Γ_1 ∪ Γ_2` with nearest-neighbor
/// edges, type-preserving parentage, and strictly earlier parents.
pub fn validate_forest(forest: &InfectionForest, gamma1: &SiteSet, gamma2: &SiteSet) -> ForestReport {
    let mut problems = Vec::new();

    for (kind, gamma) in [(InfectionType::One, gamma1), (InfectionType::Two, gamma2)] {
        let v = forest.vertices(kind);
        if &v != gamma {
            problems.push(format!(
                "vertex set of type {} has {} sites, expected {}",
                kind.index(),
                v.len(),
                gamma.len()
            ));
        }
    }

    let mut non_roots = 0;
    for (site, node) in &forest.nodes {
        let Some(parent) = &node.parent else { continue };
        non_roots += 1;
        match forest.nodes.get(parent) {
            None => problems.push(format!("{site}: parent {parent} not in forest")),
            Some(p) => {
                if p.kind != node.kind {
                    problems.push(format!("{site}: parent {parent} has another type"));
                }
                if p.time >= node.time {
                    problems.push(format!("{site}: parent {parent} infected no earlier"));
                }
            }
        }
        if l1_distance(site, parent).ok() != Some(1) {
            problems.push(format!("{site}: edge to {parent} is not nearest-neighbor"));
        }
    }

    // every rootward walk must end at a root within |V| steps
    let n = forest.nodes.len();
    for site in forest.nodes.keys() {
        let mut cur = site;
        let mut steps = 0;
        while let Some(Some(p)) = forest.nodes.get(cur).map(|x| x.parent.as_ref()) {
            steps += 1;
            if steps > n {
                problems.push(format!("{site}: parent chain does not reach a root"));
                break;
            }
            cur = p;
        }
    }

    if non_roots != forest.edges || forest.edges + forest.roots.len() != n {
        problems.push(format!(
            "edge count {} with {} roots on {} vertices",
            forest.edges,
            forest.roots.len(),
            n
        ));
    }

    ForestReport {
        ok: problems.is_empty(),
        problems,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: [i32; 2]) -> Site {
        Site::new(&c)
    }

    fn ev(n: u64, time: f64, site: [i32; 2], kind: InfectionType, parent: [i32; 2]) -> EventRecord {
        EventRecord {
            n,
            time,
            site: s(site),
            infection_type: kind,
            parent: s(parent),
        }
    }

    #[test]
    fn record_and_walk() {
        let mut f = InfectionForest::new();
        f.add_root(s([0, 0]), InfectionType::One).unwrap();
        f.record(&ev(1, 0.3, [1, 0], InfectionType::One, [0, 0])).unwrap();
        assert_eq!(f.n_edges(), 1);
        f.record(&ev(2, 0.5, [2, 0], InfectionType::One, [1, 0])).unwrap();
        f.record(&ev(3, 0.7, [1, 1], InfectionType::One, [1, 0])).unwrap();
        assert_eq!(f.n_edges(), 3);

        assert_eq!(f.path_to_seed(&s([0, 0])).unwrap(), vec![s([0, 0])]);
        let p = f.path_to_seed(&s([2, 0])).unwrap();
        assert_eq!(p, vec![s([2, 0]), s([1, 0]), s([0, 0])]);
        assert!(p.len() <= 3);
        assert!(p.windows(2).all(|w| l1_distance(&w[0], &w[1]).unwrap() == 1));
        assert!(f.path_to_seed(&s([9, 9])).is_err());
        assert_eq!(f.root_of(&s([1, 1])).unwrap(), s([0, 0]));

        let g1 = f.vertices(InfectionType::One);
        let r = validate_forest(&f, &g1, &SiteSet::new());
        assert!(r.ok, "{:?}", r.problems);
    }

    #[test]
    fn rejects_bad_records() {
        let mut f = InfectionForest::new();
        f.add_root(s([0, 0]), InfectionType::One).unwrap();
        f.add_root(s([1, 0]), InfectionType::Two).unwrap();
        assert!(f.add_root(s([0, 0]), InfectionType::Two).is_err());
        // duplicate site
        assert!(f.record(&ev(1, 0.1, [1, 0], InfectionType::One, [0, 0])).is_err());
        // mixed-type parentage
        assert!(f.record(&ev(1, 0.1, [2, 0], InfectionType::One, [1, 0])).is_err());
        // missing parent
        assert!(f.record(&ev(1, 0.1, [5, 5], InfectionType::One, [5, 4])).is_err());
        // not a neighbor
        assert!(f.record(&ev(1, 0.1, [0, 2], InfectionType::One, [0, 0])).is_err());
        assert_eq!(f.n_edges(), 0);
    }

    #[test]
    fn detects_injected_cycle() {
        let mut f = InfectionForest::new();
        f.add_root(s([0, 0]), InfectionType::One).unwrap();
        f.record(&ev(1, 0.2, [1, 0], InfectionType::One, [0, 0])).unwrap();
        f.record(&ev(2, 0.4, [1, 1], InfectionType::One, [1, 0])).unwrap();
        let g1 = f.vertices(InfectionType::One);
        assert!(validate_forest(&f, &g1, &SiteSet::new()).ok);

        // (1,0) <-> (1,1)
        f.nodes.get_mut(&s([1, 0])).unwrap().parent = Some(s([1, 1]));
        let r = validate_forest(&f, &g1, &SiteSet::new());
        assert!(!r.ok);
        assert!(r.problems.iter().any(|p| p.contains("root")));
        assert!(f.path_to_seed(&s([1, 1])).is_err());
    }

    #[test]
    fn detects_vertex_mismatch() {
        let mut f = InfectionForest::new();
        f.add_root(s([0, 0]), InfectionType::Two).unwrap();
        let wrong: SiteSet = [s([0, 0])].into_iter().collect();
        assert!(!validate_forest(&f, &wrong, &SiteSet::new()).ok);
        assert!(validate_forest(&f, &SiteSet::new(), &wrong).ok);
    }
}
