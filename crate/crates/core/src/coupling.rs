//! Several processes on one randomness realization.
//!
//! Two processes started from `(ζ_1, ζ_2)` and `(ζ_1', ζ_2')` with the same
//! union `ζ`, where every type-2 site of `∂ζ` in the first is also type 2 in
//! the second, satisfy at all times
//!
//! 1. `Γ_1(t) ∖ ζ° ⊇ Γ_1'(t) ∖ ζ°`
//! 2. `Γ_2(t) ∖ ζ° ⊆ Γ_2'(t) ∖ ζ°`
//! 3. `Γ(t) ⊇ Γ'(t)`
//!
//! when both are driven by the same edge streams. [`check_inclusions`] verifies
//! this on recorded traces at every time of the merged event sequence; states
//! are piecewise constant, so that is exhaustive.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Serialize, Serializer};

use crate::engine::{GrowthState, InfectionType, ModelConfig, Outcome, StopCondition, Trace};
use crate::error::{Error, Result};
use crate::lattice::{bounding_box, inner_boundary, interior, LatticeBox, Site, SiteSet};
use crate::randomness::{derive_seed, Realization, NEVER};

/// Serializes a time, writing `"never"` for the infinite sentinel.
pub fn serialize_time<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if t.is_finite() {
        s.serialize_f64(*t)
    } else {
        s.serialize_str("never")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingMode {
    /// Every process reads the same realization from time 0.
    SharedFromStart,
    /// Each process has its own realization until `τ`, the first time the
    /// first process has infected all of `B_ξ^{+2}` (`ξ` = union of all
    /// initial sets); from `τ` on all of them read one shared realization.
    IndependentUntilTau,
}

impl CouplingMode {
    pub fn label(self) -> &'static str {
        match self {
            CouplingMode::SharedFromStart => "shared",
            CouplingMode::IndependentUntilTau => "until-tau",
        }
    }
}

fn check_disjoint(a: &SiteSet, b: &SiteSet) -> Result<()> {
    match a.first_common(b) {
        Some(x) => Err(Error::NotDisjoint(x.clone())),
        None => Ok(()),
    }
}

/// `ζ_1 ∪ ζ_2 = ζ_1' ∪ ζ_2'` and `ζ_2 ∩ ∂ζ ⊆ ζ_2' ∩ ∂ζ`.
pub fn lemma1_precondition(z1: &SiteSet, z2: &SiteSet, z1p: &SiteSet, z2p: &SiteSet) -> Result<bool> {
    check_disjoint(z1, z2)?;
    check_disjoint(z1p, z2p)?;
    let zeta = z1.union(z2);
    if zeta != z1p.union(z2p) {
        return Ok(false);
    }
    let bd = inner_boundary(&zeta);
    Ok(z2.intersection(&bd).is_subset(&z2p.intersection(&bd)))
}

/// Traces of a coupled run.
#[derive(Clone, Debug)]
pub struct CoupledRun {
    pub mode: CouplingMode,
    pub traces: Vec<Trace>,
    /// Switch time in [`CouplingMode::IndependentUntilTau`]; `NEVER` if the box
    /// was not covered before the first process stopped, or in shared mode.
    pub tau: f64,
    pub tau_box: Option<LatticeBox>,
}

/// Seed of process `i`'s private realization before `τ`.
pub fn pre_tau_seed(seed: u64, process: usize) -> u64 {
    derive_seed(seed, process as u64 + 1)
}

/// Runs every configuration under `stop`, advancing all of them through one
/// merged event loop. Events of different processes at the same time are one
/// merged step.
pub fn run_coupled(
    configs: &[ModelConfig],
    seed: u64,
    mode: CouplingMode,
    stop: &StopCondition,
) -> Result<CoupledRun> {
    stop.validate()?;
    let first = configs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no configurations to couple".into()))?;
    if configs.iter().any(|c| c.dim() != first.dim()) {
        return Err(Error::InconsistentCoupling("dimension"));
    }
    if configs.iter().any(|c| c.lambda() != first.lambda()) {
        return Err(Error::InconsistentCoupling("lambda"));
    }

    let shared = Realization::new(seed);
    let mut states = configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let real = match mode {
                CouplingMode::SharedFromStart => shared.clone(),
                CouplingMode::IndependentUntilTau => Realization::new(pre_tau_seed(seed, i)),
            };
            GrowthState::init(c.clone(), real)
        })
        .collect::<Result<Vec<_>>>()?;

    // sites of the τ box not yet infected in process 0
    let mut tau_box = None;
    let mut missing: FxHashSet<Site> = FxHashSet::default();
    let mut tau = NEVER;
    if mode == CouplingMode::IndependentUntilTau {
        let xi = configs
            .iter()
            .fold(SiteSet::new(), |acc, c| acc.union(c.xi1()).union(c.xi2()));
        let b = bounding_box(&xi)?.enlarge(2);
        missing = b
            .sites()
            .into_iter()
            .filter(|x| states[0].status(x).is_none())
            .collect();
        tau_box = Some(b);
        if missing.is_empty() {
            tau = 0.0;
            states.iter_mut().for_each(|s| s.rebase(shared.clone(), 0.0));
        }
    }

    let mut done: Vec<Option<Outcome>> = vec![None; states.len()];
    loop {
        let mut next = NEVER;
        let mut times = vec![NEVER; states.len()];
        for (i, st) in states.iter_mut().enumerate() {
            if done[i].is_some() {
                continue;
            }
            if let Some(o) = stop.check(st) {
                done[i] = Some(o);
                continue;
            }
            times[i] = st.next_event_time();
            if !times[i].is_finite() {
                done[i] = Some(Outcome::Stalled);
            }
            next = next.min(times[i]);
        }
        if done.iter().all(Option::is_some) {
            break;
        }
        for (i, st) in states.iter_mut().enumerate() {
            if done[i].is_none() && times[i] == next {
                let ev = st.step()?;
                if i == 0 && !tau.is_finite() {
                    missing.remove(&ev.site);
                }
            }
        }
        if mode == CouplingMode::IndependentUntilTau && !tau.is_finite() && missing.is_empty() && tau_box.is_some() {
            tau = next;
            states.iter_mut().for_each(|s| s.rebase(shared.clone(), next));
        }
    }

    let traces = states
        .iter()
        .zip(done)
        .map(|(st, o)| st.trace(o.expect("all processes stopped")))
        .collect();
    Ok(CoupledRun {
        mode,
        traces,
        tau,
        tau_box,
    })
}

/// `inf{t : box ⊆ Γ(t)}` over the trace, `NEVER` if not covered by its end.
pub fn tau_box_covered(trace: &Trace, b: &LatticeBox) -> f64 {
    let cfg = &trace.config;
    let mut missing: FxHashSet<Site> = b
        .sites()
        .into_iter()
        .filter(|x| !cfg.xi1().contains(x) && !cfg.xi2().contains(x))
        .collect();
    if missing.is_empty() {
        return 0.0;
    }
    for e in &trace.events {
        missing.remove(&e.site);
        if missing.is_empty() {
            return e.time;
        }
    }
    NEVER
}

/// Inclusion results at one merged event time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionCheck {
    #[serde(rename = "t")]
    pub time: f64,
    pub incl1: bool,
    pub incl2: bool,
    pub incl3: bool,
}

impl InclusionCheck {
    pub fn pass(&self) -> bool {
        self.incl1 && self.incl2 && self.incl3
    }
}

/// Both states at the first failing time, with the offending sites.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub check: InclusionCheck,
    pub a_gamma1: SiteSet,
    pub a_gamma2: SiteSet,
    pub b_gamma1: SiteSet,
    pub b_gamma2: SiteSet,
    /// Sites breaking (1), (2), (3) respectively.
    pub witnesses: [Vec<Site>; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionReport {
    pub pass: bool,
    /// Checks cover merged times up to here.
    #[serde(serialize_with = "serialize_time")]
    pub horizon: f64,
    pub checks: Vec<InclusionCheck>,
    pub first_violation: Option<Violation>,
}

/// Incrementally maintained violation sets of the three inclusions.
struct InclusionTracker<'a> {
    interior: &'a SiteSet,
    a: FxHashMap<Site, InfectionType>,
    b: FxHashMap<Site, InfectionType>,
    bad: [FxHashSet<Site>; 3],
}

impl InclusionTracker<'_> {
    fn infect_a(&mut self, s: &Site, k: InfectionType) {
        self.a.insert(s.clone(), k);
        self.bad[2].remove(s);
        if self.interior.contains(s) {
            return;
        }
        match k {
            InfectionType::One => {
                self.bad[0].remove(s);
            }
            InfectionType::Two => {
                if self.b.get(s) != Some(&InfectionType::Two) {
                    self.bad[1].insert(s.clone());
                }
            }
        }
    }

    fn infect_b(&mut self, s: &Site, k: InfectionType) {
        self.b.insert(s.clone(), k);
        if !self.a.contains_key(s) {
            self.bad[2].insert(s.clone());
        }
        if self.interior.contains(s) {
            return;
        }
        match k {
            InfectionType::One => {
                if self.a.get(s) != Some(&InfectionType::One) {
                    self.bad[0].insert(s.clone());
                }
            }
            InfectionType::Two => {
                self.bad[1].remove(s);
            }
        }
    }

    fn check(&self, time: f64) -> InclusionCheck {
        InclusionCheck {
            time,
            incl1: self.bad[0].is_empty(),
            incl2: self.bad[1].is_empty(),
            incl3: self.bad[2].is_empty(),
        }
    }

    fn snapshot(&self, check: InclusionCheck) -> Violation {
        let pick = |m: &FxHashMap<Site, InfectionType>, k| {
            m.iter().filter(|(_, &v)| v == k).map(|(s, _)| s.clone()).collect()
        };
        let sorted = |s: &FxHashSet<Site>| {
            let mut v: Vec<Site> = s.iter().cloned().collect();
            v.sort();
            v
        };
        Violation {
            check,
            a_gamma1: pick(&self.a, InfectionType::One),
            a_gamma2: pick(&self.a, InfectionType::Two),
            b_gamma1: pick(&self.b, InfectionType::One),
            b_gamma2: pick(&self.b, InfectionType::Two),
            witnesses: [sorted(&self.bad[0]), sorted(&self.bad[1]), sorted(&self.bad[2])],
        }
    }
}

fn require_precondition(a: &Trace, b: &Trace, zeta: &SiteSet) -> Result<()> {
    let (ca, cb) = (&a.config, &b.config);
    if !lemma1_precondition(ca.xi1(), ca.xi2(), cb.xi1(), cb.xi2())? {
        return Err(Error::PreconditionUnmet(
            "initial pairs violate the union or boundary condition".into(),
        ));
    }
    if &ca.xi1().union(ca.xi2()) != zeta {
        return Err(Error::PreconditionUnmet("zeta is not the common union".into()));
    }
    if ca.lambda() != cb.lambda() || ca.dim() != cb.dim() {
        return Err(Error::PreconditionUnmet("rates or dimensions differ".into()));
    }
    Ok(())
}

/// Evaluates inclusions 1 to 3 at time 0 and at every merged event time up
/// to the shorter trace's horizon. Refuses pairs that fail the precondition.
pub fn check_inclusions(a: &Trace, b: &Trace, zeta: &SiteSet) -> Result<InclusionReport> {
    require_precondition(a, b, zeta)?;
    let int = interior(zeta);
    let horizon = a.horizon().min(b.horizon());
    let mut tr = InclusionTracker {
        interior: &int,
        a: FxHashMap::default(),
        b: FxHashMap::default(),
        bad: Default::default(),
    };
    for k in InfectionType::BOTH {
        for s in a.config.initial(k) {
            tr.infect_a(s, k);
        }
        for s in b.config.initial(k) {
            tr.infect_b(s, k);
        }
    }

    let mut checks = vec![tr.check(0.0)];
    let mut first_violation = (!checks[0].pass()).then(|| tr.snapshot(checks[0].clone()));
    let (mut i, mut j) = (0, 0);
    loop {
        let ta = a.events.get(i).map_or(NEVER, |e| e.time);
        let tb = b.events.get(j).map_or(NEVER, |e| e.time);
        let t = ta.min(tb);
        if !t.is_finite() || t > horizon {
            break;
        }
        while i < a.events.len() && a.events[i].time == t {
            tr.infect_a(&a.events[i].site, a.events[i].infection_type);
            i += 1;
        }
        while j < b.events.len() && b.events[j].time == t {
            tr.infect_b(&b.events[j].site, b.events[j].infection_type);
            j += 1;
        }
        let c = tr.check(t);
        if !c.pass() && first_violation.is_none() {
            first_violation = Some(tr.snapshot(c.clone()));
        }
        checks.push(c);
    }

    Ok(InclusionReport {
        pass: first_violation.is_none(),
        horizon,
        checks,
        first_violation,
    })
}

/// Edge-for-edge transfer of type-1 paths rooted on `∂ζ ∩ ζ_1 ∩ ζ_1'`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathTransferReport {
    pub qualifying_roots: Vec<Site>,
    pub edges_checked: usize,
    /// `(parent, site)` edges of the first process absent from the second.
    pub missing: Vec<(Site, Site)>,
    pub pass: bool,
}

/// Every type-1 forest edge of `a` whose tree is rooted at a qualifying site
/// and that appears by the common horizon must also be a type-1 forest edge
/// of `b`, created no later.
pub fn path_transfer_check(a: &Trace, b: &Trace, zeta: &SiteSet) -> Result<PathTransferReport> {
    require_precondition(a, b, zeta)?;
    let qualifying: SiteSet = inner_boundary(zeta)
        .intersection(a.config.xi1())
        .intersection(b.config.xi1());
    let horizon = a.horizon().min(b.horizon());

    let b_edges: FxHashMap<&Site, (&Site, InfectionType, f64)> = b
        .events
        .iter()
        .map(|e| (&e.site, (&e.parent, e.infection_type, e.time)))
        .collect();
    let mut root: FxHashMap<&Site, &Site> = FxHashMap::default();
    for s in a.config.xi1() {
        root.insert(s, s);
    }
    let mut edges_checked = 0;
    let mut missing = Vec::new();
    for e in a.events.iter().take_while(|e| e.time <= horizon) {
        if e.infection_type != InfectionType::One {
            continue;
        }
        let r = *root.get(&e.parent).expect("type-1 parent precedes child");
        root.insert(&e.site, r);
        if !qualifying.contains(r) {
            continue;
        }
        edges_checked += 1;
        match b_edges.get(&e.site) {
            Some(&(p, InfectionType::One, t)) if p == &e.parent && t <= e.time => {}
            _ => missing.push((e.parent.clone(), e.site.clone())),
        }
    }
    Ok(PathTransferReport {
        qualifying_roots: qualifying.into_iter().collect(),
        edges_checked,
        pass: missing.is_empty(),
        missing,
    })
}

/// Times at which type 2 first holds a site of max-norm `≥ radius`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReachReport {
    #[serde(serialize_with = "serialize_time")]
    pub a_time: f64,
    #[serde(serialize_with = "serialize_time")]
    pub b_time: f64,
    pub pass: bool,
}

fn first_type2_reach(t: &Trace, radius: i64) -> f64 {
    if t.config.xi2().linf_reach() >= radius {
        return 0.0;
    }
    t.events
        .iter()
        .find(|e| e.infection_type == InfectionType::Two && e.site.linf_norm() >= radius)
        .map_or(NEVER, |e| e.time)
}

/// Whenever type 2 of `a` reaches `radius` within the common horizon, type 2
/// of `b` has reached it no later. `radius` must exceed every norm in `ζ`.
pub fn type2_reach_check(a: &Trace, b: &Trace, zeta: &SiteSet, radius: i64) -> Result<ReachReport> {
    require_precondition(a, b, zeta)?;
    if radius <= zeta.linf_reach() {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} does not clear the initial union"
        )));
    }
    let horizon = a.horizon().min(b.horizon());
    let a_time = first_type2_reach(a, radius);
    let b_time = first_type2_reach(b, radius);
    let pass = a_time > horizon || b_time <= a_time;
    Ok(ReachReport { a_time, b_time, pass })
}
