//! Two-type growth dynamics on a sparse, unbounded `Z^d`.
//!
//! Type 1 spreads along every occurrence of an edge stream, type 2 along the
//! occurrences whose mark is below `λ`. At each step the next event time is the
//! earliest relevant occurrence over all edges `(x, y)` with `x` infected and
//! `y` not.
//!
//! The agenda is one min-heap per type holding, for each eligible edge, its
//! first relevant occurrence after the moment it became eligible. An edge stays
//! eligible until its target is infected, and the global minimum is always
//! taken next, so no scheduled occurrence on a still-eligible edge is ever
//! passed over. Entries whose target got infected in the meantime are dropped
//! when they reach the top.
//!
//! Ties between numerically equal candidate times go to type 1, then to the
//! lexicographically smallest `(from, to)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forest::{validate_forest, ForestReport, InfectionForest};
use crate::lattice::{direction_count, Site, SiteSet, COORD_LIMIT};
use crate::randomness::{stream_id, DirectedEdge, Realization, NEVER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InfectionType {
    One,
    Two,
}

impl InfectionType {
    pub const BOTH: [InfectionType; 2] = [InfectionType::One, InfectionType::Two];

    pub fn index(self) -> u8 {
        match self {
            InfectionType::One => 1,
            InfectionType::Two => 2,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(InfectionType::One),
            2 => Ok(InfectionType::Two),
            other => Err(Error::BadType(other)),
        }
    }

    pub fn other(self) -> Self {
        match self {
            InfectionType::One => InfectionType::Two,
            InfectionType::Two => InfectionType::One,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl Serialize for InfectionType {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.index())
    }
}

impl<'de> Deserialize<'de> for InfectionType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        InfectionType::from_index(u8::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Dimension, type-2 rate (type 1 has rate 1) and initial sets.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    dim: usize,
    lambda: f64,
    xi1: SiteSet,
    xi2: SiteSet,
}

impl ModelConfig {
    pub fn new(dim: usize, lambda: f64, xi1: SiteSet, xi2: SiteSet) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidRate(lambda));
        }
        xi1.check_dim(dim)?;
        xi2.check_dim(dim)?;
        if let Some(x) = xi1.first_common(&xi2) {
            return Err(Error::NotDisjoint(x.clone()));
        }
        if xi1.is_empty() && xi2.is_empty() {
            return Err(Error::EmptySet("initial configuration"));
        }
        if let Some(x) = xi1.iter().chain(xi2.iter()).find(|x| x.linf_norm() > COORD_LIMIT) {
            return Err(Error::OutOfRange(x.linf_norm()));
        }
        Ok(ModelConfig {
            dim,
            lambda,
            xi1,
            xi2,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn xi1(&self) -> &SiteSet {
        &self.xi1
    }

    pub fn xi2(&self) -> &SiteSet {
        &self.xi2
    }

    pub fn initial(&self, kind: InfectionType) -> &SiteSet {
        match kind {
            InfectionType::One => &self.xi1,
            InfectionType::Two => &self.xi2,
        }
    }

    pub fn rate(&self, kind: InfectionType) -> f64 {
        match kind {
            InfectionType::One => 1.0,
            InfectionType::Two => self.lambda,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        ModelConfig::new(self.dim, lambda, self.xi1.clone(), self.xi2.clone())
    }

    /// Canonical text form, e.g. `dim=2;lambda=1;xi1=(0,0);xi2=(1,0)`.
    pub fn canonical(&self) -> String {
        format!(
            "dim={};lambda={};xi1={};xi2={}",
            self.dim, self.lambda, self.xi1, self.xi2
        )
    }

    /// First 16 hex digits of the SHA-256 of [`ModelConfig::canonical`].
    pub fn digest(&self) -> String {
        let h = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&h[..8])
    }
}

/// General rates `(λ_1, λ_2)` mapped onto `(1, λ)` with `λ ≤ 1` by dividing by
/// the larger rate and, if type 2 was faster, swapping the labels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateReduction {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Reduced type-2 rate.
    pub lambda: f64,
    /// Reduced time = original time × `time_scale`.
    pub time_scale: f64,
    /// Internal type 1 is the caller's type 2.
    pub relabel: bool,
}

pub fn reduce_rates(lambda1: f64, lambda2: f64) -> Result<RateReduction> {
    let ok = |l: f64| l.is_finite() && l >= 0.0;
    if !ok(lambda1) || !ok(lambda2) || (lambda1 == 0.0 && lambda2 == 0.0) {
        return Err(Error::InvalidRates(lambda1, lambda2));
    }
    let relabel = lambda2 > lambda1;
    let (hi, lo) = if relabel {
        (lambda2, lambda1)
    } else {
        (lambda1, lambda2)
    };
    Ok(RateReduction {
        lambda1,
        lambda2,
        lambda: lo / hi,
        time_scale: hi,
        relabel,
    })
}

impl RateReduction {
    /// Initial sets in internal labels.
    pub fn arrange(&self, xi1: SiteSet, xi2: SiteSet) -> (SiteSet, SiteSet) {
        if self.relabel {
            (xi2, xi1)
        } else {
            (xi1, xi2)
        }
    }
}

/// One infection: `site` catches type `infection_type` from `parent` at `time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub n: u64,
    #[serde(rename = "t")]
    pub time: f64,
    pub site: Site,
    #[serde(rename = "type")]
    pub infection_type: InfectionType,
    pub parent: Site,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Both types hold a site of max-norm at least `R`.
    CoexistProxy,
    /// The only initially present type reached max-norm `R`.
    RadiusReached,
    /// The type has no eligible edge left; it can never grow again.
    TypeDead(InfectionType),
    EventCap,
    /// No eligible edge has a finite candidate time (only possible at `λ = 0`).
    Stalled,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::CoexistProxy => "coexist-proxy",
            Outcome::RadiusReached => "radius-reached",
            Outcome::TypeDead(InfectionType::One) => "type-1-dead",
            Outcome::TypeDead(InfectionType::Two) => "type-2-dead",
            Outcome::EventCap => "event-cap",
            Outcome::Stalled => "stalled",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// When to end a run.
///
/// * `radius`: stop once every initially nonempty type holds a site of
///   max-norm `≥ R`; a run with a radius also stops as soon as one of those
///   types dies, since it could then never get there.
/// * `max_events`: stop after that many events.
/// * `stop_on_death`: stop as soon as a listed type dies.
///
/// Checks run in that order at every state, starting with the initial one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StopCondition {
    pub radius: Option<i64>,
    pub max_events: Option<u64>,
    pub stop_on_death: Vec<InfectionType>,
}

impl StopCondition {
    pub fn radius(r: i64) -> Self {
        StopCondition {
            radius: Some(r),
            ..Default::default()
        }
    }

    pub fn events(n: u64) -> Self {
        StopCondition {
            max_events: Some(n),
            ..Default::default()
        }
    }

    pub fn with_max_events(mut self, n: u64) -> Self {
        self.max_events = Some(n);
        self
    }

    pub fn with_death_stop(mut self, kind: InfectionType) -> Self {
        if !self.stop_on_death.contains(&kind) {
            self.stop_on_death.push(kind);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius.is_none() && self.max_events.is_none() {
            return Err(Error::UnboundedStop);
        }
        if let Some(r) = self.radius {
            if !(0..=COORD_LIMIT).contains(&r) {
                return Err(Error::OutOfRange(r));
            }
        }
        if let Some(n) = self.max_events {
            if n > COORD_LIMIT as u64 {
                return Err(Error::OutOfRange(n as i64));
            }
        }
        Ok(())
    }

    pub fn check(&self, state: &GrowthState) -> Option<Outcome> {
        let present: Vec<InfectionType> = InfectionType::BOTH
            .into_iter()
            .filter(|&k| !state.config.initial(k).is_empty())
            .collect();
        if let Some(r) = self.radius {
            if present.iter().all(|&k| state.reach(k) >= r) {
                return Some(if present.len() == 2 {
                    Outcome::CoexistProxy
                } else {
                    Outcome::RadiusReached
                });
            }
        }
        for k in InfectionType::BOTH {
            let watched =
                self.stop_on_death.contains(&k) || (self.radius.is_some() && present.contains(&k));
            if watched && !state.type_active(k) {
                return Some(Outcome::TypeDead(k));
            }
        }
        match self.max_events {
            Some(n) if state.n >= n => Some(Outcome::EventCap),
            _ => None,
        }
    }
}

/// Everything that happened in one run, enough to replay it.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub config: ModelConfig,
    /// Seed of the realization the run started on.
    pub seed: u64,
    pub events: Vec<EventRecord>,
    pub outcome: Outcome,
}

impl Trace {
    /// Latest time up to which the trace determines the state: the last event
    /// time, or forever if the run stalled.
    pub fn horizon(&self) -> f64 {
        if self.outcome == Outcome::Stalled {
            return NEVER;
        }
        self.events.last().map_or(0.0, |e| e.time)
    }

    /// `(Γ_1, Γ_2)` at time `t`, rebuilt from the initial sets and events.
    pub fn sets_at(&self, t: f64) -> (SiteSet, SiteSet) {
        let mut g1 = self.config.xi1.clone();
        let mut g2 = self.config.xi2.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            match e.infection_type {
                InfectionType::One => g1.insert(e.site.clone()),
                InfectionType::Two => g2.insert(e.site.clone()),
            };
        }
        (g1, g2)
    }

    pub fn final_sets(&self) -> (SiteSet, SiteSet) {
        self.sets_at(NEVER)
    }

    /// `(time, site)` pairs, the type-blind view of the run.
    pub fn time_site_sequence(&self) -> Vec<(u64, Site)> {
        self.events
            .iter()
            .map(|e| (e.time.to_bits(), e.site.clone()))
            .collect()
    }
}

#[derive(Clone, Debug)]
struct Pending {
    time: f64,
    from: Site,
    to: Site,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.from.cmp(&self.from))
            .then_with(|| other.to.cmp(&self.to))
    }
}

/// Next candidate per type, `NEVER` when the type has no finite candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidates {
    pub t1: f64,
    pub t2: f64,
    pub edge1: Option<DirectedEdge>,
    pub edge2: Option<DirectedEdge>,
}

impl Candidates {
    pub fn next_time(&self) -> f64 {
        self.t1.min(self.t2)
    }
}

/// `(Γ_n^1, Γ_n^2, T_n)` together with the agenda and the infection forest.
#[derive(Clone, Debug)]
pub struct GrowthState {
    config: ModelConfig,
    real: Realization,
    seed: u64,
    status: FxHashMap<Site, InfectionType>,
    forest: InfectionForest,
    events: Vec<EventRecord>,
    clock: f64,
    n: u64,
    agenda: [BinaryHeap<Pending>; 2],
    open: [usize; 2],
    reach: [i64; 2],
    sizes: [usize; 2],
}

impl GrowthState {
    /// `Γ_0^1 = ξ_1`, `Γ_0^2 = ξ_2`, `T_0 = 0`.
    pub fn init(config: ModelConfig, real: Realization) -> Result<Self> {
        let mut st = GrowthState {
            seed: real.master_seed(),
            real,
            status: FxHashMap::default(),
            forest: InfectionForest::new(),
            events: Vec::new(),
            clock: 0.0,
            n: 0,
            agenda: [BinaryHeap::new(), BinaryHeap::new()],
            open: [0; 2],
            reach: [0; 2],
            sizes: [0; 2],
            config,
        };
        for kind in InfectionType::BOTH {
            for x in st.config.initial(kind).clone() {
                st.reach[kind.slot()] = st.reach[kind.slot()].max(x.linf_norm());
                st.sizes[kind.slot()] += 1;
                st.forest.add_root(x.clone(), kind)?;
                st.status.insert(x, kind);
            }
        }
        for kind in InfectionType::BOTH {
            for x in st.config.initial(kind).clone() {
                for dir in 0..direction_count(st.config.dim) {
                    let y = x.step(dir);
                    if !st.status.contains_key(&y) {
                        st.schedule(&x, dir, y, kind);
                    }
                }
            }
        }
        Ok(st)
    }

    fn schedule(&mut self, from: &Site, dir: usize, to: Site, kind: InfectionType) {
        self.schedule_after(from, dir, to, kind, self.clock);
    }

    fn schedule_after(&mut self, from: &Site, dir: usize, to: Site, kind: InfectionType, after: f64) {
        let time = self
            .real
            .first_after(stream_id(from, dir), after, self.config.rate(kind));
        self.agenda[kind.slot()].push(Pending {
            time,
            from: from.clone(),
            to,
        });
        self.open[kind.slot()] += 1;
    }

    fn purge(&mut self, kind: InfectionType) {
        let heap = &mut self.agenda[kind.slot()];
        while heap.peek().is_some_and(|p| self.status.contains_key(&p.to)) {
            heap.pop();
        }
    }

    /// Earliest relevant occurrence after `T_n` per type, over edges from
    /// infected sites of that type into uninfected sites.
    pub fn candidate_times(&mut self) -> Candidates {
        self.purge(InfectionType::One);
        self.purge(InfectionType::Two);
        let top = |h: &BinaryHeap<Pending>| match h.peek() {
            Some(p) if p.time.is_finite() => (
                p.time,
                Some(DirectedEdge::new(p.from.clone(), p.to.clone()).expect("agenda edges are neighbors")),
            ),
            _ => (NEVER, None),
        };
        let (t1, edge1) = top(&self.agenda[0]);
        let (t2, edge2) = top(&self.agenda[1]);
        Candidates {
            t1,
            t2,
            edge1,
            edge2,
        }
    }

    /// Time of the next event, `NEVER` if none can happen.
    pub fn next_event_time(&mut self) -> f64 {
        self.purge(InfectionType::One);
        self.purge(InfectionType::Two);
        let t = |h: &BinaryHeap<Pending>| h.peek().map_or(NEVER, |p| p.time);
        t(&self.agenda[0]).min(t(&self.agenda[1]))
    }

    /// Advances to `T_{n+1}` and infects one site.
    pub fn step(&mut self) -> Result<EventRecord> {
        let next = self.next_event_time();
        if !next.is_finite() {
            return Err(Error::NoEligibleEdge);
        }
        let t1 = self.agenda[0].peek().map_or(NEVER, |p| p.time);
        let kind = if t1 <= next {
            InfectionType::One
        } else {
            InfectionType::Two
        };
        let p = self.agenda[kind.slot()].pop().expect("candidate exists");
        self.infect(p.to, kind, p.from, p.time)
    }

    fn infect(&mut self, y: Site, kind: InfectionType, parent: Site, time: f64) -> Result<EventRecord> {
        debug_assert!(time > self.clock);
        self.clock = time;
        self.n += 1;
        let event = EventRecord {
            n: self.n,
            time,
            site: y.clone(),
            infection_type: kind,
            parent,
        };
        self.forest.record(&event)?;
        self.status.insert(y.clone(), kind);
        self.sizes[kind.slot()] += 1;
        self.reach[kind.slot()] = self.reach[kind.slot()].max(y.linf_norm());
        for dir in 0..direction_count(self.config.dim) {
            let z = y.step(dir);
            match self.status.get(&z) {
                Some(kz) => self.open[kz.slot()] -= 1,
                None => self.schedule(&y, dir, z, kind),
            }
        }
        self.events.push(event.clone());
        Ok(event)
    }

    /// Repeats [`GrowthState::step`] until `stop` fires or no event can happen.
    pub fn run(&mut self, stop: &StopCondition) -> Result<Trace> {
        stop.validate()?;
        let outcome = self.run_until(stop)?;
        Ok(self.trace(outcome))
    }

    pub(crate) fn run_until(&mut self, stop: &StopCondition) -> Result<Outcome> {
        loop {
            if let Some(o) = stop.check(self) {
                return Ok(o);
            }
            if !self.next_event_time().is_finite() {
                return Ok(Outcome::Stalled);
            }
            self.step()?;
        }
    }

    pub fn trace(&self, outcome: Outcome) -> Trace {
        Trace {
            config: self.config.clone(),
            seed: self.seed,
            events: self.events.clone(),
            outcome,
        }
    }

    /// Switches to another realization at time `at` (no earlier than `T_n`,
    /// and no later than the next event): every eligible edge is rescheduled
    /// at its first relevant occurrence after `at` in `real`. Memorylessness of
    /// the streams makes this a valid continuation.
    pub fn rebase(&mut self, real: Realization, at: f64) {
        let at = at.max(self.clock);
        self.real = real;
        for kind in InfectionType::BOTH {
            let live: Vec<Pending> = std::mem::take(&mut self.agenda[kind.slot()])
                .into_iter()
                .filter(|p| !self.status.contains_key(&p.to))
                .collect();
            self.open[kind.slot()] = 0;
            for p in live {
                let dir = crate::lattice::direction_between(&p.from, &p.to).expect("neighbors");
                self.schedule_after(&p.from, dir, p.to, kind, at);
            }
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn realization(&self) -> &Realization {
        &self.real
    }

    /// `T_n`.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// `n`, the number of events so far.
    pub fn event_count(&self) -> u64 {
        self.n
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn forest(&self) -> &InfectionForest {
        &self.forest
    }

    pub fn status(&self, x: &Site) -> Option<InfectionType> {
        self.status.get(x).copied()
    }

    pub fn size(&self, kind: InfectionType) -> usize {
        self.sizes[kind.slot()]
    }

    pub fn infected_count(&self) -> usize {
        self.status.len()
    }

    /// `Γ_n^kind`.
    pub fn gamma(&self, kind: InfectionType) -> SiteSet {
        self.status
            .iter()
            .filter(|(_, &k)| k == kind)
            .map(|(s, _)| s.clone())
            .collect()
    }

    /// `Γ_n^1 ∪ Γ_n^2`.
    pub fn infected(&self) -> SiteSet {
        self.status.keys().cloned().collect()
    }

    /// Whether some eligible edge has a type-`kind` source.
    pub fn type_active(&self, kind: InfectionType) -> bool {
        self.open[kind.slot()] > 0
    }

    /// Largest max-norm over `Γ_kind`, 0 when empty.
    pub fn reach(&self, kind: InfectionType) -> i64 {
        self.reach[kind.slot()]
    }

    /// Live agenda entries `(edge, source type, scheduled time)`, sorted by
    /// edge.
    pub fn agenda(&self) -> Vec<(DirectedEdge, InfectionType, f64)> {
        let mut out: Vec<_> = InfectionType::BOTH
            .into_iter()
            .flat_map(|k| {
                self.agenda[k.slot()]
                    .iter()
                    .filter(|p| !self.status.contains_key(&p.to))
                    .map(move |p| {
                        (
                            DirectedEdge::new(p.from.clone(), p.to.clone()).expect("neighbors"),
                            k,
                            p.time,
                        )
                    })
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn validate_forest(&self) -> ForestReport {
        validate_forest(
            &self.forest,
            &self.gamma(InfectionType::One),
            &self.gamma(InfectionType::Two),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{neighbors, LatticeBox};
    use crate::topology::explore;
    use std::collections::BTreeSet;

    fn set(v: &[[i32; 2]]) -> SiteSet {
        v.iter().map(|c| Site::new(c)).collect()
    }

    fn cfg(lambda: f64, a: &[[i32; 2]], b: &[[i32; 2]]) -> ModelConfig {
        ModelConfig::new(2, lambda, set(a), set(b)).unwrap()
    }

    fn axial_ring() -> Vec<[i32; 2]> {
        vec![[-1, 0], [1, 0], [0, -1], [0, 1]]
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::new(1, 1.0, set(&[]), SiteSet::new()).is_err());
        assert!(ModelConfig::new(2, 1.5, set(&[[0, 0]]), SiteSet::new()).is_err());
        assert!(matches!(
            ModelConfig::new(2, 0.5, set(&[[0, 0]]), set(&[[0, 0]])),
            Err(Error::NotDisjoint(_))
        ));
        assert!(ModelConfig::new(2, 0.5, SiteSet::new(), SiteSet::new()).is_err());
        assert!(ModelConfig::new(3, 0.5, set(&[[0, 0]]), SiteSet::new()).is_err());
        let c = cfg(1.0, &[[0, 0]], &[[1, 0]]);
        assert_eq!(c.canonical(), "dim=2;lambda=1;xi1=(0,0);xi2=(1,0)");
        assert_eq!(c.digest().len(), 16);
        assert_ne!(c.digest(), cfg(0.5, &[[0, 0]], &[[1, 0]]).digest());
    }

    #[test]
    fn rate_reduction() {
        let r = reduce_rates(2.0, 1.0).unwrap();
        assert_eq!((r.lambda, r.time_scale, r.relabel), (0.5, 2.0, false));
        let r = reduce_rates(1.0, 3.0).unwrap();
        assert_eq!((r.lambda, r.time_scale, r.relabel), (1.0 / 3.0, 3.0, true));
        let (a, b) = r.arrange(set(&[[0, 0]]), set(&[[1, 0]]));
        assert_eq!((a, b), (set(&[[1, 0]]), set(&[[0, 0]])));
        assert!(reduce_rates(0.0, 0.0).is_err());
        assert!(reduce_rates(-1.0, 1.0).is_err());
        assert!(reduce_rates(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn init_agenda() {
        let st = GrowthState::init(cfg(0.5, &[[0, 0]], &[[1, 0]]), Realization::new(1)).unwrap();
        let agenda = st.agenda();
        let n1 = agenda.iter().filter(|a| a.1 == InfectionType::One).count();
        let n2 = agenda.iter().filter(|a| a.1 == InfectionType::Two).count();
        assert_eq!((n1, n2), (3, 3));
        assert_eq!((st.clock(), st.event_count()), (0.0, 0));
        assert!(st.type_active(InfectionType::One) && st.type_active(InfectionType::Two));

        let mut one = GrowthState::init(cfg(0.5, &[[0, 0]], &[]), Realization::new(1)).unwrap();
        assert!(!one.type_active(InfectionType::Two));
        let c = one.candidate_times();
        assert!(c.t1.is_finite());
        assert_eq!(c.t2, NEVER);
        assert!(c.edge2.is_none());
    }

    fn recompute_agenda(st: &GrowthState) -> BTreeSet<(DirectedEdge, InfectionType)> {
        let mut out = BTreeSet::new();
        for kind in InfectionType::BOTH {
            for x in st.gamma(kind).iter() {
                for y in neighbors(x) {
                    if st.status(&y).is_none() {
                        out.insert((DirectedEdge::new(x.clone(), y).unwrap(), kind));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn agenda_stays_exact() {
        for seed in 0..10 {
            let mut st =
                GrowthState::init(cfg(0.6, &[[0, 0], [2, 0]], &[[1, 0]]), Realization::new(seed)).unwrap();
            let start = st.infected_count();
            for n in 1..=300 {
                let before_reach = [st.reach(InfectionType::One), st.reach(InfectionType::Two)];
                let clock = st.clock();
                let ev = st.step().unwrap();
                assert!(ev.time > clock);
                assert_eq!(st.infected_count(), start + n);
                assert!(st.reach(InfectionType::One) >= before_reach[0]);
                assert!(st.reach(InfectionType::Two) >= before_reach[1]);
                if n % 25 == 0 {
                    let got: BTreeSet<_> = st.agenda().into_iter().map(|(e, k, _)| (e, k)).collect();
                    assert_eq!(got, recompute_agenda(&st));
                    for k in InfectionType::BOTH {
                        let count = got.iter().filter(|x| x.1 == k).count();
                        assert_eq!(st.type_active(k), count > 0);
                    }
                    let g1 = st.gamma(InfectionType::One);
                    let g2 = st.gamma(InfectionType::Two);
                    assert!(g1.is_disjoint(&g2));
                }
            }
        }
    }

    #[test]
    fn candidate_times_pick_the_minimum() {
        let mut st = GrowthState::init(cfg(0.5, &[[0, 0]], &[[1, 0]]), Realization::new(3)).unwrap();
        let c = st.candidate_times();
        let real = Realization::new(3);
        let brute1 = neighbors(&Site::new(&[0, 0]))
            .into_iter()
            .filter(|y| y != &Site::new(&[1, 0]))
            .map(|y| real.next_occurrence(&DirectedEdge::new(Site::new(&[0, 0]), y).unwrap(), 0.0).time)
            .fold(NEVER, f64::min);
        let brute2 = neighbors(&Site::new(&[1, 0]))
            .into_iter()
            .filter(|y| y != &Site::new(&[0, 0]))
            .map(|y| {
                real.next_accepted(&DirectedEdge::new(Site::new(&[1, 0]), y).unwrap(), 0.0, 0.5)
                    .unwrap()
            })
            .fold(NEVER, f64::min);
        assert_eq!((c.t1, c.t2), (brute1, brute2));
        let ev = st.step().unwrap();
        assert_eq!(ev.time, brute1.min(brute2));
    }

    /// For every edge continuously eligible over an interval, no relevant
    /// occurrence falls strictly inside it, and the infecting occurrence is
    /// exactly at the infection time.
    #[test]
    fn no_occurrence_is_skipped() {
        for seed in 0..5 {
            let config = cfg(0.4, &[[0, 0]], &[[1, 0], [0, 1]]);
            let real = Realization::new(seed);
            let mut st = GrowthState::init(config.clone(), real.clone()).unwrap();
            let trace = st.run(&StopCondition::events(400)).unwrap();
            let end = st.clock();
            let mut when: FxHashMap<Site, (f64, InfectionType)> = FxHashMap::default();
            for k in InfectionType::BOTH {
                for x in config.initial(k) {
                    when.insert(x.clone(), (0.0, k));
                }
            }
            for e in &trace.events {
                when.insert(e.site.clone(), (e.time, e.infection_type));
            }
            for (x, &(tx, kx)) in &when {
                for y in neighbors(x) {
                    let close = match when.get(&y) {
                        Some(&(ty, _)) if ty <= tx => continue,
                        Some(&(ty, _)) => ty,
                        None => end,
                    };
                    let edge = DirectedEdge::new(x.clone(), y.clone()).unwrap();
                    let rate = config.rate(kx);
                    let inside = real
                        .stream_after(&edge, tx)
                        .take_while(|o| o.time < close)
                        .filter(|o| o.accepted(rate))
                        .count();
                    assert_eq!(inside, 0, "skipped occurrence on {x}->{y}");
                    let ev = trace.events.iter().find(|e| e.site == y);
                    if let Some(ev) = ev.filter(|e| &e.parent == x) {
                        assert_eq!(real.next_accepted(&edge, tx, rate).unwrap(), ev.time);
                    }
                }
            }
        }
    }

    #[test]
    fn one_type_run_reaches_radius() {
        for seed in 0..20 {
            let mut st = GrowthState::init(cfg(1.0, &[[0, 0]], &[]), Realization::new(seed)).unwrap();
            let tr = st.run(&StopCondition::radius(10)).unwrap();
            assert_eq!(tr.outcome, Outcome::RadiusReached);
            assert!(st.reach(InfectionType::One) >= 10);
            assert!(st.validate_forest().ok);
            assert_eq!(st.forest().roots().len(), 1);
        }
    }

    #[test]
    fn enclosed_type_dies_inside() {
        let ring: Vec<[i32; 2]> = LatticeBox::new(Site::new(&[-2, -2]), Site::new(&[2, 2]))
            .unwrap()
            .sites()
            .iter()
            .filter(|s| s.linf_norm() == 2)
            .map(|s| [s.coords()[0], s.coords()[1]])
            .collect();
        let config = cfg(1.0, &ring, &[[0, 0]]);
        let region: SiteSet = explore(config.xi1(), config.xi2()).unwrap().reached.into_iter().collect();
        for seed in 0..30 {
            let mut st = GrowthState::init(config.clone(), Realization::new(seed)).unwrap();
            let tr = st.run(&StopCondition::radius(8)).unwrap();
            assert_eq!(tr.outcome, Outcome::TypeDead(InfectionType::Two));
            assert!(st.gamma(InfectionType::Two).is_subset(&region));
        }

        let mut st = GrowthState::init(cfg(1.0, &axial_ring(), &[[0, 0]]), Realization::new(0)).unwrap();
        let tr = st.run(&StopCondition::radius(5)).unwrap();
        assert_eq!(tr.outcome, Outcome::TypeDead(InfectionType::Two));
        assert!(tr.events.is_empty());
    }

    #[test]
    fn replay_is_deterministic() {
        let config = cfg(0.7, &[[0, 0]], &[[1, 0]]);
        let stop = StopCondition::radius(12).with_max_events(5000);
        let a = GrowthState::init(config.clone(), Realization::new(99)).unwrap().run(&stop).unwrap();
        let b = GrowthState::init(config, Realization::new(99)).unwrap().run(&stop).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unit_rate_ignores_marks() {
        let two = GrowthState::init(cfg(1.0, &[[0, 0]], &[[1, 0]]), Realization::new(5))
            .unwrap()
            .run(&StopCondition::events(2000))
            .unwrap();
        let one = GrowthState::init(cfg(1.0, &[[0, 0], [1, 0]], &[]), Realization::new(5))
            .unwrap()
            .run(&StopCondition::events(2000))
            .unwrap();
        assert_eq!(two.time_site_sequence(), one.time_site_sequence());
    }

    #[test]
    fn zero_rate_stalls_when_type_one_is_gone() {
        // type 1 strangled from the start, type 2 cannot move at λ = 0
        let mut st = GrowthState::init(cfg(0.0, &[[0, 0]], &axial_ring()), Realization::new(0)).unwrap();
        assert!(!st.type_active(InfectionType::One));
        assert!(st.type_active(InfectionType::Two));
        assert!(matches!(st.step(), Err(Error::NoEligibleEdge)));
        let tr = st.run(&StopCondition::events(10)).unwrap();
        assert_eq!(tr.outcome, Outcome::Stalled);
        assert_eq!(tr.horizon(), NEVER);
    }

    #[test]
    fn stop_condition_validation() {
        assert!(matches!(StopCondition::default().validate(), Err(Error::UnboundedStop)));
        assert!(StopCondition::radius(-1).validate().is_err());
        assert!(StopCondition::radius(COORD_LIMIT + 1).validate().is_err());
        let mut st = GrowthState::init(cfg(1.0, &[[0, 0]], &[]), Realization::new(0)).unwrap();
        let tr = st
            .run(&StopCondition::events(50).with_death_stop(InfectionType::Two))
            .unwrap();
        assert_eq!(tr.outcome, Outcome::TypeDead(InfectionType::Two));
        let tr = st.run(&StopCondition::events(50)).unwrap();
        assert_eq!((tr.outcome, tr.events.len()), (Outcome::EventCap, 50));
    }

    #[test]
    fn rebase_onto_the_same_realization_changes_nothing() {
        let config = cfg(0.8, &[[0, 0]], &[[1, 0]]);
        let mut a = GrowthState::init(config.clone(), Realization::new(11)).unwrap();
        let mut b = GrowthState::init(config, Realization::new(11)).unwrap();
        for _ in 0..100 {
            a.step().unwrap();
            b.step().unwrap();
        }
        let mid = 0.5 * (b.clock() + b.next_event_time());
        b.rebase(Realization::new(11), mid);
        for _ in 0..200 {
            assert_eq!(a.step().unwrap(), b.step().unwrap());
        }
    }
}
