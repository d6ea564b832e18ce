//! Monte Carlo estimates of the coexistence proxy and coupling test suites.
//!
//! A trial from `(ξ_1, ξ_2)` with radius `R` runs until both types hold a site
//! of max-norm `≥ R` (coexistence) or one type has no eligible edge left. The
//! estimate `p̂(R)` is the coexisting fraction of `n` trials; replica `i` always
//! uses the realization seeded by `derive_seed(master_seed, i)`, so results do
//! not depend on the schedule and every radius of a schedule sees the same
//! randomness.

use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coupling::{
    check_inclusions, lemma1_precondition, path_transfer_check, run_coupled, type2_reach_check,
    CouplingMode, InclusionCheck,
};
use crate::engine::{GrowthState, InfectionType, ModelConfig, Outcome, StopCondition};
use crate::error::{Error, Result};
use crate::lattice::{inner_boundary, LatticeBox, SiteSet};
use crate::par::{map_indexed, Parallelism};
use crate::randomness::{derive_seed, Realization};
use crate::topology::{verdict, Verdict};

/// `z` for a two-sided 95% interval.
const Z95: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TrialOutcome {
    #[serde(rename = "coexist-proxy")]
    Coexist,
    #[serde(rename = "type-1-dead")]
    Type1Dead,
    #[serde(rename = "type-2-dead")]
    Type2Dead,
}

impl TrialOutcome {
    pub fn label(self) -> &'static str {
        match self {
            TrialOutcome::Coexist => "coexist-proxy",
            TrialOutcome::Type1Dead => "type-1-dead",
            TrialOutcome::Type2Dead => "type-2-dead",
        }
    }

    fn from_outcome(o: Outcome) -> Option<Self> {
        match o {
            Outcome::CoexistProxy => Some(TrialOutcome::Coexist),
            Outcome::TypeDead(InfectionType::One) => Some(TrialOutcome::Type1Dead),
            Outcome::TypeDead(InfectionType::Two) => Some(TrialOutcome::Type2Dead),
            _ => None,
        }
    }
}

fn check_trial(config: &ModelConfig, radius: i64) -> Result<()> {
    if config.xi1().is_empty() {
        return Err(Error::EmptySet("xi1"));
    }
    if config.xi2().is_empty() {
        return Err(Error::EmptySet("xi2"));
    }
    // type 2 could never move, and a trial might never end
    if config.lambda() <= 0.0 {
        return Err(Error::InvalidRate(config.lambda()));
    }
    if radius < 1 {
        return Err(Error::OutOfRange(radius));
    }
    StopCondition::radius(radius).validate()
}

/// One trial. Both initial sets must be nonempty, `λ > 0` and `R ≥ 1`.
pub fn coexistence_trial(config: &ModelConfig, radius: i64, seed: u64) -> Result<TrialOutcome> {
    check_trial(config, radius)?;
    let mut st = GrowthState::init(config.clone(), Realization::new(seed))?;
    let o = st.run_until(&StopCondition::radius(radius))?;
    TrialOutcome::from_outcome(o).ok_or(Error::InvalidArgument(format!("trial ended as {o}")))
}

/// Outcomes of the trial at each radius in `radii`, from a single run: the
/// same answers as [`coexistence_trial`] per radius with the same seed.
pub fn trial_schedule(config: &ModelConfig, radii: &[i64], seed: u64) -> Result<Vec<TrialOutcome>> {
    for &r in radii {
        check_trial(config, r)?;
    }
    let stops: Vec<StopCondition> = radii.iter().map(|&r| StopCondition::radius(r)).collect();
    let mut out: Vec<Option<TrialOutcome>> = vec![None; radii.len()];
    let mut st = GrowthState::init(config.clone(), Realization::new(seed))?;
    loop {
        for (slot, stop) in out.iter_mut().zip(&stops) {
            if slot.is_none() {
                *slot = stop.check(&st).and_then(TrialOutcome::from_outcome);
            }
        }
        if out.iter().all(Option::is_some) {
            return Ok(out.into_iter().flatten().collect());
        }
        st.step()?;
    }
}

/// 95% Wilson score interval for `successes` out of `n`; `(0, 1)` when `n = 0`.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = (centre - half).clamp(0.0, 1.0).min(p);
    let hi = (centre + half).clamp(0.0, 1.0).max(p);
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub dimension: usize,
    pub lambda: f64,
    #[serde(rename = "R")]
    pub radius: i64,
    pub n_reps: u64,
    pub n_coexist: u64,
    pub n_type1_dead: u64,
    pub n_type2_dead: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub master_seed: u64,
    pub config_digest: String,
    #[serde(skip)]
    pub fertility: Verdict,
}

impl EstimateResult {
    fn tally(config: &ModelConfig, radius: i64, master_seed: u64, fertility: Verdict, outcomes: impl Iterator<Item = TrialOutcome>) -> Self {
        let mut counts = [0u64; 3];
        for o in outcomes {
            counts[o as usize] += 1;
        }
        let n_reps = counts.iter().sum();
        let p_hat = if n_reps == 0 {
            0.0
        } else {
            counts[0] as f64 / n_reps as f64
        };
        let (ci_lo, ci_hi) = wilson_interval(counts[0], n_reps);
        EstimateResult {
            dimension: config.dim(),
            lambda: config.lambda(),
            radius,
            n_reps,
            n_coexist: counts[0],
            n_type1_dead: counts[1],
            n_type2_dead: counts[2],
            p_hat,
            ci_lo,
            ci_hi,
            master_seed,
            config_digest: config.digest(),
            fertility,
        }
    }
}

fn fertility_gate(xi1: &SiteSet, xi2: &SiteSet, allow_infertile: bool) -> Result<Verdict> {
    let v = verdict(xi1, xi2)?;
    if v != Verdict::Fertile && !allow_infertile {
        return Err(Error::Infertile(format!("{xi1} / {xi2}: {}", v.label())));
    }
    Ok(v)
}

/// `p̂(R)` over `n_reps` trials. Infertile pairs are refused unless
/// `allow_infertile`.
pub fn estimate(
    config: &ModelConfig,
    radius: i64,
    n_reps: u64,
    master_seed: u64,
    par: Parallelism,
    allow_infertile: bool,
) -> Result<EstimateResult> {
    check_trial(config, radius)?;
    let fertility = fertility_gate(config.xi1(), config.xi2(), allow_infertile)?;
    let outcomes = map_indexed(n_reps, par, |i| {
        coexistence_trial(config, radius, derive_seed(master_seed, i))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(EstimateResult::tally(config, radius, master_seed, fertility, outcomes.into_iter()))
}

/// One [`EstimateResult`] per radius, every radius reusing the same replica
/// seeds, so `p̂` is non-increasing along increasing radii.
pub fn estimate_schedule(
    config: &ModelConfig,
    radii: &[i64],
    n_reps: u64,
    master_seed: u64,
    par: Parallelism,
    allow_infertile: bool,
) -> Result<Vec<EstimateResult>> {
    for &r in radii {
        check_trial(config, r)?;
    }
    let fertility = fertility_gate(config.xi1(), config.xi2(), allow_infertile)?;
    let per_rep = map_indexed(n_reps, par, |i| {
        trial_schedule(config, radii, derive_seed(master_seed, i))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(radii
        .iter()
        .enumerate()
        .map(|(j, &r)| EstimateResult::tally(config, r, master_seed, fertility, per_rep.iter().map(|v| v[j])))
        .collect())
}

/// A grid of estimates: every pair × every `λ` × every radius.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub dim: usize,
    pub pairs: Vec<(SiteSet, SiteSet)>,
    pub lambdas: Vec<f64>,
    pub radii: Vec<i64>,
    pub n_reps: u64,
    pub master_seed: u64,
    pub parallelism: Parallelism,
    pub allow_infertile: bool,
}

/// Rows ordered by pair, then `λ`, then radius. All pairs are checked for
/// fertility before anything runs.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<EstimateResult>> {
    if spec.pairs.is_empty() || spec.lambdas.is_empty() || spec.radii.is_empty() {
        return Err(Error::InvalidArgument("empty sweep grid".into()));
    }
    let mut configs = Vec::new();
    for (xi1, xi2) in &spec.pairs {
        for &lambda in &spec.lambdas {
            configs.push(ModelConfig::new(spec.dim, lambda, xi1.clone(), xi2.clone())?);
        }
        fertility_gate(xi1, xi2, spec.allow_infertile)?;
    }
    let mut rows = Vec::new();
    for c in &configs {
        rows.extend(estimate_schedule(
            c,
            &spec.radii,
            spec.n_reps,
            spec.master_seed,
            spec.parallelism,
            spec.allow_infertile,
        )?);
    }
    Ok(rows)
}

/// Writes rows as CSV with one header line.
pub fn write_csv<W: Write>(rows: &[EstimateResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    if rows.is_empty() {
        w.write_record([
            "dimension", "lambda", "R", "n_reps", "n_coexist", "n_type1_dead", "n_type2_dead",
            "p_hat", "ci_lo", "ci_hi", "master_seed", "config_digest",
        ])
        .map_err(io)?;
    }
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

/// Parameters of [`lemma1_suite`].
#[derive(Clone, Debug)]
pub struct Lemma1SuiteConfig {
    pub n_runs: u64,
    pub dim: usize,
    pub lambda: f64,
    /// Initial pairs are drawn from subsets of this box.
    pub window: LatticeBox,
    /// Events per process.
    pub horizon: u64,
    pub master_seed: u64,
    /// Only draw pairs with `∂ζ ∩ ζ_1 ∩ ζ_1' ≠ ∅`.
    pub require_qualifying_root: bool,
    /// Negative control: run the second process on an unrelated realization.
    pub mismatched_seeds: bool,
    pub parallelism: Parallelism,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Run {
    pub index: u64,
    pub seed: u64,
    pub zeta1: SiteSet,
    pub zeta2: SiteSet,
    pub zeta1p: SiteSet,
    pub zeta2p: SiteSet,
    pub n_checks: usize,
    pub inclusions_pass: bool,
    pub first_violation: Option<InclusionCheck>,
    pub path_edges_checked: usize,
    pub path_transfer_pass: bool,
    pub reach_pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Summary {
    pub n_runs: u64,
    pub n_inclusions_pass: u64,
    pub n_path_transfer_pass: u64,
    pub n_reach_pass: u64,
    pub n_with_qualifying_root: u64,
    pub all_pass: bool,
    pub runs: Vec<Lemma1Run>,
}

type Pair = (SiteSet, SiteSet);

/// Rejection sampling of `((ζ_1, ζ_2), (ζ_1', ζ_2'))` inside `window`.
fn sample_pairs(rng: &mut ChaCha8Rng, window: &SiteSet, require_root: bool) -> Result<(Pair, Pair)> {
    loop {
        let zeta: SiteSet = window.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        if zeta.is_empty() {
            continue;
        }
        let mut label = || -> Pair {
            let (mut a, mut b) = (SiteSet::new(), SiteSet::new());
            for x in &zeta {
                if rng.random_bool(0.5) {
                    a.insert(x.clone());
                } else {
                    b.insert(x.clone());
                }
            }
            (a, b)
        };
        let p = label();
        let q = label();
        if !lemma1_precondition(&p.0, &p.1, &q.0, &q.1)? {
            continue;
        }
        if require_root && inner_boundary(&zeta).intersection(&p.0).is_disjoint(&q.0) {
            continue;
        }
        return Ok((p, q));
    }
}

fn lemma1_run(cfg: &Lemma1SuiteConfig, window: &SiteSet, index: u64) -> Result<Lemma1Run> {
    let run_seed = derive_seed(cfg.master_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, 0));
    let ((z1, z2), (z1p, z2p)) = sample_pairs(&mut rng, window, cfg.require_qualifying_root)?;
    let a = ModelConfig::new(cfg.dim, cfg.lambda, z1.clone(), z2.clone())?;
    let b = ModelConfig::new(cfg.dim, cfg.lambda, z1p.clone(), z2p.clone())?;
    let stop = StopCondition::events(cfg.horizon);
    let seed = derive_seed(run_seed, 1);
    let (ta, tb) = if cfg.mismatched_seeds {
        let mut ra = run_coupled(&[a], seed, CouplingMode::SharedFromStart, &stop)?;
        let mut rb = run_coupled(&[b], derive_seed(run_seed, 2), CouplingMode::SharedFromStart, &stop)?;
        (ra.traces.remove(0), rb.traces.remove(0))
    } else {
        let mut r = run_coupled(&[a, b], seed, CouplingMode::SharedFromStart, &stop)?;
        let tb = r.traces.remove(1);
        (r.traces.remove(0), tb)
    };
    let zeta = z1.union(&z2);
    let inc = check_inclusions(&ta, &tb, &zeta)?;
    let path = path_transfer_check(&ta, &tb, &zeta)?;
    let reach = type2_reach_check(&ta, &tb, &zeta, zeta.linf_reach() + 3)?;
    Ok(Lemma1Run {
        index,
        seed,
        zeta1: z1,
        zeta2: z2,
        zeta1p: z1p,
        zeta2p: z2p,
        n_checks: inc.checks.len(),
        inclusions_pass: inc.pass,
        first_violation: inc.first_violation.map(|v| v.check),
        path_edges_checked: path.edges_checked,
        path_transfer_pass: path.pass,
        reach_pass: reach.pass,
    })
}

/// Coupled runs from random pairs satisfying the inclusion precondition, each
/// checked for the three inclusions, path transfer and type-2 reach.
pub fn lemma1_suite(cfg: &Lemma1SuiteConfig) -> Result<Lemma1Summary> {
    if cfg.window.dim() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            found: cfg.window.dim(),
        });
    }
    let window = cfg.window.sites();
    let runs = map_indexed(cfg.n_runs, cfg.parallelism, |i| lemma1_run(cfg, &window, i))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let count = |f: fn(&Lemma1Run) -> bool| runs.iter().filter(|r| f(r)).count() as u64;
    let n_inclusions_pass = count(|r| r.inclusions_pass);
    let n_path_transfer_pass = count(|r| r.path_transfer_pass);
    let n_reach_pass = count(|r| r.reach_pass);
    let n_with_qualifying_root = runs
        .iter()
        .filter(|r| {
            let zeta = r.zeta1.union(&r.zeta2);
            !inner_boundary(&zeta).intersection(&r.zeta1).is_disjoint(&r.zeta1p)
        })
        .count() as u64;
    Ok(Lemma1Summary {
        n_runs: cfg.n_runs,
        all_pass: n_inclusions_pass == cfg.n_runs
            && n_path_transfer_pass == cfg.n_runs
            && n_reach_pass == cfg.n_runs,
        n_inclusions_pass,
        n_path_transfer_pass,
        n_reach_pass,
        n_with_qualifying_root,
        runs,
    })
}
