//! The sequential surrogate driver: build an initial design, fit the RBF,
//! estimate the failure probability on the surrogate, then repeatedly add
//! the minimum-norm boundary point, re-evaluate the true LSF, refit, and
//! re-estimate until the estimate stabilizes or the budget runs out.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doe::{lhs_sample, BoxBounds, DoeError};
use crate::mcs::{estimate_pf_surrogate, McsError};
use crate::optimizer::{propose_point, GaConfig};
use crate::problems::{ProblemDefinition, ProblemError};
use crate::stream::{next_std_normal, rng_from_seed};
use crate::surrogate::{select_shape, KernelKind, RbfSurrogate, ShapeSearch, SurrogateError};

/// Proposals closer than this to an existing sample get nudged before the
/// true evaluation; the interpolation system needs distinct centers.
const DUPLICATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSizeRule {
    MPlusOne,
    TwoMPlusOne,
}

impl InitialSizeRule {
    pub fn size(self, m: usize) -> usize {
        match self {
            InitialSizeRule::MPlusOne => m + 1,
            InitialSizeRule::TwoMPlusOne => 2 * m + 1,
        }
    }
}

/// Driver configuration. Seeds address three independent streams: the
/// initial design, the Monte Carlo sample matrix (reused unchanged across
/// iterations so probability changes reflect only surrogate changes), and
/// the add-point search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsrmConfig {
    pub d_min: f64,
    pub eps_a: f64,
    pub eps_r: f64,
    /// Consecutive iterations the stop test must pass before stopping.
    pub consecutive_passes: usize,
    /// Maximum number of added points.
    pub k_max: usize,
    pub n_mcs: usize,
    pub mcs_seed: u64,
    pub lhs_seed: u64,
    pub initial_size_rule: InitialSizeRule,
    pub bounds: BoxBounds,
    pub kernel: KernelKind,
    pub shape_search: ShapeSearch,
    pub ga: GaConfig,
}

impl SsrmConfig {
    /// Defaults for an `m`-dimensional problem: the `[-5, 5]^m` box, a
    /// Gaussian kernel, eps_a = 5e-4, eps_r = 0.02 passed twice in a row,
    /// d_min = 0.4, up to 50 added points, 1e6 Monte Carlo samples, and
    /// seeds (lhs, mcs, ga) = (1, 2, 3).
    pub fn defaults(m: usize) -> Self {
        SsrmConfig {
            d_min: 0.4,
            eps_a: 5e-4,
            eps_r: 0.02,
            consecutive_passes: 2,
            k_max: 50,
            n_mcs: 1_000_000,
            mcs_seed: 2,
            lhs_seed: 1,
            initial_size_rule: InitialSizeRule::MPlusOne,
            bounds: BoxBounds::symmetric(m, 5.0).expect("m >= 1"),
            kernel: KernelKind::Gaussian,
            shape_search: ShapeSearch::default(),
            ga: GaConfig::default(),
        }
    }

    /// Defaults specialized to a problem: initial-design rule from its
    /// spread flag, then its registered overrides.
    pub fn for_problem(problem: &ProblemDefinition) -> Self {
        let mut cfg = SsrmConfig::defaults(problem.dim());
        cfg.initial_size_rule = if problem.large_std_flag() {
            InitialSizeRule::TwoMPlusOne
        } else {
            InitialSizeRule::MPlusOne
        };
        let ov = problem.overrides();
        if let Some(v) = ov.d_min {
            cfg.d_min = v;
        }
        if let Some(v) = ov.eps_a {
            cfg.eps_a = v;
        }
        if let Some(v) = ov.eps_r {
            cfg.eps_r = v;
        }
        if let Some(v) = ov.k_max {
            cfg.k_max = v;
        }
        if let Some(v) = ov.n_mcs {
            cfg.n_mcs = v;
        }
        if let Some(v) = ov.consecutive_passes {
            cfg.consecutive_passes = v;
        }
        if let Some(v) = ov.ga_population {
            cfg.ga.population = v;
        }
        if let Some(v) = ov.ga_generations {
            cfg.ga.generations = v;
        }
        cfg
    }

    fn validate(&self, m: usize) -> Result<(), String> {
        if !(self.d_min > 0.0) {
            return Err(format!("d_min must be positive, got {}", self.d_min));
        }
        if !(self.eps_a > 0.0) || !(self.eps_r > 0.0) {
            return Err(format!(
                "convergence tolerances must be positive, got eps_a={}, eps_r={}",
                self.eps_a, self.eps_r
            ));
        }
        if self.k_max < 1 {
            return Err("k_max must be at least 1".into());
        }
        if self.consecutive_passes < 1 {
            return Err("consecutive_passes must be at least 1".into());
        }
        if self.n_mcs < 1 {
            return Err("n_mcs must be at least 1".into());
        }
        if self.bounds.dim() != m {
            return Err(format!(
                "bounds dimension {} does not match problem dimension {m}",
                self.bounds.dim()
            ));
        }
        if self.ga.population < 4 || !self.ga.population.is_multiple_of(2) {
            return Err(format!(
                "GA population must be even and at least 4, got {}",
                self.ga.population
            ));
        }
        Ok(())
    }
}

/// Origin tag for each sample row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Initial,
    Iteration(usize),
}

/// The growing design: U-space inputs with their true LSF outputs.
/// Rows are append-only and pairwise distinct.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    points: Vec<Vec<f64>>,
    outputs: Vec<f64>,
    provenance: Vec<Provenance>,
}

impl SampleSet {
    fn new() -> Self {
        SampleSet {
            points: Vec::new(),
            outputs: Vec::new(),
            provenance: Vec::new(),
        }
    }

    fn push(&mut self, u: Vec<f64>, g: f64, from: Provenance) {
        self.points.push(u);
        self.outputs.push(g);
        self.provenance.push(from);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// Largest |g| in the set, the output scale the GA penalties use.
    fn output_scale(&self) -> f64 {
        let s = self.outputs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }
}

/// Per-iteration trace entry: the added point, its true output, search
/// diagnostics, and the refreshed fit and probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub added_u: Vec<f64>,
    pub added_g: f64,
    pub feasible: bool,
    /// True when the proposal collided with an existing sample and was
    /// perturbed by one mutation step before evaluation.
    pub nudged: bool,
    pub shape_c: f64,
    pub loocv: f64,
    pub pf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergedBy {
    AbsoluteAndRelative,
    KMax,
}

/// Full result of one driver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsrmRunResult {
    /// Surrogate-MCS estimates P_0, P_1, ..., P_k under one sample matrix.
    pub pf_history: Vec<f64>,
    pub final_pf: f64,
    pub samples: SampleSet,
    pub n_lsf_evals: usize,
    pub iterations: usize,
    pub converged_by: ConvergedBy,
    pub initial_shape_c: f64,
    pub initial_loocv: f64,
    pub per_iteration: Vec<IterationRecord>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineErrorKind {
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Lsf(#[from] ProblemError),
    #[error(transparent)]
    Mcs(#[from] McsError),
    #[error(transparent)]
    Doe(#[from] DoeError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Trace accumulated before an abort.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialTrace {
    pub pf_history: Vec<f64>,
    pub samples: SampleSet,
    pub per_iteration: Vec<IterationRecord>,
}

/// Driver failure carrying the partial trace accumulated before the abort.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{kind}")]
pub struct EngineError {
    pub kind: EngineErrorKind,
    pub partial: Box<PartialTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceDecision {
    Continue,
    StopConverged,
    StopKMax,
}

/// One application of the stop test after iteration `k`.
///
/// The cap wins outright; otherwise stopping needs both the absolute change
/// `|P_{k+1} - P_k| <= eps_a` and the relative change
/// `|P_{k+1} - P_k| / |P_{k+1}| <= eps_r`. A zero new estimate passes the
/// relative test only when the change is exactly zero.
pub fn check_convergence(
    pf_prev: f64,
    pf_next: f64,
    k: usize,
    cfg: &SsrmConfig,
) -> ConvergenceDecision {
    if k >= cfg.k_max {
        return ConvergenceDecision::StopKMax;
    }
    let dp = (pf_next - pf_prev).abs();
    let abs_ok = dp <= cfg.eps_a;
    let rel_ok = if pf_next == 0.0 {
        dp == 0.0
    } else {
        dp / pf_next.abs() <= cfg.eps_r
    };
    if abs_ok && rel_ok {
        ConvergenceDecision::StopConverged
    } else {
        ConvergenceDecision::Continue
    }
}

struct TraceState {
    pf_history: Vec<f64>,
    samples: SampleSet,
    per_iteration: Vec<IterationRecord>,
}

impl TraceState {
    fn abort(self, kind: EngineErrorKind) -> EngineError {
        EngineError {
            kind,
            partial: Box::new(PartialTrace {
                pf_history: self.pf_history,
                samples: self.samples,
                per_iteration: self.per_iteration,
            }),
        }
    }
}

fn evaluate_true(problem: &ProblemDefinition, u: &[f64]) -> Result<f64, EngineErrorKind> {
    let g = problem.eval_at_u(u)?;
    if !g.is_finite() {
        return Err(EngineErrorKind::Lsf(ProblemError::Domain(format!(
            "LSF returned non-finite value at u = {u:?}"
        ))));
    }
    Ok(g)
}

fn min_distance(u: &[f64], existing: &[Vec<f64>]) -> f64 {
    existing
        .iter()
        .map(|p| {
            u.iter()
                .zip(p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Run the sequential surrogate loop on one problem.
///
/// Deterministic given the three seeds in `cfg`; identical configurations
/// produce identical results for any worker count.
pub fn run_ssrm(
    problem: &ProblemDefinition,
    cfg: &SsrmConfig,
) -> Result<SsrmRunResult, EngineError> {
    let m = problem.dim();
    let mut trace = TraceState {
        pf_history: Vec::new(),
        samples: SampleSet::new(),
        per_iteration: Vec::new(),
    };
    if let Err(msg) = cfg.validate(m) {
        return Err(trace.abort(EngineErrorKind::Config(msg)));
    }

    // Initial design and true evaluations.
    let n0 = cfg.initial_size_rule.size(m);
    let design = match lhs_sample(n0, m, &cfg.bounds, cfg.lhs_seed) {
        Ok(d) => d,
        Err(e) => return Err(trace.abort(e.into())),
    };
    for u in design {
        let g = match evaluate_true(problem, &u) {
            Ok(g) => g,
            Err(kind) => return Err(trace.abort(kind)),
        };
        trace.samples.push(u, g, Provenance::Initial);
    }

    // First fit with shape selection.
    let fit_current = |samples: &SampleSet| -> Result<(RbfSurrogate, f64, f64), EngineErrorKind> {
        let c = select_shape(
            samples.points(),
            samples.outputs(),
            cfg.kernel,
            &cfg.shape_search,
        )?;
        let loocv =
            crate::surrogate::loocv_error(samples.points(), samples.outputs(), cfg.kernel, c)?;
        let s = RbfSurrogate::fit(samples.points(), samples.outputs(), cfg.kernel, c)?;
        Ok((s, c, loocv))
    };
    let (mut surrogate, initial_shape_c, initial_loocv) = match fit_current(&trace.samples) {
        Ok(v) => v,
        Err(kind) => return Err(trace.abort(kind)),
    };

    let mut pf_prev = match estimate_pf_surrogate(&surrogate, cfg.n_mcs, m, cfg.mcs_seed) {
        Ok(est) => est.pf,
        Err(e) => return Err(trace.abort(e.into())),
    };
    trace.pf_history.push(pf_prev);

    let mut converged_by = ConvergedBy::KMax;
    let mut passes = 0usize;
    let mut iterations = 0usize;

    for k in 1..=cfg.k_max {
        // Add-point search, penalties rescaled to the current output range.
        let scale = trace.samples.output_scale();
        let ga_cfg = GaConfig {
            equality_tolerance: 1e-3 * scale,
            penalty_weight_eq: 10.0 / scale,
            seed: cfg.ga.seed.wrapping_add(k as u64),
            ..cfg.ga.clone()
        };
        let mut candidate = propose_point(
            &surrogate,
            trace.samples.points(),
            cfg.d_min,
            &cfg.bounds,
            &ga_cfg,
        );

        // Keep centers distinct: nudge a colliding proposal by one mutation
        // step.
        let mut nudged = false;
        if min_distance(&candidate.u, trace.samples.points()) < DUPLICATE_EPS {
            let mut rng = rng_from_seed(ga_cfg.seed.wrapping_add(0x6e75646765));
            for _ in 0..16 {
                let mut u = candidate.u.clone();
                for (j, x) in u.iter_mut().enumerate() {
                    *x += next_std_normal(&mut rng) * cfg.ga.mutation_scale * cfg.bounds.width(j);
                }
                cfg.bounds.clip(&mut u);
                if min_distance(&u, trace.samples.points()) >= DUPLICATE_EPS {
                    candidate.u = u;
                    nudged = true;
                    break;
                }
            }
            if !nudged {
                let row = trace.samples.len();
                return Err(trace.abort(EngineErrorKind::Surrogate(
                    SurrogateError::DuplicateCenters(row, row),
                )));
            }
        }

        let g = match evaluate_true(problem, &candidate.u) {
            Ok(g) => g,
            Err(kind) => return Err(trace.abort(kind)),
        };
        trace
            .samples
            .push(candidate.u.clone(), g, Provenance::Iteration(k));

        let (next_surrogate, shape_c, loocv) = match fit_current(&trace.samples) {
            Ok(v) => v,
            Err(kind) => return Err(trace.abort(kind)),
        };
        surrogate = next_surrogate;

        // Same seed as every other iteration: identical sample matrix.
        let pf_next = match estimate_pf_surrogate(&surrogate, cfg.n_mcs, m, cfg.mcs_seed) {
            Ok(est) => est.pf,
            Err(e) => return Err(trace.abort(e.into())),
        };
        trace.pf_history.push(pf_next);
        trace.per_iteration.push(IterationRecord {
            iteration: k,
            added_u: candidate.u,
            added_g: g,
            feasible: candidate.feasible && !nudged,
            nudged,
            shape_c,
            loocv,
            pf: pf_next,
        });
        iterations = k;

        match check_convergence(pf_prev, pf_next, k, cfg) {
            ConvergenceDecision::StopKMax => {
                converged_by = ConvergedBy::KMax;
                pf_prev = pf_next;
                break;
            }
            ConvergenceDecision::StopConverged => {
                passes += 1;
                if passes >= cfg.consecutive_passes {
                    converged_by = ConvergedBy::AbsoluteAndRelative;
                    pf_prev = pf_next;
                    break;
                }
            }
            ConvergenceDecision::Continue => {
                passes = 0;
            }
        }
        pf_prev = pf_next;
    }

    Ok(SsrmRunResult {
        final_pf: pf_prev,
        n_lsf_evals: trace.samples.len(),
        iterations,
        converged_by,
        initial_shape_c,
        initial_loocv,
        pf_history: trace.pf_history,
        samples: trace.samples,
        per_iteration: trace.per_iteration,
    })
}
