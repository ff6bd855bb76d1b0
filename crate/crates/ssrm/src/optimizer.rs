//! Genetic-algorithm search for the next sample point: minimize `‖u‖`
//! subject to lying on the surrogate zero level set, keeping a minimum
//! distance to existing samples, and staying inside the box. The equality
//! and distance constraints enter as penalties; the best individual ever
//! seen is returned with a feasibility flag rather than an error, since a
//! constraint-violating point still improves the surrogate.

use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doe::BoxBounds;
use crate::stream::{next_index, next_open01, next_std_normal, rng_from_seed};
use crate::surrogate::RbfSurrogate;

/// Individuals compared per tournament pick.
const TOURNAMENT_SIZE: usize = 2;
/// Blend-crossover expansion factor.
const BLEND_ALPHA: f64 = 0.5;

/// Real-coded GA settings. `equality_tolerance` and the penalty weights are
/// absolute quantities in output units; the driver rescales them from the
/// current sample set before each proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of the box width.
    pub mutation_scale: f64,
    /// |surrogate value| at or below this counts as on-boundary.
    pub equality_tolerance: f64,
    pub penalty_weight_eq: f64,
    pub penalty_weight_dist: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 60,
            generations: 120,
            crossover_rate: 0.9,
            mutation_rate: 0.15,
            mutation_scale: 0.1,
            equality_tolerance: 1e-3,
            penalty_weight_eq: 10.0,
            penalty_weight_dist: 10.0,
            seed: 3,
        }
    }
}

/// A proposed sample point with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePoint {
    pub u: Vec<f64>,
    pub norm: f64,
    pub surrogate_value: f64,
    pub min_dist: f64,
    pub feasible: bool,
}

fn norm2(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
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

/// Penalty-scalarized objective, lower is better:
/// `‖u‖ + w_eq·|Ĝ(u)| + w_dist·max(0, d_min − min_i‖u − u_i‖)`.
pub fn fitness(
    u: &[f64],
    surrogate: &RbfSurrogate,
    existing: &[Vec<f64>],
    d_min: f64,
    cfg: &GaConfig,
) -> f64 {
    let g = surrogate.predict_unchecked(u);
    let dist_short = (d_min - min_distance(u, existing)).max(0.0);
    norm2(u) + cfg.penalty_weight_eq * g.abs() + cfg.penalty_weight_dist * dist_short
}

fn evaluate(
    u: Vec<f64>,
    surrogate: &RbfSurrogate,
    existing: &[Vec<f64>],
    d_min: f64,
    bounds: &BoxBounds,
    cfg: &GaConfig,
) -> (CandidatePoint, f64) {
    let g = surrogate.predict_unchecked(&u);
    let dist = min_distance(&u, existing);
    let norm = norm2(&u);
    let fit =
        norm + cfg.penalty_weight_eq * g.abs() + cfg.penalty_weight_dist * (d_min - dist).max(0.0);
    let feasible = g.abs() <= cfg.equality_tolerance && dist >= d_min && bounds.contains(&u);
    (
        CandidatePoint {
            u,
            norm,
            surrogate_value: g,
            min_dist: dist,
            feasible,
        },
        fit,
    )
}

fn random_point(rng: &mut ChaCha12Rng, bounds: &BoxBounds) -> Vec<f64> {
    (0..bounds.dim())
        .map(|j| bounds.lower[j] + next_open01(rng) * bounds.width(j))
        .collect()
}

fn tournament(rng: &mut ChaCha12Rng, fitnesses: &[f64]) -> usize {
    let mut best = next_index(rng, fitnesses.len());
    for _ in 1..TOURNAMENT_SIZE {
        let other = next_index(rng, fitnesses.len());
        if fitnesses[other] < fitnesses[best] {
            best = other;
        }
    }
    best
}

/// Run the GA and return the best point ever seen.
///
/// Deterministic for a fixed `cfg.seed`. An infeasible best is returned
/// flagged, never as an error.
pub fn propose_point(
    surrogate: &RbfSurrogate,
    existing: &[Vec<f64>],
    d_min: f64,
    bounds: &BoxBounds,
    cfg: &GaConfig,
) -> CandidatePoint {
    propose_point_traced(surrogate, existing, d_min, bounds, cfg).0
}

/// As `propose_point`, also returning the best-so-far fitness per generation.
pub fn propose_point_traced(
    surrogate: &RbfSurrogate,
    existing: &[Vec<f64>],
    d_min: f64,
    bounds: &BoxBounds,
    cfg: &GaConfig,
) -> (CandidatePoint, Vec<f64>) {
    assert!(!existing.is_empty(), "existing sample set must be nonempty");
    assert!(cfg.population >= 4 && cfg.population.is_multiple_of(2));
    let m = bounds.dim();
    let mut rng = rng_from_seed(cfg.seed);

    let population: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| random_point(&mut rng, bounds))
        .collect();
    // Fitness is a pure function of an immutable surrogate, so individuals
    // evaluate in parallel; collect keeps population order.
    let mut scored: Vec<(CandidatePoint, f64)> = population
        .into_par_iter()
        .map(|u| evaluate(u, surrogate, existing, d_min, bounds, cfg))
        .collect();

    let mut best = scored
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .cloned()
        .unwrap();
    let mut history = Vec::with_capacity(cfg.generations + 1);
    history.push(best.1);

    for _ in 0..cfg.generations {
        let fitnesses: Vec<f64> = scored.iter().map(|(_, f)| f).copied().collect();
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);

        // Elitism of 1: the best individual survives unchanged.
        next.push(best.0.u.clone());
        while next.len() < cfg.population {
            let p1 = scored[tournament(&mut rng, &fitnesses)].0.u.clone();
            let p2 = scored[tournament(&mut rng, &fitnesses)].0.u.clone();
            let (mut c1, mut c2) = (p1.clone(), p2.clone());
            if next_open01(&mut rng) < cfg.crossover_rate {
                for j in 0..m {
                    let (lo, hi) = if p1[j] <= p2[j] {
                        (p1[j], p2[j])
                    } else {
                        (p2[j], p1[j])
                    };
                    let d = hi - lo;
                    let a = lo - BLEND_ALPHA * d;
                    let span = d * (1.0 + 2.0 * BLEND_ALPHA);
                    c1[j] = a + next_open01(&mut rng) * span;
                    c2[j] = a + next_open01(&mut rng) * span;
                }
            }
            for child in [&mut c1, &mut c2] {
                for (j, gene) in child.iter_mut().enumerate() {
                    if next_open01(&mut rng) < cfg.mutation_rate {
                        *gene += next_std_normal(&mut rng) * cfg.mutation_scale * bounds.width(j);
                    }
                }
                bounds.clip(child);
            }
            next.push(c1);
            if next.len() < cfg.population {
                next.push(c2);
            }
        }
        scored = next
            .into_par_iter()
            .map(|u| evaluate(u, surrogate, existing, d_min, bounds, cfg))
            .collect();
        for entry in &scored {
            if entry.1 < best.1 {
                best = entry.clone();
            }
        }
        history.push(best.1);
    }
    (best.0, history)
}
