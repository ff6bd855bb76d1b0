//! Latin hypercube sampling of initial designs inside a bounded box.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stream::{next_index, next_open01, rng_from_seed};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DoeError {
    #[error("invalid box bounds: {0}")]
    InvalidBounds(String),
}

/// Axis-aligned box, one (lower, upper) pair per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, DoeError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(DoeError::InvalidBounds(format!(
                "dimension mismatch: {} lower vs {} upper",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(DoeError::InvalidBounds(format!(
                    "dimension {j}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(BoxBounds { lower, upper })
    }

    /// The box `[-half, half]^m`.
    pub fn symmetric(m: usize, half: f64) -> Result<Self, DoeError> {
        BoxBounds::new(vec![-half; m], vec![half; m])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| x >= lo && x <= hi)
    }

    pub fn clip(&self, u: &mut [f64]) {
        for (x, (lo, hi)) in u.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(*lo, *hi);
        }
    }
}

/// Latin hypercube design of `n` points in the box.
///
/// Each column is a random permutation of the `n` strata with one point
/// placed uniformly inside each stratum; the open-interval uniform keeps
/// every point strictly inside the box. Deterministic for a fixed seed.
pub fn lhs_sample(
    n: usize,
    m: usize,
    bounds: &BoxBounds,
    seed: u64,
) -> Result<Vec<Vec<f64>>, DoeError> {
    if n == 0 || m == 0 {
        return Err(DoeError::InvalidBounds(format!(
            "need n >= 1 and m >= 1, got n={n}, m={m}"
        )));
    }
    if bounds.dim() != m {
        return Err(DoeError::InvalidBounds(format!(
            "bounds have dimension {}, expected {m}",
            bounds.dim()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut points = vec![vec![0.0; m]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..m {
        // Fisher-Yates shuffle of the stratum indices.
        for i in (1..n).rev() {
            let k = next_index(&mut rng, i + 1);
            strata.swap(i, k);
        }
        let lo = bounds.lower[j];
        let w = bounds.width(j) / n as f64;
        for (i, row) in points.iter_mut().enumerate() {
            let offset = next_open01(&mut rng);
            row[j] = lo + (strata[i] as f64 + offset) * w;
        }
    }
    Ok(points)
}
