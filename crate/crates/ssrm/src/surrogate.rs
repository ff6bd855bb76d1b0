//! RBF interpolation of the limit state function in U-space: exact fit
//! through the samples, leave-one-out cross-validation error, and automatic
//! shape-parameter selection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{lu_decompose, reciprocal_condition, SquareMatrix};

/// Reciprocal-condition floor below which a kernel matrix is rejected.
pub const RCOND_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SurrogateError {
    #[error("kernel shape parameter must be positive, got {0}")]
    InvalidShape(f64),
    #[error("duplicate centers at rows {0} and {1}")]
    DuplicateCenters(usize, usize),
    #[error("kernel matrix is ill-conditioned (reciprocal condition estimate {rcond:.3e})")]
    IllConditioned { rcond: f64 },
    #[error("input has dimension {got}, surrogate expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("empty sample set")]
    EmptyDesign,
    #[error("sample count {rows} does not match output count {outputs}")]
    ShapeMismatch { rows: usize, outputs: usize },
    #[error("shape selection failed: every candidate was ill-conditioned")]
    ShapeSelectionFailed,
}

/// Radial kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    InverseMultiquadric,
    ThinPlateSpline,
}

impl KernelKind {
    #[inline]
    fn value_unchecked(self, r: f64, c: f64) -> f64 {
        match self {
            KernelKind::Gaussian => (-c * r * r).exp(),
            KernelKind::InverseMultiquadric => 1.0 / (r * r + c * c).sqrt(),
            KernelKind::ThinPlateSpline => {
                let r2 = r * r;
                r2 * (c * r2 + 1.0).ln()
            }
        }
    }
}

/// Kernel evaluation at radius `r` with shape parameter `c > 0`.
pub fn kernel_value(kind: KernelKind, r: f64, c: f64) -> Result<f64, SurrogateError> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(SurrogateError::InvalidShape(c));
    }
    Ok(kind.value_unchecked(r, c))
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Fitted RBF interpolator: `ŷ(u) = Σ βᵢ φ(‖u − xᵢ‖)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbfSurrogate {
    centers: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    kernel: KernelKind,
    shape_c: f64,
    outputs: Vec<f64>,
}

struct Factored {
    beta: Vec<f64>,
    inv_diag: Vec<f64>,
}

/// Build the kernel matrix and solve `F β = y`, with one step of iterative
/// refinement to pull the center residuals back toward machine precision.
fn factor_system(
    x: &[Vec<f64>],
    y: &[f64],
    kind: KernelKind,
    c: f64,
) -> Result<Factored, SurrogateError> {
    let n = x.len();
    if n == 0 {
        return Err(SurrogateError::EmptyDesign);
    }
    if y.len() != n {
        return Err(SurrogateError::ShapeMismatch {
            rows: n,
            outputs: y.len(),
        });
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(SurrogateError::InvalidShape(c));
    }
    let m = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != m {
            return Err(SurrogateError::DimensionMismatch {
                got: row.len(),
                expected: m,
            });
        }
        for (offset, later) in x[i + 1..].iter().enumerate() {
            if euclidean(row, later) == 0.0 {
                return Err(SurrogateError::DuplicateCenters(i, i + 1 + offset));
            }
        }
    }
    let mut f = SquareMatrix::zeros(n);
    for i in 0..n {
        f.set(i, i, kind.value_unchecked(0.0, c));
        for j in (i + 1)..n {
            let v = kind.value_unchecked(euclidean(&x[i], &x[j]), c);
            f.set(i, j, v);
            f.set(j, i, v);
        }
    }
    let lu = lu_decompose(&f).ok_or(SurrogateError::IllConditioned { rcond: 0.0 })?;
    let inv = lu.inverse();
    let rcond = reciprocal_condition(&f, &inv);
    if rcond < RCOND_THRESHOLD {
        return Err(SurrogateError::IllConditioned { rcond });
    }
    let mut beta = lu.solve(y);
    let fb = f.mul_vec(&beta);
    let residual: Vec<f64> = y.iter().zip(&fb).map(|(yi, fi)| yi - fi).collect();
    let correction = lu.solve(&residual);
    for (b, d) in beta.iter_mut().zip(&correction) {
        *b += d;
    }
    let inv_diag = (0..n).map(|i| inv.get(i, i)).collect();
    Ok(Factored { beta, inv_diag })
}

impl RbfSurrogate {
    /// Interpolate `y` over the design `x` (rows are U-space points).
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        kind: KernelKind,
        c: f64,
    ) -> Result<Self, SurrogateError> {
        let factored = factor_system(x, y, kind, c)?;
        Ok(RbfSurrogate {
            centers: x.to_vec(),
            coefficients: factored.beta,
            kernel: kind,
            shape_c: c,
            outputs: y.to_vec(),
        })
    }

    pub fn predict(&self, u: &[f64]) -> Result<f64, SurrogateError> {
        if u.len() != self.dim() {
            return Err(SurrogateError::DimensionMismatch {
                got: u.len(),
                expected: self.dim(),
            });
        }
        Ok(self.predict_unchecked(u))
    }

    /// Prediction without the dimension check, for hot loops that already
    /// validated their inputs.
    #[inline]
    pub fn predict_unchecked(&self, u: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.coefficients)
            .map(|(center, beta)| {
                beta * self
                    .kernel
                    .value_unchecked(euclidean(u, center), self.shape_c)
            })
            .sum()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn shape_c(&self) -> f64 {
        self.shape_c
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers.first().map_or(0, |c| c.len())
    }
}

/// Leave-one-out cross-validation error, the sum of squared residuals of the
/// n drop-one refits. Computed in closed form as `eᵢ = βᵢ / (F⁻¹)ᵢᵢ`, which is
/// algebraically identical to refitting without sample i.
pub fn loocv_error(
    x: &[Vec<f64>],
    y: &[f64],
    kind: KernelKind,
    c: f64,
) -> Result<f64, SurrogateError> {
    if x.len() < 2 {
        return Err(SurrogateError::InsufficientSamples {
            needed: 2,
            got: x.len(),
        });
    }
    let factored = factor_system(x, y, kind, c)?;
    let mut total = 0.0;
    for (beta, inv_d) in factored.beta.iter().zip(&factored.inv_diag) {
        let e = beta / inv_d;
        total += e * e;
    }
    Ok(total)
}

/// Shape-parameter search configuration: a log-spaced grid over
/// `[low, high] / median_squared_distance` refined by golden-section steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSearch {
    pub grid_size: usize,
    pub log10_low: f64,
    pub log10_high: f64,
    pub refine_iters: usize,
}

impl Default for ShapeSearch {
    fn default() -> Self {
        ShapeSearch {
            grid_size: 25,
            log10_low: -3.0,
            log10_high: 3.0,
            refine_iters: 20,
        }
    }
}

/// Median squared pairwise distance of the design, the scale that makes the
/// shape grid dimensionless.
fn median_squared_distance(x: &[Vec<f64>]) -> f64 {
    let mut d2: Vec<f64> = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let d = euclidean(&x[i], &x[j]);
            d2.push(d * d);
        }
    }
    d2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = d2.len() / 2;
    let med = if d2.len() % 2 == 1 {
        d2[mid]
    } else {
        0.5 * (d2[mid - 1] + d2[mid])
    };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// Pick the shape parameter minimizing LOOCV error.
///
/// Ill-conditioned candidates are skipped; if every candidate fails the
/// search itself errors. Deterministic for fixed inputs.
pub fn select_shape(
    x: &[Vec<f64>],
    y: &[f64],
    kind: KernelKind,
    search: &ShapeSearch,
) -> Result<f64, SurrogateError> {
    if x.len() < 2 {
        return Err(SurrogateError::InsufficientSamples {
            needed: 2,
            got: x.len(),
        });
    }
    let scale = median_squared_distance(x);
    let eval = |log_c: f64| -> Option<f64> {
        let c = 10.0_f64.powf(log_c) / scale;
        loocv_error(x, y, kind, c).ok()
    };
    let k = search.grid_size.max(2);
    let mut best: Option<(f64, f64)> = None; // (log_c, loocv)
    let mut best_idx = 0usize;
    for i in 0..k {
        let log_c =
            search.log10_low + (search.log10_high - search.log10_low) * i as f64 / (k - 1) as f64;
        if let Some(err) = eval(log_c) {
            if best.is_none_or(|(_, b)| err < b) {
                best = Some((log_c, err));
                best_idx = i;
            }
        }
    }
    let (best_log, best_err) = best.ok_or(SurrogateError::ShapeSelectionFailed)?;
    // Golden-section refinement between the grid neighbors of the best point.
    let step = (search.log10_high - search.log10_low) / (k - 1) as f64;
    let mut a = best_log - step;
    let mut b = best_log + step;
    if best_idx == 0 {
        a = best_log;
    }
    if best_idx == k - 1 {
        b = best_log;
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    let track = |log_c: f64, err: Option<f64>, best: &mut (f64, f64)| {
        if let Some(e) = err {
            if e < best.1 {
                *best = (log_c, e);
            }
        }
    };
    let mut best = (best_log, best_err);
    track(x1, f1, &mut best);
    track(x2, f2, &mut best);
    for _ in 0..search.refine_iters {
        let keep_left = match (f1, f2) {
            (Some(v1), Some(v2)) => v1 <= v2,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        if keep_left {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1);
            track(x1, f1, &mut best);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2);
            track(x2, f2, &mut best);
        }
    }
    Ok(10.0_f64.powf(best.0) / scale)
}
