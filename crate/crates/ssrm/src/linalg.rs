//! Dense LU factorization with partial pivoting, sized for the small
//! interpolation systems this crate solves (n rarely above ~100).

/// Row-major square matrix stored flat.
#[derive(Debug, Clone)]
pub(crate) struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut best = 0.0_f64;
        for j in 0..self.n {
            let mut s = 0.0;
            for i in 0..self.n {
                s += self.get(i, j).abs();
            }
            best = best.max(s);
        }
        best
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub(crate) struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    pivots: Vec<usize>,
}

/// Factorize; returns `None` on an exactly zero pivot.
pub(crate) fn lu_decompose(a: &SquareMatrix) -> Option<LuFactors> {
    let n = a.n;
    let mut lu = a.data.clone();
    let mut pivots = vec![0usize; n];
    for k in 0..n {
        let mut p = k;
        let mut max = lu[k * n + k].abs();
        for i in (k + 1)..n {
            let v = lu[i * n + k].abs();
            if v > max {
                max = v;
                p = i;
            }
        }
        if max == 0.0 {
            return None;
        }
        pivots[k] = p;
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
        }
        let pivot = lu[k * n + k];
        for i in (k + 1)..n {
            let factor = lu[i * n + k] / pivot;
            lu[i * n + k] = factor;
            for j in (k + 1)..n {
                lu[i * n + j] -= factor * lu[k * n + j];
            }
        }
    }
    Some(LuFactors { n, lu, pivots })
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        // Rows were interchanged wholesale during factorization, so all
        // interchanges must hit the right-hand side before substitution.
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            for i in (k + 1)..n {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        for k in (0..n).rev() {
            x[k] /= self.lu[k * n + k];
            for i in 0..k {
                x[i] -= self.lu[i * n + k] * x[k];
            }
        }
        x
    }

    /// Explicit inverse, column by column.
    pub fn inverse(&self) -> SquareMatrix {
        let n = self.n;
        let mut inv = SquareMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            for (i, v) in col.iter().enumerate() {
                inv.set(i, j, *v);
            }
        }
        inv
    }
}

/// Reciprocal 1-norm condition estimate: `1 / (‖A‖₁ · ‖A⁻¹‖₁)`.
pub(crate) fn reciprocal_condition(a: &SquareMatrix, inv: &SquareMatrix) -> f64 {
    let prod = a.one_norm() * inv.one_norm();
    if prod == 0.0 || !prod.is_finite() {
        0.0
    } else {
        1.0 / prod
    }
}
