//! Property tests for the RBF surrogate: interpolation, permutation
//! symmetry, and agreement of the closed-form LOOCV with its definition.

use proptest::prelude::*;
use ssrm::{loocv_error, KernelKind, RbfSurrogate};

/// Reference LOOCV straight from the definition: n refits, each predicting
/// the held-out sample. Independent of the closed-form path under test.
fn loocv_by_refit(x: &[Vec<f64>], y: &[f64], kind: KernelKind, c: f64) -> f64 {
    let mut total = 0.0;
    for hold in 0..x.len() {
        let xs: Vec<Vec<f64>> = x
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != hold)
            .map(|(_, p)| p.clone())
            .collect();
        let ys: Vec<f64> = y
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != hold)
            .map(|(_, v)| *v)
            .collect();
        let s = RbfSurrogate::fit(&xs, &ys, kind, c).expect("sub-fit");
        let e = y[hold] - s.predict(&x[hold]).expect("predict");
        total += e * e;
    }
    total
}

/// Well-separated random design: points on a perturbed integer lattice so
/// pairwise distances stay bounded away from zero.
fn design_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, f64)> {
    (3usize..12, 1usize..4, 0u64..u64::MAX).prop_map(|(n, m, seed)| {
        let mut state = seed;
        let mut next01 = move || {
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
        };
        let side = (n as f64).powf(1.0 / m as f64).ceil() as usize + 1;
        let mut x = Vec::with_capacity(n);
        for i in 0..n {
            let mut p = Vec::with_capacity(m);
            let mut idx = i;
            for _ in 0..m {
                let cell = (idx % side) as f64;
                idx /= side;
                p.push(1.5 * cell + 0.4 * next01());
            }
            x.push(p);
        }
        let y: Vec<f64> = x
            .iter()
            .map(|p| (p.iter().sum::<f64>() * 0.7).sin() + 0.3 * p[0])
            .collect();
        let c = 0.2 + 1.2 * next01();
        (x, y, c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolation_property((x, y, c) in design_strategy()) {
        let s = RbfSurrogate::fit(&x, &y, KernelKind::Gaussian, c).unwrap();
        let scale = y.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for (p, yi) in x.iter().zip(&y) {
            let err = (s.predict(p).unwrap() - yi).abs();
            prop_assert!(err <= 1e-6 * scale, "residual {err} at {p:?}");
        }
    }

    #[test]
    fn fit_invariant_under_permutation((x, y, c) in design_strategy(), rot in 1usize..7) {
        let s1 = RbfSurrogate::fit(&x, &y, KernelKind::Gaussian, c).unwrap();
        let k = rot % x.len();
        let mut xp = x.clone();
        let mut yp = y.clone();
        xp.rotate_left(k);
        yp.rotate_left(k);
        let s2 = RbfSurrogate::fit(&xp, &yp, KernelKind::Gaussian, c).unwrap();
        let m = x[0].len();
        for i in 0..12 {
            let probe: Vec<f64> = (0..m).map(|j| 0.37 * (i + j) as f64).collect();
            let a = s1.predict(&probe).unwrap();
            let b = s2.predict(&probe).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn closed_form_loocv_matches_refit((x, y, c) in design_strategy()) {
        for kind in [KernelKind::Gaussian, KernelKind::InverseMultiquadric] {
            let closed = loocv_error(&x, &y, kind, c).unwrap();
            let refit = loocv_by_refit(&x, &y, kind, c);
            prop_assert!(
                (closed - refit).abs() <= 1e-8 * refit.abs().max(1e-12),
                "{kind:?}: closed {closed} vs refit {refit}"
            );
        }
    }
}
