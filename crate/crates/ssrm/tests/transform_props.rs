//! Property tests for the X-space <-> U-space transform.

use proptest::prelude::*;
use ssrm::Marginal;

fn arbitrary_marginal() -> impl Strategy<Value = Marginal> {
    prop_oneof![
        (-1e3..1e3f64, 1e-3..1e3f64).prop_map(|(mean, std)| Marginal::normal(mean, std).unwrap()),
        (-1e3..1e3f64, 1e-3..1e3f64)
            .prop_map(|(low, width)| Marginal::uniform(low, low + width).unwrap()),
        (-1e3..1e3f64, 1e-3..1e3f64)
            .prop_map(|(loc, scale)| Marginal::gumbel_max(loc, scale).unwrap()),
    ]
}

proptest! {
    // Round trip through U-space over the central quantile range.
    #[test]
    fn from_u_inverts_to_u(m in arbitrary_marginal(), q in 1e-6..=0.999999f64) {
        let x = m.inv_cdf(q).unwrap();
        let back = m.from_u(m.to_u(x));
        let scale = x.abs().max(m.std());
        prop_assert!(
            (back - x).abs() <= 1e-8 * scale,
            "{m:?}: x={x}, back={back}"
        );
    }

    // to_u is strictly increasing in x.
    #[test]
    fn to_u_is_strictly_increasing(
        m in arbitrary_marginal(),
        qs in proptest::collection::vec(1e-6..=0.999999f64, 2..20)
    ) {
        let mut xs: Vec<f64> = qs.iter().map(|&q| m.inv_cdf(q).unwrap()).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let us: Vec<f64> = xs.iter().map(|&x| m.to_u(x)).collect();
        for w in us.windows(2) {
            prop_assert!(w[1] > w[0], "not increasing: {us:?}");
        }
    }
}

/// 1e6 variates drawn through `from_u` reproduce the declared mean within
/// four standard errors, for all three marginal kinds.
#[test]
fn moment_recovery_through_from_u() {
    use rand_chacha::ChaCha12Rng;
    use rand_core::{RngCore, SeedableRng};

    let marginals = [
        Marginal::normal(250.0, 37.5).unwrap(),
        Marginal::uniform(70.0, 80.0).unwrap(),
        Marginal::gumbel_max_from_moments(1500.0, 350.0).unwrap(),
    ];
    let n = 1_000_000usize;
    for m in marginals {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let mut sum = 0.0;
        for _ in 0..n {
            let u01 = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
            let z = ssrm::normal::norm_ppf(u01);
            sum += m.from_u(z);
        }
        let mean = sum / n as f64;
        let se = m.std() / (n as f64).sqrt();
        assert!(
            (mean - m.mean()).abs() <= 4.0 * se,
            "{m:?}: sample mean {mean} vs declared {} (se {se})",
            m.mean()
        );
    }
}
