//! Marginal input distributions and the independent-variable map between
//! physical X-space and standard-normal U-space.
//!
//! Each input variable carries one [`Marginal`]; the U-space coordinate of a
//! physical value is `u = Phi^-1(F_X(x))` and the inverse map is
//! `x = F_X^-1(Phi(u))`. Probabilities are clamped to
//! `[1e-15, 1 - 1e-15]` before the inverse-normal step so tail values map to
//! large-but-finite coordinates instead of +/-infinity.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::normal::{norm_cdf, norm_ppf};

/// Euler-Mascheroni constant, used by the Gumbel moment fit.
pub const EULER_MASCHERONI: f64 = 0.577215664901532860606512090082;

/// Probability clamp applied before the inverse-normal transform.
pub const CDF_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DistError {
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
}

/// One input random variable: distribution kind plus its two parameters.
///
/// Gumbel is the max-type extreme value distribution, stored by location and
/// scale; table-style mean/std inputs go through [`gumbel_from_moments`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    GumbelMax { location: f64, scale: f64 },
}

/// Fit Gumbel (max) location/scale to a prescribed mean and standard deviation.
///
/// `scale = std * sqrt(6) / pi`, `location = mean - gamma * scale`.
pub fn gumbel_from_moments(mean: f64, std: f64) -> Result<(f64, f64), DistError> {
    if !(std > 0.0) || !std.is_finite() || !mean.is_finite() {
        return Err(DistError::InvalidParameter(format!(
            "gumbel moments require finite mean and std > 0, got mean={mean}, std={std}"
        )));
    }
    let scale = std * 6.0_f64.sqrt() / std::f64::consts::PI;
    let location = mean - EULER_MASCHERONI * scale;
    Ok((location, scale))
}

impl Marginal {
    pub fn normal(mean: f64, std: f64) -> Result<Self, DistError> {
        if !(std > 0.0) || !std.is_finite() || !mean.is_finite() {
            return Err(DistError::InvalidParameter(format!(
                "normal requires finite mean and std > 0, got mean={mean}, std={std}"
            )));
        }
        Ok(Marginal::Normal { mean, std })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self, DistError> {
        if !(high > low) || !low.is_finite() || !high.is_finite() {
            return Err(DistError::InvalidParameter(format!(
                "uniform requires finite low < high, got low={low}, high={high}"
            )));
        }
        Ok(Marginal::Uniform { low, high })
    }

    pub fn gumbel_max(location: f64, scale: f64) -> Result<Self, DistError> {
        if !(scale > 0.0) || !scale.is_finite() || !location.is_finite() {
            return Err(DistError::InvalidParameter(format!(
                "gumbel requires finite location and scale > 0, got location={location}, scale={scale}"
            )));
        }
        Ok(Marginal::GumbelMax { location, scale })
    }

    /// Gumbel (max) constructed from its first two moments.
    pub fn gumbel_max_from_moments(mean: f64, std: f64) -> Result<Self, DistError> {
        let (location, scale) = gumbel_from_moments(mean, std)?;
        Ok(Marginal::GumbelMax { location, scale })
    }

    /// Distribution mean.
    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Normal { mean, .. } => mean,
            Marginal::Uniform { low, high } => 0.5 * (low + high),
            Marginal::GumbelMax { location, scale } => location + EULER_MASCHERONI * scale,
        }
    }

    /// Distribution standard deviation.
    pub fn std(&self) -> f64 {
        match *self {
            Marginal::Normal { std, .. } => std,
            Marginal::Uniform { low, high } => (high - low) / 12.0_f64.sqrt(),
            Marginal::GumbelMax { scale, .. } => scale * std::f64::consts::PI / 6.0_f64.sqrt(),
        }
    }

    /// CDF `F_X(x)`. Returns exact 0 or 1 only as tail limits.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, std } => norm_cdf((x - mean) / std),
            Marginal::Uniform { low, high } => {
                if x <= low {
                    0.0
                } else if x >= high {
                    1.0
                } else {
                    (x - low) / (high - low)
                }
            }
            Marginal::GumbelMax { location, scale } => (-(-(x - location) / scale).exp()).exp(),
        }
    }

    /// Inverse CDF on the open interval (0, 1).
    pub fn inv_cdf(&self, p: f64) -> Result<f64, DistError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::ProbabilityOutOfRange(p));
        }
        Ok(match *self {
            Marginal::Normal { mean, std } => mean + std * norm_ppf(p),
            Marginal::Uniform { low, high } => low + p * (high - low),
            Marginal::GumbelMax { location, scale } => location - scale * (-p.ln()).ln(),
        })
    }

    /// Map a physical value to its standard-normal coordinate.
    pub fn to_u(&self, x: f64) -> f64 {
        if let Marginal::Normal { mean, std } = *self {
            return (x - mean) / std;
        }
        let p = self.cdf(x).clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
        norm_ppf(p)
    }

    /// Map a standard-normal coordinate back to a physical value.
    pub fn from_u(&self, u: f64) -> f64 {
        match *self {
            // Exact: F_X^-1(Phi(u)) collapses to the affine map.
            Marginal::Normal { mean, std } => mean + std * u,
            Marginal::Uniform { low, high } => low + norm_cdf(u) * (high - low),
            Marginal::GumbelMax { location, scale } => {
                let p = norm_cdf(u).clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
                location - scale * (-p.ln()).ln()
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Marginal::Normal { .. } => "normal",
            Marginal::Uniform { .. } => "uniform",
            Marginal::GumbelMax { .. } => "gumbel_max",
        }
    }
}

// Wire format: {"kind": "normal", "mean": .., "std": ..},
// {"kind": "uniform", "low": .., "high": ..},
// {"kind": "gumbel_max", "mean": .., "std": ..}.
// Gumbel additionally emits location/scale, which deserialization prefers so
// an echoed configuration reproduces the run bit-exactly; the mean/std keys
// remain the documented input form.
#[derive(Serialize, Deserialize)]
struct MarginalWire {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    location: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

impl Serialize for Marginal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let wire = match *self {
            Marginal::Normal { mean, std } => MarginalWire {
                kind: "normal".into(),
                mean: Some(mean),
                std: Some(std),
                low: None,
                high: None,
                location: None,
                scale: None,
            },
            Marginal::Uniform { low, high } => MarginalWire {
                kind: "uniform".into(),
                mean: None,
                std: None,
                low: Some(low),
                high: Some(high),
                location: None,
                scale: None,
            },
            Marginal::GumbelMax { location, scale } => MarginalWire {
                kind: "gumbel_max".into(),
                mean: Some(location + EULER_MASCHERONI * scale),
                std: Some(scale * std::f64::consts::PI / 6.0_f64.sqrt()),
                low: None,
                high: None,
                location: Some(location),
                scale: Some(scale),
            },
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Marginal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = MarginalWire::deserialize(deserializer)?;
        let missing =
            |k: &str| D::Error::custom(format!("marginal kind '{}' requires '{k}'", wire.kind));
        let built = match wire.kind.as_str() {
            "normal" => Marginal::normal(
                wire.mean.ok_or_else(|| missing("mean"))?,
                wire.std.ok_or_else(|| missing("std"))?,
            ),
            "uniform" => Marginal::uniform(
                wire.low.ok_or_else(|| missing("low"))?,
                wire.high.ok_or_else(|| missing("high"))?,
            ),
            "gumbel_max" => match (wire.location, wire.scale) {
                (Some(location), Some(scale)) => Marginal::gumbel_max(location, scale),
                _ => Marginal::gumbel_max_from_moments(
                    wire.mean.ok_or_else(|| missing("mean"))?,
                    wire.std.ok_or_else(|| missing("std"))?,
                ),
            },
            other => {
                return Err(D::Error::custom(format!(
                    "unknown marginal kind '{other}' (expected normal, uniform, gumbel_max)"
                )))
            }
        };
        built.map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_examples() {
        let n = Marginal::normal(0.0, 1.0).unwrap();
        assert!((n.cdf(0.0) - 0.5).abs() < 1e-15);

        let u = Marginal::uniform(70.0, 80.0).unwrap();
        assert!((u.cdf(75.0) - 0.5).abs() < 1e-15);

        // Gumbel CDF at the location parameter is exp(-1).
        let g = Marginal::gumbel_max(3.2, 1.7).unwrap();
        assert!((g.cdf(3.2) - (-1.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn inv_cdf_examples() {
        let n = Marginal::normal(5.0, 2.0).unwrap();
        assert!((n.inv_cdf(0.5).unwrap() - 5.0).abs() < 1e-12);

        let u = Marginal::uniform(70.0, 80.0).unwrap();
        assert!((u.inv_cdf(0.25).unwrap() - 72.5).abs() < 1e-12);

        // Composition identity: quantile at p = exp(-1) is the fitted location.
        let (location, _) = gumbel_from_moments(1500.0, 350.0).unwrap();
        let g = Marginal::gumbel_max_from_moments(1500.0, 350.0).unwrap();
        let x = g.inv_cdf((-1.0_f64).exp()).unwrap();
        assert!((x - location).abs() < 1e-9 * location.abs());
    }

    #[test]
    fn inv_cdf_round_trip_within_1e10() {
        let marginals = [
            Marginal::normal(5.0, 2.0).unwrap(),
            Marginal::uniform(59.75, 60.25).unwrap(),
            Marginal::gumbel_max_from_moments(12000.0, 1200.0).unwrap(),
        ];
        for m in marginals {
            let mut p = 1e-9;
            while p < 1.0 {
                let x = m.inv_cdf(p).unwrap();
                assert!(
                    (m.cdf(x) - p).abs() < 1e-10,
                    "{m:?} p={p} x={x} back={}",
                    m.cdf(x)
                );
                p *= 1.9;
            }
        }
    }

    #[test]
    fn to_u_examples() {
        let n = Marginal::normal(10.0, 3.0).unwrap();
        assert!((n.to_u(13.0) - 1.0).abs() < 1e-12);

        let u = Marginal::uniform(-4.0, 10.0).unwrap();
        assert!(u.to_u(3.0).abs() < 1e-12);

        let beam_depth = Marginal::normal(250.0, 37.5).unwrap();
        assert!((beam_depth.to_u(325.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn from_u_examples() {
        let n = Marginal::normal(1000.0, 200.0).unwrap();
        assert_eq!(n.from_u(0.0), 1000.0);

        let u = Marginal::uniform(59.75, 60.25).unwrap();
        assert!((u.from_u(0.0) - 60.0).abs() < 1e-12);

        // Gumbel median: location - scale*ln(ln 2).
        let g = Marginal::gumbel_max_from_moments(12000.0, 1200.0).unwrap();
        let expect = 11_802.858_893_091_17;
        assert!((g.from_u(0.0) - expect).abs() < 1e-8 * expect);
    }

    #[test]
    fn gumbel_moment_fit_values() {
        let (mu, beta) = gumbel_from_moments(1500.0, 350.0).unwrap();
        assert!((beta - 272.893_880_431_786_6).abs() < 1e-9);
        assert!((mu - 1_342.481_377_359_007).abs() < 1e-9);

        let (mu, beta) = gumbel_from_moments(0.0, std::f64::consts::PI / 6.0_f64.sqrt()).unwrap();
        assert!((beta - 1.0).abs() < 1e-12);
        assert!((mu + EULER_MASCHERONI).abs() < 1e-12);

        let (mu, beta) = gumbel_from_moments(12000.0, 1200.0).unwrap();
        assert!((beta - 935.636_161_480_411_4).abs() < 1e-9);
        assert!((mu - 11_459.936_150_945_166).abs() < 1e-9);
    }

    #[test]
    fn gumbel_moment_fit_matches_quadrature_oracle() {
        // Independent check: integrate the fitted quantile function over (0,1)
        // with the composite midpoint rule to recover mean and variance.
        for (mean, std) in [(1500.0, 350.0), (12000.0, 1200.0), (3.0, 0.25)] {
            let g = Marginal::gumbel_max_from_moments(mean, std).unwrap();
            let n = 400_000;
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for i in 0..n {
                let p = (i as f64 + 0.5) / n as f64;
                let q = g.inv_cdf(p).unwrap();
                m1 += q;
                m2 += q * q;
            }
            m1 /= n as f64;
            m2 /= n as f64;
            let var = m2 - m1 * m1;
            assert!((m1 - mean).abs() < 1e-3 * std, "mean off: {m1} vs {mean}");
            assert!(
                (var.sqrt() - std).abs() < 2e-3 * std,
                "std off: {} vs {std}",
                var.sqrt()
            );
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(Marginal::normal(0.0, 0.0).is_err());
        assert!(Marginal::normal(0.0, -1.0).is_err());
        assert!(Marginal::uniform(5.0, 5.0).is_err());
        assert!(Marginal::uniform(5.0, 4.0).is_err());
        assert!(Marginal::gumbel_max(0.0, 0.0).is_err());
        assert!(gumbel_from_moments(10.0, -2.0).is_err());
        let n = Marginal::normal(0.0, 1.0).unwrap();
        assert!(n.inv_cdf(0.0).is_err());
        assert!(n.inv_cdf(1.0).is_err());
        assert!(n.inv_cdf(-0.5).is_err());
    }

    #[test]
    fn tail_clamp_keeps_u_finite() {
        let u = Marginal::uniform(0.0, 1.0).unwrap();
        assert!(u.to_u(-100.0).is_finite());
        assert!(u.to_u(100.0).is_finite());
        assert!(u.to_u(-100.0) < -7.0);
        assert!(u.to_u(100.0) > 7.0);
    }

    #[test]
    fn serde_wire_format() {
        let m = Marginal::normal(1000.0, 200.0).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"kind":"normal","mean":1000.0,"std":200.0}"#);
        assert_eq!(serde_json::from_str::<Marginal>(&json).unwrap(), m);

        let m = Marginal::uniform(70.0, 80.0).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"kind":"uniform","low":70.0,"high":80.0}"#);
        assert_eq!(serde_json::from_str::<Marginal>(&json).unwrap(), m);

        // Moments-only input form is accepted for gumbel.
        let g: Marginal =
            serde_json::from_str(r#"{"kind":"gumbel_max","mean":1500.0,"std":350.0}"#).unwrap();
        assert_eq!(g, Marginal::gumbel_max_from_moments(1500.0, 350.0).unwrap());

        // Echoed form round-trips bit-exactly via location/scale.
        let json = serde_json::to_string(&g).unwrap();
        let back: Marginal = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);

        assert!(
            serde_json::from_str::<Marginal>(r#"{"kind":"weibull","mean":1.0,"std":1.0}"#).is_err()
        );
        assert!(serde_json::from_str::<Marginal>(r#"{"kind":"normal","mean":1.0}"#).is_err());
    }
}
