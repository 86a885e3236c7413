use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::quadrature::normal_cdf;
use crate::error::{Error, Result};

/// Single-site law of an i.i.d. potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalDistribution {
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, variance: f64 },
    /// Two atoms: `values[1]` with probability `p`, `values[0]` otherwise.
    /// Has no density; kept as a negative control.
    Bernoulli { p: f64, values: [f64; 2] },
}

impl MarginalDistribution {
    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        let m = MarginalDistribution::Uniform { low, high };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        let m = MarginalDistribution::Gaussian { mean, variance };
        m.validate()?;
        Ok(m)
    }

    pub fn bernoulli(p: f64, values: [f64; 2]) -> Result<Self> {
        let m = MarginalDistribution::Bernoulli { p, values };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match *self {
            MarginalDistribution::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return bad(format!("uniform needs finite low < high, got [{low}, {high}]"));
                }
            }
            MarginalDistribution::Gaussian { mean, variance } => {
                if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
                    return bad(format!("gaussian needs positive variance, got {variance}"));
                }
            }
            MarginalDistribution::Bernoulli { p, values } => {
                if !(0.0..=1.0).contains(&p) || !values.iter().all(|v| v.is_finite()) {
                    return bad(format!("bernoulli needs p in [0, 1] and finite values, got {p}"));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match *self {
            MarginalDistribution::Uniform { low, high } => format!("uniform[{low},{high}]"),
            MarginalDistribution::Gaussian { mean, variance } => {
                format!("gaussian({mean},{variance})")
            }
            MarginalDistribution::Bernoulli { p, values } => {
                format!("bernoulli({p};{},{})", values[0], values[1])
            }
        }
    }

    /// `None` for the atomic law.
    pub fn density(&self, x: f64) -> Option<f64> {
        match *self {
            MarginalDistribution::Uniform { low, high } => Some(if (low..=high).contains(&x) {
                1.0 / (high - low)
            } else {
                0.0
            }),
            MarginalDistribution::Gaussian { mean, variance } => {
                let z = (x - mean) * (x - mean) / variance;
                Some((-0.5 * z).exp() / (2.0 * std::f64::consts::PI * variance).sqrt())
            }
            MarginalDistribution::Bernoulli { .. } => None,
        }
    }

    /// `sup_x p(x)`, `None` for the atomic law.
    pub fn density_sup(&self) -> Option<f64> {
        match *self {
            MarginalDistribution::Uniform { low, high } => Some(1.0 / (high - low)),
            MarginalDistribution::Gaussian { variance, .. } => {
                Some(1.0 / (2.0 * std::f64::consts::PI * variance).sqrt())
            }
            MarginalDistribution::Bernoulli { .. } => None,
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            MarginalDistribution::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            MarginalDistribution::Gaussian { mean, variance } => {
                normal_cdf((x - mean) / variance.sqrt())
            }
            MarginalDistribution::Bernoulli { .. } => self
                .atoms()
                .iter()
                .filter(|(v, _)| *v <= x)
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            MarginalDistribution::Bernoulli { .. } => self
                .atoms()
                .iter()
                .filter(|(v, _)| *v < x)
                .map(|(_, w)| w)
                .sum(),
            _ => self.cdf(x),
        }
    }

    /// Mass of the closed interval `[a, b]`.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        (self.cdf(b) - self.cdf_left(a)).max(0.0)
    }

    /// Atoms `(value, weight)` with positive weight, merged if the values coincide.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match *self {
            MarginalDistribution::Bernoulli { p, values } => {
                let mut out: Vec<(f64, f64)> = Vec::new();
                for (v, w) in [(values[0], 1.0 - p), (values[1], p)] {
                    if w <= 0.0 {
                        continue;
                    }
                    match out.iter_mut().find(|(u, _)| *u == v) {
                        Some(e) => e.1 += w,
                        None => out.push((v, w)),
                    }
                }
                out.sort_by(|a, b| a.0.total_cmp(&b.0));
                out
            }
            _ => Vec::new(),
        }
    }

    pub fn max_atom(&self) -> f64 {
        self.atoms().iter().map(|a| a.1).fold(0.0, f64::max)
    }

    /// Interval outside of which the law has negligible (< 1e-15) mass.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            MarginalDistribution::Uniform { low, high } => (low, high),
            MarginalDistribution::Gaussian { mean, variance } => {
                let w = 8.5 * variance.sqrt();
                (mean - w, mean + w)
            }
            MarginalDistribution::Bernoulli { values, .. } => {
                (values[0].min(values[1]), values[0].max(values[1]))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MarginalDistribution::Uniform { low, high } => 0.5 * (low + high),
            MarginalDistribution::Gaussian { mean, .. } => mean,
            MarginalDistribution::Bernoulli { p, values } => (1.0 - p) * values[0] + p * values[1],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarginalDistribution::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            MarginalDistribution::Gaussian { mean, variance } => Normal::new(mean, variance.sqrt())
                .expect("validated variance")
                .sample(rng),
            MarginalDistribution::Bernoulli { p, values } => {
                if rng.random::<f64>() < p {
                    values[1]
                } else {
                    values[0]
                }
            }
        }
    }
}
