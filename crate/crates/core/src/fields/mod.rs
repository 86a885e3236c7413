//! Random potentials: i.i.d. fields, stationary Gaussian fields and Gibbs
//! fields with bounded continuous spin.

mod gaussian;
mod gibbs;
mod marginal;
pub mod quadrature;
mod sample;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use gaussian::{
    conditional_gaussian_variance, conditional_variance_floor,
    conditional_variance_floor_with_context, conditional_variances, sample_gaussian,
    CovarianceFamily, GaussianFieldModel, GaussianSampler, SingleSiteConditionals, PSD_JITTER,
};
pub use gibbs::{
    sample_gibbs, BoundaryCondition, ConditionalCdf, CouplingProfile, GibbsChain,
    GibbsFieldModel, GibbsSamplerSettings, LocalEnergy, PairKernel, SelfEnergy,
    MIN_BURN_IN_SWEEPS, POWER_LAW_CUTOFF,
};
pub use marginal::MarginalDistribution;
pub use sample::FieldSample;

use crate::error::Result;
use crate::lattice::Site;

/// Law of a random potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldModel {
    Iid { marginal: MarginalDistribution },
    Gaussian(GaussianFieldModel),
    Gibbs(GibbsFieldModel),
}

impl FieldModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            FieldModel::Iid { marginal } => marginal.validate(),
            FieldModel::Gaussian(m) => m.validate(),
            FieldModel::Gibbs(m) => m.validate(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            FieldModel::Iid { marginal } => format!("iid-{}", marginal.name()),
            FieldModel::Gaussian(m) => m.name(),
            FieldModel::Gibbs(m) => m.name(),
        }
    }
}

/// Independent draws from `marginal`, one per site.
pub fn sample_iid<R: Rng + ?Sized>(
    marginal: &MarginalDistribution,
    sites: &[Site],
    rng: &mut R,
) -> FieldSample {
    let values = sites.iter().map(|_| marginal.sample(rng)).collect();
    FieldSample::from_values(sites.to_vec(), values, None, marginal.name())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iid_uniform_mean() {
        // sd of the mean of 10^4 uniforms is 0.0029; 0.02 is ~7 sd
        let sites = LatticeBox::new(vec![0, 0], vec![99, 99]).unwrap().sites();
        let m = MarginalDistribution::uniform(0.0, 1.0).unwrap();
        let s = sample_iid(&m, &sites, &mut ChaCha8Rng::seed_from_u64(3));
        let mean = s.iter().map(|(_, v)| v).sum::<f64>() / s.len() as f64;
        assert!((mean - 0.5).abs() < 0.02);
    }

    #[test]
    fn iid_bernoulli_values_and_determinism() {
        let sites = LatticeBox::chain(200).unwrap().sites();
        let m = MarginalDistribution::bernoulli(0.5, [0.0, 1.0]).unwrap();
        let a = sample_iid(&m, &sites, &mut ChaCha8Rng::seed_from_u64(8));
        assert!(a.iter().all(|(_, v)| v == 0.0 || v == 1.0));
        let b = sample_iid(&m, &sites, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(a, b);
    }

    #[test]
    fn model_config_round_trip() {
        let json = r#"{"kind":"gibbs","spin_low":-1,"spin_high":1,"beta":1,
            "kernel":"product","couplings":{"kind":"finite","strengths":[-1]}}"#;
        let m: FieldModel = serde_json::from_str(json).unwrap();
        m.validate().unwrap();
        let again: FieldModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, again);
        let bad = r#"{"kind":"iid","marginal":{"kind":"uniform","low":0,"high":1,"extra":1}}"#;
        assert!(serde_json::from_str::<FieldModel>(bad).is_err());
    }
}
