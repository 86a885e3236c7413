use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    CovarianceFamily, FieldModel, GaussianFieldModel, GibbsFieldModel, MarginalDistribution,
    PairKernel,
};
use crate::lattice::{InteractionPotential, LatticeBox, MultiParticleBox};
use crate::oracle::{GridSpec, MeasureMethod, MeasureSpec};

/// Smallest accepted trial count.
pub const MIN_TRIALS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Wegner,
    Multiparticle,
    Gaussian,
    Gibbs,
    Oracle,
    Ids,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Wegner => "wegner",
            ExperimentKind::Multiparticle => "multiparticle",
            ExperimentKind::Gaussian => "gaussian",
            ExperimentKind::Gibbs => "gibbs",
            ExperimentKind::Oracle => "oracle",
            ExperimentKind::Ids => "ids",
        }
    }
}

/// One experiment run: a root seed, a trial count, and what to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    #[serde(default)]
    pub output: OutputSpec,
    pub experiment: ExperimentSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Potentials of the first `dump_fields` trials go to `fields/trial-<t>.csv`.
    #[serde(default)]
    pub dump_fields: usize,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_out_dir(),
            dump_fields: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    Wegner {
        lattice: LatticeBox,
        marginal: MarginalDistribution,
        energy: f64,
        epsilons: Vec<f64>,
    },
    Multiparticle {
        boxes: MultiParticleBox,
        #[serde(default = "zero_interaction")]
        interaction: InteractionPotential,
        marginal: MarginalDistribution,
        energy: f64,
        epsilons: Vec<f64>,
    },
    Gaussian {
        lattice: LatticeBox,
        model: GaussianFieldModel,
        energy: f64,
        epsilons: Vec<f64>,
        /// `Lambda'` is the shell of this width around the box; 0 disables conditioning.
        #[serde(default)]
        conditioning_margin: usize,
        #[serde(default = "default_moduli_trials")]
        moduli_outer_trials: usize,
    },
    Gibbs {
        lattice: LatticeBox,
        model: GibbsFieldModel,
        energy: f64,
        epsilons: Vec<f64>,
        #[serde(default)]
        conditioning_margin: usize,
        /// Independent heat-bath chains; trial `t` is drawn from chain `t % chains`.
        #[serde(default = "default_chains")]
        chains: usize,
        #[serde(default = "default_moduli_trials")]
        moduli_outer_trials: usize,
    },
    Oracle {
        cases: Vec<OracleCase>,
    },
    Ids {
        dim: usize,
        lengths: Vec<usize>,
        /// Absent means zero potential.
        #[serde(default)]
        marginal: Option<MarginalDistribution>,
        #[serde(default)]
        energies: Option<EnergyGrid>,
    },
}

fn zero_interaction() -> InteractionPotential {
    InteractionPotential::Zero
}

fn default_chains() -> usize {
    8
}

fn default_moduli_trials() -> usize {
    200
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyGrid {
    pub low: f64,
    pub high: f64,
    pub points: usize,
}

impl EnergyGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.low];
        }
        (0..self.points)
            .map(|k| self.low + (self.high - self.low) * k as f64 / (self.points - 1) as f64)
            .collect()
    }
}

/// `Phi` for an oracle case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Min { m: usize },
    Max { m: usize },
    Difference,
    Projection { m: usize, index: usize },
    SortedEigenvalue {
        lattice: LatticeBox,
        #[serde(default)]
        base: Option<Vec<f64>>,
        k: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCase {
    pub phi: PhiSpec,
    pub measure: MeasureSpec,
    /// Lower end of every tested interval `[a, a + eps]`.
    pub a: f64,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub method: Option<MeasureMethod>,
    /// Monotonicity check grid; none skips the check.
    #[serde(default)]
    pub monotonicity_grid: Option<GridSpec>,
    #[serde(default = "default_directions")]
    pub directions: usize,
}

fn default_directions() -> usize {
    8
}

impl ExperimentSpec {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentSpec::Wegner { .. } => ExperimentKind::Wegner,
            ExperimentSpec::Multiparticle { .. } => ExperimentKind::Multiparticle,
            ExperimentSpec::Gaussian { .. } => ExperimentKind::Gaussian,
            ExperimentSpec::Gibbs { .. } => ExperimentKind::Gibbs,
            ExperimentSpec::Oracle { .. } => ExperimentKind::Oracle,
            ExperimentSpec::Ids { .. } => ExperimentKind::Ids,
        }
    }

    pub fn epsilons(&self) -> &[f64] {
        match self {
            ExperimentSpec::Wegner { epsilons, .. }
            | ExperimentSpec::Multiparticle { epsilons, .. }
            | ExperimentSpec::Gaussian { epsilons, .. }
            | ExperimentSpec::Gibbs { epsilons, .. } => epsilons,
            _ => &[],
        }
    }
}

fn check_epsilons(eps: &[f64], what: &str) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Config(format!("{what}: empty epsilon grid")));
    }
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Config(format!("{what}: epsilons must be positive")));
    }
    if eps.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(format!("{what}: epsilons must be strictly increasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::Config(format!(
                "trial count {} is below the minimum of {MIN_TRIALS}",
                self.trials
            )));
        }
        match &self.experiment {
            ExperimentSpec::Wegner {
                marginal,
                energy,
                epsilons,
                ..
            } => {
                marginal.validate()?;
                check_energy(*energy)?;
                check_epsilons(epsilons, "wegner")
            }
            ExperimentSpec::Multiparticle {
                interaction,
                marginal,
                energy,
                epsilons,
                ..
            } => {
                marginal.validate()?;
                if !interaction.is_symmetric() {
                    log::warn!("interaction is not permutation symmetric");
                }
                check_energy(*energy)?;
                check_epsilons(epsilons, "multiparticle")
            }
            ExperimentSpec::Gaussian {
                model,
                energy,
                epsilons,
                moduli_outer_trials,
                ..
            } => {
                model.validate()?;
                check_energy(*energy)?;
                if *moduli_outer_trials == 0 {
                    return Err(Error::Config("moduli_outer_trials must be positive".into()));
                }
                check_epsilons(epsilons, "gaussian")
            }
            ExperimentSpec::Gibbs {
                model,
                energy,
                epsilons,
                chains,
                moduli_outer_trials,
                ..
            } => {
                model.validate()?;
                check_energy(*energy)?;
                if *chains == 0 {
                    return Err(Error::Config("chains must be positive".into()));
                }
                if *moduli_outer_trials == 0 {
                    return Err(Error::Config("moduli_outer_trials must be positive".into()));
                }
                check_epsilons(epsilons, "gibbs")
            }
            ExperimentSpec::Oracle { cases } => {
                if cases.is_empty() {
                    return Err(Error::Config("oracle: no cases".into()));
                }
                for c in cases {
                    check_epsilons(&c.epsilons, "oracle")?;
                }
                Ok(())
            }
            ExperimentSpec::Ids {
                dim,
                lengths,
                marginal,
                energies,
            } => {
                if *dim == 0 {
                    return Err(Error::Config("ids: dimension must be positive".into()));
                }
                if lengths.is_empty() || lengths.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config("ids: lengths must be non-empty and increasing".into()));
                }
                if let Some(m) = marginal {
                    m.validate()?;
                }
                if let Some(g) = energies {
                    if g.points == 0 || !(g.low <= g.high) {
                        return Err(Error::Config("ids: empty energy grid".into()));
                    }
                }
                Ok(())
            }
        }
    }

    /// Built-in configuration for each experiment kind.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let eps = vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1];
        let uniform = MarginalDistribution::Uniform {
            low: 0.0,
            high: 1.0,
        };
        let (trials, experiment) = match kind {
            ExperimentKind::Wegner => (
                10_000,
                ExperimentSpec::Wegner {
                    lattice: LatticeBox::centered(1, 10).expect("valid box"),
                    marginal: uniform,
                    energy: 1.0,
                    epsilons: eps,
                },
            ),
            ExperimentKind::Multiparticle => (
                2000,
                ExperimentSpec::Multiparticle {
                    boxes: MultiParticleBox::identical(LatticeBox::chain(3).expect("valid box"), 2)
                        .expect("valid boxes"),
                    interaction: InteractionPotential::HardCore { strength: 5.0 },
                    marginal: uniform,
                    energy: 1.0,
                    epsilons: eps,
                },
            ),
            ExperimentKind::Gaussian => (
                10_000,
                ExperimentSpec::Gaussian {
                    lattice: LatticeBox::chain(15).expect("valid box"),
                    model: GaussianFieldModel {
                        covariance: CovarianceFamily::Exponential {
                            variance: 1.0,
                            correlation_length: 2.0,
                        },
                    },
                    energy: 0.0,
                    epsilons: eps,
                    conditioning_margin: 0,
                    moduli_outer_trials: default_moduli_trials(),
                },
            ),
            ExperimentKind::Gibbs => (
                2000,
                ExperimentSpec::Gibbs {
                    lattice: LatticeBox::chain(9).expect("valid box"),
                    model: GibbsFieldModel::nearest_neighbor(-1.0, 1.0, 1.0, PairKernel::Product, -1.0)
                        .expect("valid model"),
                    energy: 0.0,
                    epsilons: eps,
                    conditioning_margin: 0,
                    chains: default_chains(),
                    moduli_outer_trials: default_moduli_trials(),
                },
            ),
            ExperimentKind::Oracle => (MIN_TRIALS, default_oracle()),
            ExperimentKind::Ids => (
                MIN_TRIALS,
                ExperimentSpec::Ids {
                    dim: 1,
                    lengths: vec![20, 40, 80],
                    marginal: Some(uniform),
                    energies: None,
                },
            ),
        };
        ExperimentConfig {
            seed: 20240601,
            trials,
            output: OutputSpec::default(),
            experiment,
        }
    }
}

fn check_energy(e: f64) -> Result<()> {
    if !e.is_finite() {
        return Err(Error::Config("energy must be finite".into()));
    }
    Ok(())
}

fn default_oracle() -> ExperimentSpec {
    let uniform = MarginalDistribution::Uniform {
        low: 0.0,
        high: 1.0,
    };
    let unit_grid = |points| GridSpec::Full {
        low: -1.0,
        high: 1.0,
        points,
    };
    let mut cases: Vec<OracleCase> = [2, 3]
        .into_iter()
        .map(|m| OracleCase {
            phi: PhiSpec::Min { m },
            measure: MeasureSpec::Product {
                marginal: uniform.clone(),
                m,
            },
            a: 0.0,
            epsilons: vec![0.01, 0.05, 0.1],
            method: Some(MeasureMethod::Grid { points: 400 }),
            monotonicity_grid: Some(unit_grid(11)),
            directions: default_directions(),
        })
        .collect();
    cases.push(OracleCase {
        phi: PhiSpec::SortedEigenvalue {
            lattice: LatticeBox::chain(2).expect("valid box"),
            base: None,
            k: 0,
        },
        measure: MeasureSpec::Product {
            marginal: uniform.clone(),
            m: 2,
        },
        a: -0.5,
        epsilons: vec![0.05, 0.1],
        method: Some(MeasureMethod::Grid { points: 200 }),
        monotonicity_grid: Some(unit_grid(20)),
        directions: default_directions(),
    });
    cases.push(OracleCase {
        phi: PhiSpec::Max { m: 2 },
        measure: MeasureSpec::Product {
            marginal: MarginalDistribution::Bernoulli {
                p: 0.5,
                values: [0.0, 1.0],
            },
            m: 2,
        },
        a: 0.0,
        epsilons: vec![0.5],
        method: Some(MeasureMethod::Grid { points: 2 }),
        monotonicity_grid: None,
        directions: default_directions(),
    });
    cases.push(OracleCase {
        phi: PhiSpec::Min { m: 3 },
        measure: MeasureSpec::Correlated {
            model: FieldModel::Gaussian(GaussianFieldModel {
                covariance: CovarianceFamily::Exponential {
                    variance: 1.0,
                    correlation_length: 1.0,
                },
            }),
            lattice: LatticeBox::chain(3).expect("valid box"),
        },
        a: 0.0,
        epsilons: vec![0.05, 0.1],
        method: Some(MeasureMethod::MonteCarlo { samples: 100_000 }),
        monotonicity_grid: None,
        directions: default_directions(),
    });
    ExperimentSpec::Oracle { cases }
}
