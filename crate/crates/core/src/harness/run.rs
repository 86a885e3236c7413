use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentSpec, OracleCase, PhiSpec};
use super::stats::{derive_trial_seed, wilson_interval};
use crate::concentration::{
    conditional_concentration_c1, gaussian_c1_bound, gibbs_c1_bound, levy_concentration,
    C1Estimate,
};
use crate::error::{Error, Result};
use crate::fields::{
    FieldModel, FieldSample, GaussianFieldModel, GibbsChain, GibbsFieldModel,
    MarginalDistribution,
};
use crate::lattice::{
    assemble_lso_values, assemble_multiparticle, projection_set, Hamiltonian, LatticeBox, Site,
};
use crate::oracle::{
    check_monotonic, default_method, verify_bound, Difference, LevelSetReport, Max, Min,
    MonotoneFunction, MonotonicityCheck, OperatorFamily, Projection, SortedEigenvalue,
};
use crate::spectra::{counting_function, dist_to_spectrum, eigenvalues_symmetric};

// seed domains, xor-ed into the root seed so auxiliary streams never reuse trial seeds
const FROZEN_DOMAIN: u64 = 0x6672_6f7a_656e_0001;
const CHAIN_DOMAIN: u64 = 0x6368_6169_6e73_0002;
const MODULI_DOMAIN: u64 = 0x6d6f_6475_6c69_0003;
const ORACLE_DOMAIN: u64 = 0x6f72_6163_6c65_0004;
const IDS_DOMAIN: u64 = 0x6964_7373_6565_0005;

/// Largest tolerated fraction of failed trials.
pub const MAX_FAILURE_FRACTION: f64 = 0.001;

/// Eigenvalues within this distance above `E` count as `<= E` in the IDS.
pub const IDS_TIE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { threads: 0 }
    }
}

impl RunOptions {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Vacuous,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Vacuous => "vacuous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "holds" => Some(Verdict::Holds),
            "violated" => Some(Verdict::Violated),
            "vacuous" => Some(Verdict::Vacuous),
            _ => None,
        }
    }

    /// `violated` iff the lower confidence limit exceeds the bound; `vacuous`
    /// when the modulus behind the bound does not decay.
    pub fn decide(ci_low: f64, bound: f64, non_decaying: bool) -> Self {
        if ci_low > bound {
            Verdict::Violated
        } else if non_decaying {
            Verdict::Vacuous
        } else {
            Verdict::Holds
        }
    }
}

/// `P{ dist(spectrum, E) <= eps }` at one `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub epsilon: f64,
    pub trials: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Bound with the modulus at `2 eps`; the verdict is taken against this one.
    pub bound_2eps: f64,
    /// Same bound with the modulus at `eps`.
    pub bound_paper: f64,
    pub verdict: Verdict,
    /// `ci_low <= bound_paper`, the bound with the modulus at `eps`.
    pub eps_bound_respected: bool,
    /// Multi-particle only: `|Lambda|^2 s(2 eps)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound_volume_squared: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    pub margin: usize,
    /// Number of frozen sites in the shell around the box.
    pub frozen_sites: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub model_id: String,
    pub dims: String,
    pub particles: usize,
    pub energy: f64,
    pub seed: u64,
    pub requested_trials: usize,
    pub failed_trials: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conditioning: Option<Conditioning>,
    /// Constant multiplying `eps` in the modulus bound, when one is used.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub modulus_constant: Option<f64>,
    pub estimates: Vec<ProbabilityEstimate>,
    #[serde(skip)]
    pub field_samples: Vec<(usize, FieldSample)>,
    #[serde(skip)]
    pub moduli: Vec<C1Estimate>,
}

impl ExperimentResult {
    pub fn any_violated(&self) -> bool {
        self.estimates.iter().any(|e| e.verdict == Verdict::Violated)
    }
}

struct TrialBatch {
    distances: Vec<f64>,
    samples: Vec<(usize, FieldSample)>,
    failed: usize,
}

/// Runs `trial(t)` for `t < trials` on the pool and gathers results in trial order.
fn run_trials<F>(opts: &RunOptions, trials: usize, dump: usize, trial: F) -> Result<TrialBatch>
where
    F: Fn(usize) -> Result<(f64, FieldSample)> + Sync,
{
    let pool = opts.pool()?;
    let outcomes: Vec<Result<(f64, FieldSample)>> =
        pool.install(|| (0..trials).into_par_iter().map(&trial).collect());
    let mut distances = Vec::with_capacity(trials);
    let mut samples = Vec::new();
    let mut failed = 0;
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((d, s)) => {
                distances.push(d);
                if t < dump {
                    samples.push((t, s));
                }
            }
            Err(e) => {
                failed += 1;
                log::warn!("trial {t} failed: {e}");
            }
        }
    }
    if failed as f64 > MAX_FAILURE_FRACTION * trials as f64 {
        return Err(Error::TooManyFailures { failed, trials });
    }
    Ok(TrialBatch {
        distances,
        samples,
        failed,
    })
}

fn distance(h: &Hamiltonian, energy: f64) -> Result<f64> {
    dist_to_spectrum(&eigenvalues_symmetric(h)?, energy)
}

struct BoundSet {
    two_eps: f64,
    at_eps: f64,
    volume_squared: Option<f64>,
}

/// Shared-sample sweep: every trial's distance is tested against every `eps`.
fn sweep_estimates<B>(
    distances: &[f64],
    epsilons: &[f64],
    non_decaying: bool,
    bounds: B,
) -> Result<Vec<ProbabilityEstimate>>
where
    B: Fn(f64) -> BoundSet,
{
    let n = distances.len();
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    epsilons
        .iter()
        .map(|&eps| {
            let hits = sorted.partition_point(|d| *d <= eps);
            let (ci_low, ci_high) = wilson_interval(hits as u64, n as u64, 0.95)?;
            let b = bounds(eps);
            Ok(ProbabilityEstimate {
                epsilon: eps,
                trials: n,
                hits,
                p_hat: hits as f64 / n as f64,
                ci_low,
                ci_high,
                bound_2eps: b.two_eps,
                bound_paper: b.at_eps,
                verdict: Verdict::decide(ci_low, b.two_eps, non_decaying),
                eps_bound_respected: ci_low <= b.at_eps,
                bound_volume_squared: b.volume_squared,
            })
        })
        .collect()
}

fn iid_values(marginal: &MarginalDistribution, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| marginal.sample(rng)).collect()
}

fn trial_rng(seed: u64, t: usize) -> (u64, ChaCha8Rng) {
    let s = derive_trial_seed(seed, t as u64);
    (s, ChaCha8Rng::seed_from_u64(s))
}

/// Single-particle operator with an i.i.d. potential: hit iff `dist(spectrum, E) <= eps`.
/// Bound `|Lambda|^2 s(2 eps)`.
pub fn run_wegner_trials(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    let ExperimentSpec::Wegner {
        lattice,
        marginal,
        energy,
        epsilons,
    } = &config.experiment
    else {
        return Err(Error::Config("not a wegner experiment".into()));
    };
    let sites = lattice.sites();
    let model_id = format!("iid-{}", marginal.name());
    let batch = run_trials(opts, config.trials, config.output.dump_fields, |t| {
        let (s, mut rng) = trial_rng(config.seed, t);
        let values = iid_values(marginal, sites.len(), &mut rng);
        let h = assemble_lso_values(lattice, values.clone());
        let field = FieldSample::from_values(sites.clone(), values, Some(s), &model_id);
        Ok((distance(&h, *energy)?, field))
    })?;
    let vol = lattice.cardinality() as f64;
    let estimates = sweep_estimates(&batch.distances, epsilons, marginal.max_atom() > 0.0, |eps| {
        BoundSet {
            two_eps: vol * vol * levy_concentration(marginal, 2.0 * eps),
            at_eps: vol * vol * levy_concentration(marginal, eps),
            volume_squared: None,
        }
    })?;
    Ok(ExperimentResult {
        experiment: "wegner".into(),
        model_id,
        dims: lattice.dims_label(),
        particles: 1,
        energy: *energy,
        seed: config.seed,
        requested_trials: config.trials,
        failed_trials: batch.failed,
        conditioning: None,
        modulus_constant: None,
        estimates,
        field_samples: batch.samples,
        moduli: Vec::new(),
    })
}

/// N-particle operator with an i.i.d. one-body potential on the projection set.
/// Verdict against `|Lambda| M(Lambda) s(2 eps)`; `|Lambda|^2 s(2 eps)` is reported alongside.
pub fn run_multiparticle_trials(
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<ExperimentResult> {
    let ExperimentSpec::Multiparticle {
        boxes,
        interaction,
        marginal,
        energy,
        epsilons,
    } = &config.experiment
    else {
        return Err(Error::Config("not a multiparticle experiment".into()));
    };
    let sites = projection_set(boxes);
    let model_id = format!("iid-{}-{}", marginal.name(), interaction_label(interaction));
    let batch = run_trials(opts, config.trials, config.output.dump_fields, |t| {
        let (s, mut rng) = trial_rng(config.seed, t);
        let values = iid_values(marginal, sites.len(), &mut rng);
        let field = FieldSample::from_values(sites.clone(), values, Some(s), &model_id);
        let h = assemble_multiparticle(boxes, &field, interaction)?;
        Ok((distance(&h, *energy)?, field))
    })?;
    let vol = boxes.cardinality() as f64;
    let m = boxes.total_single_particle_sites() as f64;
    let estimates = sweep_estimates(&batch.distances, epsilons, marginal.max_atom() > 0.0, |eps| {
        let s2 = levy_concentration(marginal, 2.0 * eps);
        BoundSet {
            two_eps: vol * m * s2,
            at_eps: vol * m * levy_concentration(marginal, eps),
            volume_squared: Some(vol * vol * s2),
        }
    })?;
    for e in &estimates {
        log::info!(
            "multiparticle eps={} p_hat={} bound |L|M s(2eps)={} bound |L|^2 s(2eps)={}",
            e.epsilon,
            e.p_hat,
            e.bound_2eps,
            e.bound_volume_squared.unwrap_or(f64::NAN)
        );
    }
    Ok(ExperimentResult {
        experiment: "multiparticle".into(),
        model_id,
        dims: boxes.dims_label(),
        particles: boxes.particles(),
        energy: *energy,
        seed: config.seed,
        requested_trials: config.trials,
        failed_trials: batch.failed,
        conditioning: None,
        modulus_constant: None,
        estimates,
        field_samples: batch.samples,
        moduli: Vec::new(),
    })
}

fn interaction_label(u: &crate::lattice::InteractionPotential) -> String {
    use crate::lattice::InteractionPotential as U;
    match u {
        U::Zero => "u0".into(),
        U::HardCore { strength } => format!("hardcore{strength}"),
        U::Cluster { strength, range } => format!("cluster{strength}r{range}"),
        U::Coulomb { strength } => format!("coulomb{strength}"),
    }
}

/// Sites of the shell of width `margin` around `lattice`.
fn shell(lattice: &LatticeBox, margin: usize) -> Result<Vec<Site>> {
    if margin == 0 {
        return Ok(Vec::new());
    }
    let outer = lattice.expanded(margin as i64)?;
    Ok(outer
        .sites()
        .into_iter()
        .filter(|x| !lattice.contains(x))
        .collect())
}

/// Gaussian or Gibbs potential: `|Lambda|^2 C eps'` with `C` from the
/// conditional-variance floor resp. the Gibbs density bound, at `eps' = 2 eps`.
/// With a conditioning margin the potential on the surrounding shell is drawn
/// once and frozen; every trial then samples the box given the shell.
pub fn run_correlated_trials(
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<ExperimentResult> {
    match &config.experiment {
        ExperimentSpec::Gaussian {
            lattice,
            model,
            energy,
            epsilons,
            conditioning_margin,
            moduli_outer_trials,
        } => run_gaussian(
            config,
            opts,
            lattice,
            model,
            *energy,
            epsilons,
            *conditioning_margin,
            *moduli_outer_trials,
        ),
        ExperimentSpec::Gibbs {
            lattice,
            model,
            energy,
            epsilons,
            conditioning_margin,
            chains,
            moduli_outer_trials,
        } => run_gibbs(
            config,
            opts,
            lattice,
            model,
            *energy,
            epsilons,
            *conditioning_margin,
            *chains,
            *moduli_outer_trials,
        ),
        _ => Err(Error::Config("not a gaussian or gibbs experiment".into())),
    }
}

fn doubled(epsilons: &[f64]) -> Vec<f64> {
    epsilons.iter().map(|e| 2.0 * e).collect()
}

#[allow(clippy::too_many_arguments)]
fn run_gaussian(
    config: &ExperimentConfig,
    opts: &RunOptions,
    lattice: &LatticeBox,
    model: &GaussianFieldModel,
    energy: f64,
    epsilons: &[f64],
    margin: usize,
    moduli_trials: usize,
) -> Result<ExperimentResult> {
    let sites = lattice.sites();
    let frozen = shell(lattice, margin)?;
    let sampler = if frozen.is_empty() {
        model.sampler(&sites)?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(config.seed ^ FROZEN_DOMAIN, 0));
        let values = model.sampler(&frozen)?.sample_values(&mut rng);
        model.conditional_sampler(&sites, &frozen, &values)?
    };
    let model_id = model.name();
    let batch = run_trials(opts, config.trials, config.output.dump_fields, |t| {
        let (s, mut rng) = trial_rng(config.seed, t);
        let values = sampler.sample_values(&mut rng);
        let h = assemble_lso_values(lattice, values.clone());
        let field = FieldSample::from_values(sites.clone(), values, Some(s), &model_id);
        Ok((distance(&h, energy)?, field))
    })?;
    // C1(eps) <= eps / sqrt(2 pi sigma0^2)
    let constant = gaussian_c1_bound(model, &sites, &frozen, 1.0)?;
    let vol = lattice.cardinality() as f64;
    let estimates = sweep_estimates(&batch.distances, epsilons, false, |eps| BoundSet {
        two_eps: vol * vol * constant * 2.0 * eps,
        at_eps: vol * vol * constant * eps,
        volume_squared: None,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(config.seed ^ MODULI_DOMAIN, 0));
    let moduli = conditional_concentration_c1(
        &FieldModel::Gaussian(model.clone()),
        lattice,
        &doubled(epsilons),
        moduli_trials,
        &mut rng,
    )?;
    Ok(ExperimentResult {
        experiment: "gaussian".into(),
        model_id,
        dims: lattice.dims_label(),
        particles: 1,
        energy,
        seed: config.seed,
        requested_trials: config.trials,
        failed_trials: batch.failed,
        conditioning: (margin > 0).then(|| Conditioning {
            margin,
            frozen_sites: frozen.len(),
        }),
        modulus_constant: Some(constant),
        estimates,
        field_samples: batch.samples,
        moduli,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_gibbs(
    config: &ExperimentConfig,
    opts: &RunOptions,
    lattice: &LatticeBox,
    model: &GibbsFieldModel,
    energy: f64,
    epsilons: &[f64],
    margin: usize,
    chains: usize,
    moduli_trials: usize,
) -> Result<ExperimentResult> {
    let sites = lattice.sites();
    let frozen = shell(lattice, margin)?;
    let boundary = if frozen.is_empty() {
        None
    } else {
        // equilibrate the enlarged box once and keep its shell
        let outer = lattice.expanded(margin as i64)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(config.seed ^ FROZEN_DOMAIN, 0));
        let mut chain = GibbsChain::new(model, &outer, None, &mut rng)?;
        chain.run(&mut rng, model.sampler.burn_in, model.sampler.thinning, 1)?;
        let values = chain
            .state(None)
            .values_at(&frozen)
            .ok_or_else(|| Error::InvalidArgument("shell outside the enlarged box".into()))?;
        Some(FieldSample::from_values(frozen.clone(), values, None, model.name()))
    };
    let pool = opts.pool()?;
    let trials = config.trials;
    let per_chain: Vec<Result<Vec<Vec<f64>>>> = pool.install(|| {
        (0..chains)
            .into_par_iter()
            .map(|c| {
                let count = (trials + chains - 1 - c) / chains;
                let s = derive_trial_seed(config.seed ^ CHAIN_DOMAIN, c as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let mut chain = GibbsChain::new(model, lattice, boundary.as_ref(), &mut rng)?;
                if count == 0 {
                    return Ok(Vec::new());
                }
                chain.run(&mut rng, model.sampler.burn_in, model.sampler.thinning, count)
            })
            .collect()
    });
    let per_chain = per_chain.into_iter().collect::<Result<Vec<_>>>()?;
    let model_id = model.name();
    let batch = run_trials(opts, trials, config.output.dump_fields, |t| {
        let values = per_chain[t % chains][t / chains].clone();
        let h = assemble_lso_values(lattice, values.clone());
        let field = FieldSample::from_values(sites.clone(), values, None, &model_id);
        Ok((distance(&h, energy)?, field))
    })?;
    let constant = gibbs_c1_bound(model, lattice.dim(), 1.0);
    let vol = lattice.cardinality() as f64;
    let estimates = sweep_estimates(&batch.distances, epsilons, false, |eps| BoundSet {
        two_eps: vol * vol * constant * 2.0 * eps,
        at_eps: vol * vol * constant * eps,
        volume_squared: None,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(config.seed ^ MODULI_DOMAIN, 0));
    let moduli = conditional_concentration_c1(
        &FieldModel::Gibbs(model.clone()),
        lattice,
        &doubled(epsilons),
        moduli_trials,
        &mut rng,
    )?;
    Ok(ExperimentResult {
        experiment: "gibbs".into(),
        model_id,
        dims: lattice.dims_label(),
        particles: 1,
        energy,
        seed: config.seed,
        requested_trials: config.trials,
        failed_trials: batch.failed,
        conditioning: (margin > 0).then(|| Conditioning {
            margin,
            frozen_sites: frozen.len(),
        }),
        modulus_constant: Some(constant),
        estimates,
        field_samples: batch.samples,
        moduli,
    })
}

/// Trial-averaged normalized counting function on one box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdsCurve {
    pub l: usize,
    pub sites: usize,
    pub trials: usize,
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
}

impl IdsCurve {
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn sup_distance(&self, other: &IdsCurve) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Value at the largest grid energy `<= e` (the first value below the grid).
    pub fn value_at(&self, e: f64) -> f64 {
        let k = self.energies.partition_point(|x| *x <= e);
        if k == 0 {
            return self.values[0];
        }
        self.values[k - 1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdsResult {
    pub dim: usize,
    pub seed: u64,
    pub model_id: String,
    pub curves: Vec<IdsCurve>,
    /// Sup distance between curves of successive lengths.
    pub successive_sup_distances: Vec<f64>,
}

/// `k_L(E) = E #{ j : E_j <= E } / |Lambda_L|` on `Lambda_L = [-L, L]^d`.
/// Zero disorder is deterministic and runs a single trial.
pub fn estimate_ids(config: &ExperimentConfig, opts: &RunOptions) -> Result<IdsResult> {
    let ExperimentSpec::Ids {
        dim,
        lengths,
        marginal,
        energies,
    } = &config.experiment
    else {
        return Err(Error::Config("not an ids experiment".into()));
    };
    let grid = match energies {
        Some(g) => g.values(),
        None => {
            let (lo, hi) = match marginal {
                Some(m) => m.effective_support(),
                None => (0.0, 0.0),
            };
            let r = 2.0 * *dim as f64;
            super::config::EnergyGrid {
                low: lo - r - 0.5,
                high: hi + r + 0.5,
                points: 401,
            }
            .values()
        }
    };
    let trials = if marginal.is_some() { config.trials } else { 1 };
    let pool = opts.pool()?;
    let mut curves = Vec::with_capacity(lengths.len());
    for &l in lengths {
        let lattice = LatticeBox::centered(*dim, l as i64)?;
        let sites = lattice.sites();
        let n = sites.len();
        let seed = derive_trial_seed(config.seed ^ IDS_DOMAIN, l as u64);
        let counts: Vec<Result<Vec<usize>>> = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let values = match marginal {
                        Some(m) => {
                            let (_, mut rng) = trial_rng(seed, t);
                            iid_values(m, n, &mut rng)
                        }
                        None => vec![0.0; n],
                    };
                    let spec = eigenvalues_symmetric(&assemble_lso_values(&lattice, values))?;
                    Ok(grid
                        .iter()
                        .map(|e| counting_function(&spec, e + IDS_TIE_TOLERANCE))
                        .collect())
                })
                .collect()
        });
        let mut totals = vec![0usize; grid.len()];
        for c in counts {
            for (tot, k) in totals.iter_mut().zip(c?) {
                *tot += k;
            }
        }
        let values = totals
            .iter()
            .map(|&k| k as f64 / (trials * n) as f64)
            .collect();
        curves.push(IdsCurve {
            l,
            sites: n,
            trials,
            energies: grid.clone(),
            values,
        });
    }
    let successive_sup_distances = curves.windows(2).map(|w| w[0].sup_distance(&w[1])).collect();
    Ok(IdsResult {
        dim: *dim,
        seed: config.seed,
        model_id: match marginal {
            Some(m) => format!("iid-{}", m.name()),
            None => "zero".into(),
        },
        curves,
        successive_sup_distances,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub seed: u64,
    pub reports: Vec<LevelSetReport>,
    pub monotonicity: Vec<MonotonicityCheck>,
}

impl OracleResult {
    pub fn any_violated(&self) -> bool {
        self.reports.iter().any(|r| !r.holds) || self.monotonicity.iter().any(|m| !m.passed)
    }
}

pub fn build_phi(spec: &PhiSpec) -> Result<Box<dyn MonotoneFunction>> {
    Ok(match spec {
        PhiSpec::Min { m } => Box::new(Min { m: *m }),
        PhiSpec::Max { m } => Box::new(Max { m: *m }),
        PhiSpec::Difference => Box::new(Difference),
        PhiSpec::Projection { m, index } => {
            if index >= m {
                return Err(Error::Config(format!("projection index {index} >= arity {m}")));
            }
            Box::new(Projection { m: *m, index: *index })
        }
        PhiSpec::SortedEigenvalue { lattice, base, k } => {
            let base = base.clone().unwrap_or_else(|| vec![0.0; lattice.cardinality()]);
            Box::new(SortedEigenvalue::new(
                OperatorFamily::SingleParticle {
                    lattice: lattice.clone(),
                },
                base,
                *k,
            )?)
        }
    })
}

fn run_oracle_case(case: &OracleCase, rng: &mut ChaCha8Rng) -> Result<(Vec<LevelSetReport>, Option<MonotonicityCheck>)> {
    let phi = build_phi(&case.phi)?;
    let check = match &case.monotonicity_grid {
        Some(g) => Some(check_monotonic(phi.as_ref(), g, case.directions, rng)?),
        None => None,
    };
    let method = case.method.unwrap_or_else(|| default_method(case.measure.arity()));
    let reports = case
        .epsilons
        .iter()
        .map(|&eps| {
            let mut r = verify_bound(phi.as_ref(), &case.measure, (case.a, case.a + eps), method, rng)?;
            r.epsilon = eps;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((reports, check))
}

/// Every oracle case at every `eps`, each case on its own seed stream.
pub fn run_oracle(config: &ExperimentConfig, opts: &RunOptions) -> Result<OracleResult> {
    let ExperimentSpec::Oracle { cases } = &config.experiment else {
        return Err(Error::Config("not an oracle experiment".into()));
    };
    let pool = opts.pool()?;
    let mut reports = Vec::new();
    let mut monotonicity = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_trial_seed(config.seed ^ ORACLE_DOMAIN, i as u64));
        let (r, c) = pool.install(|| run_oracle_case(case, &mut rng))?;
        reports.extend(r);
        monotonicity.extend(c);
    }
    Ok(OracleResult {
        seed: config.seed,
        reports,
        monotonicity,
    })
}

/// Closed-form check used by the single-site tests: `P(|V - E| <= eps)` for an i.i.d. site.
pub fn single_site_probability(marginal: &MarginalDistribution, energy: f64, eps: f64) -> f64 {
    marginal.interval_mass(energy - eps, energy + eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentKind;

    #[test]
    fn verdict_rules() {
        assert_eq!(Verdict::decide(0.3, 0.2, false), Verdict::Violated);
        assert_eq!(Verdict::decide(0.1, 0.2, false), Verdict::Holds);
        assert_eq!(Verdict::decide(0.1, 0.2, true), Verdict::Vacuous);
        assert_eq!(Verdict::decide(0.3, 0.2, true), Verdict::Violated);
        assert_eq!(Verdict::parse("holds"), Some(Verdict::Holds));
    }

    #[test]
    fn sweep_is_monotone_in_eps() {
        let d = [0.05, 0.01, 0.2, 0.0, 0.5];
        let est = sweep_estimates(&d, &[0.01, 0.05, 0.1, 1.0], false, |_| BoundSet {
            two_eps: 1.0,
            at_eps: 1.0,
            volume_squared: None,
        })
        .unwrap();
        let hits: Vec<usize> = est.iter().map(|e| e.hits).collect();
        assert_eq!(hits, vec![2, 3, 3, 5]);
    }

    #[test]
    fn single_site_wegner() {
        let mut c = ExperimentConfig::default_for(ExperimentKind::Wegner);
        c.trials = 4000;
        c.experiment = ExperimentSpec::Wegner {
            lattice: LatticeBox::chain(1).unwrap(),
            marginal: MarginalDistribution::uniform(0.0, 1.0).unwrap(),
            energy: 0.5,
            epsilons: vec![0.1],
        };
        let r = run_wegner_trials(&c, &RunOptions::default()).unwrap();
        let e = &r.estimates[0];
        assert!(e.ci_low <= 0.2 && 0.2 <= e.ci_high, "{e:?}");
        assert!((e.bound_2eps - 0.2).abs() < 1e-15);
        assert_eq!(e.verdict, Verdict::Holds);
    }

    #[test]
    fn zero_disorder_ids_single_trial() {
        let mut c = ExperimentConfig::default_for(ExperimentKind::Ids);
        c.experiment = ExperimentSpec::Ids {
            dim: 1,
            lengths: vec![2, 3],
            marginal: None,
            energies: None,
        };
        let r = estimate_ids(&c, &RunOptions::default()).unwrap();
        for curve in &r.curves {
            assert_eq!(curve.trials, 1);
            assert!(curve.is_monotone());
            assert_eq!(curve.values[0], 0.0);
            assert_eq!(*curve.values.last().unwrap(), 1.0);
        }
    }
}
