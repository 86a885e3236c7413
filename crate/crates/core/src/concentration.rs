//! Concentration moduli: the Lévy concentration function `s(mu, eps)`, its
//! plug-in estimator, and the conditional modulus
//! `C1(mu, eps) = max_j E_{q'} [ sup_a mu(q_j in [a, a + eps] | q'_{!=j}) ]`
//! together with the analytic bounds that dominate it for Gaussian and Gibbs fields.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldModel, GaussianFieldModel, GibbsChain, GibbsFieldModel, MarginalDistribution};
use crate::lattice::{LatticeBox, Site};

/// The grid search for `sup_a` is capped at this many points.
pub const MAX_SUP_GRID: usize = 4096;

/// Relative error allowance of the grid + golden-section `sup_a`, added to the
/// upper end of every conditional-MC interval.
pub const SUP_SEARCH_REL_ERROR: f64 = 0.01;

const DEFAULT_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcentrationMethod {
    Analytic,
    Empirical,
    ConditionalMc,
    AnalyticBound,
}

impl ConcentrationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ConcentrationMethod::Analytic => "analytic",
            ConcentrationMethod::Empirical => "empirical",
            ConcentrationMethod::ConditionalMc => "conditional-mc",
            ConcentrationMethod::AnalyticBound => "analytic-bound",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationEstimate {
    pub epsilon: f64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: ConcentrationMethod,
}

impl ConcentrationEstimate {
    pub fn exact(epsilon: f64, value: f64, method: ConcentrationMethod) -> Self {
        ConcentrationEstimate {
            epsilon,
            value,
            ci_low: value,
            ci_high: value,
            method,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// `s(mu, eps) = sup_a mu([a, a + eps])`, in closed form.
pub fn levy_concentration(marginal: &MarginalDistribution, eps: f64) -> f64 {
    if eps <= 0.0 {
        return match marginal {
            MarginalDistribution::Bernoulli { .. } => marginal.max_atom(),
            _ => 0.0,
        };
    }
    match *marginal {
        MarginalDistribution::Uniform { low, high } => (eps / (high - low)).min(1.0),
        // sup attained on the interval centred at the mode: 2 Phi(eps / 2 sigma) - 1
        MarginalDistribution::Gaussian { variance, .. } => {
            libm::erf(eps / (2.0 * (2.0 * variance).sqrt()))
        }
        MarginalDistribution::Bernoulli { .. } => {
            let atoms = marginal.atoms();
            let mut best: f64 = 0.0;
            for (i, &(v, _)) in atoms.iter().enumerate() {
                let mass: f64 = atoms[i..]
                    .iter()
                    .take_while(|(u, _)| *u <= v + eps)
                    .map(|a| a.1)
                    .sum();
                best = best.max(mass);
            }
            best
        }
    }
}

/// Plug-in estimate `max_i #{ x in [x_(i), x_(i) + eps] } / n` with a DKW band.
pub fn empirical_concentration(samples: &[f64], eps: f64) -> Result<ConcentrationEstimate> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(
            "empirical concentration needs at least 2 samples".into(),
        ));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mut best = 0usize;
    let mut hi = 0usize;
    for lo in 0..n {
        if hi < lo {
            hi = lo;
        }
        while hi < n && xs[hi] <= xs[lo] + eps {
            hi += 1;
        }
        best = best.max(hi - lo);
    }
    let value = best as f64 / n as f64;
    // DKW at 95%: sup |F_n - F| <= sqrt(ln(2 / 0.05) / 2n); an interval mass moves by at most twice that
    let band = 2.0 * ((2.0f64 / 0.05).ln() / (2.0 * n as f64)).sqrt();
    Ok(ConcentrationEstimate {
        epsilon: eps,
        value,
        ci_low: (value - band).max(0.0),
        ci_high: (value + band).min(1.0),
        method: ConcentrationMethod::Empirical,
    })
}

/// `sup_a mass(a)` where `mass(a)` is the mass of `[a, a + eps]` of a law
/// supported in `[low, high]`: grid of step `eps / 10` (at most
/// [`MAX_SUP_GRID`] points) over `[low - eps, high]`, then golden-section
/// refinement around the best grid point.
pub fn sup_interval_mass<F: Fn(f64) -> f64>(mass: F, low: f64, high: f64, eps: f64) -> f64 {
    let start = low - eps;
    let span = high - start;
    let step = (eps / 10.0).max(span / (MAX_SUP_GRID - 1) as f64);
    let points = ((span / step).ceil() as usize + 1).max(2);
    let mut best_a = start;
    let mut best = f64::NEG_INFINITY;
    for k in 0..points {
        let a = (start + step * k as f64).min(high);
        let m = mass(a);
        if m > best {
            best = m;
            best_a = a;
        }
    }
    // golden-section maximization on the neighbouring cells
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best_a - step, best_a + step);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (mass(x1), mass(x2));
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = mass(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = mass(x1);
        }
    }
    best.max(f1).max(f2).clamp(0.0, 1.0)
}

/// Per-coordinate part of a conditional-MC run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteModulus {
    pub j: usize,
    pub site: Site,
    pub estimate: ConcentrationEstimate,
}

/// `C1` estimate: the maximizing coordinate's estimate plus every coordinate's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Estimate {
    pub overall: ConcentrationEstimate,
    pub argmax: usize,
    pub outer_trials: usize,
    pub per_site: Vec<SiteModulus>,
}

/// Monte Carlo estimate of `C1` for each `eps` over the sites of `lattice`.
///
/// Outer loop: `outer_trials` configurations from the model (independent draws
/// for Gaussian fields, a thinned heat-bath chain for Gibbs fields). Inner:
/// `sup_a` of the conditional interval mass, exact (error function) for
/// Gaussian conditionals and by [`sup_interval_mass`] otherwise. Intervals come
/// from batch means (20 batches), widened by [`SUP_SEARCH_REL_ERROR`] on top.
/// I.i.d. models have conditionals equal to the marginal; the atomic marginal
/// falls back to [`levy_concentration`].
pub fn conditional_concentration_c1<R: Rng + ?Sized>(
    model: &FieldModel,
    lattice: &LatticeBox,
    epsilons: &[f64],
    outer_trials: usize,
    rng: &mut R,
) -> Result<Vec<C1Estimate>> {
    if outer_trials == 0 {
        return Err(Error::InvalidArgument("need at least one outer trial".into()));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("epsilons must be positive".into()));
    }
    let sites = lattice.sites();
    let m = sites.len();
    // inner[e][j][t]: inner sup for epsilon e, coordinate j, outer trial t
    let mut inner = vec![vec![Vec::with_capacity(outer_trials); m]; epsilons.len()];
    match model {
        FieldModel::Iid { marginal } => {
            if let MarginalDistribution::Bernoulli { .. } = marginal {
                return Ok(epsilons
                    .iter()
                    .map(|&e| {
                        let v = levy_concentration(marginal, e);
                        let est = ConcentrationEstimate::exact(e, v, ConcentrationMethod::Analytic);
                        single_estimate(est, &sites, outer_trials)
                    })
                    .collect());
            }
            // conditionals do not depend on the other coordinates
            let (lo, hi) = marginal.effective_support();
            for (ei, &e) in epsilons.iter().enumerate() {
                let v = sup_interval_mass(|a| marginal.interval_mass(a, a + e), lo, hi, e);
                for j in 0..m {
                    inner[ei][j] = vec![v; outer_trials];
                }
            }
        }
        FieldModel::Gaussian(g) => {
            let sampler = g.sampler(&sites)?;
            let cond = sampler.single_site_conditionals()?;
            for _ in 0..outer_trials {
                let q = sampler.sample_values(rng);
                for j in 0..m {
                    let (_mean, var) = cond.conditional(j, &q);
                    for (ei, &e) in epsilons.iter().enumerate() {
                        // Gaussian conditional: best interval is centred at the conditional mean
                        inner[ei][j].push(libm::erf(e / (2.0 * (2.0 * var).sqrt())));
                    }
                }
            }
        }
        FieldModel::Gibbs(gm) => {
            let mut chain = GibbsChain::new(gm, lattice, None, rng)?;
            let configs = chain.run(rng, gm.sampler.burn_in, gm.sampler.thinning, outer_trials)?;
            for q in configs {
                chain.set_spins(&q);
                for j in 0..m {
                    let table = chain.conditional_table(j);
                    for (ei, &e) in epsilons.iter().enumerate() {
                        let v = sup_interval_mass(
                            |a| table.interval_mass(a, e),
                            table.low(),
                            table.high(),
                            e,
                        );
                        inner[ei][j].push(v);
                    }
                }
            }
        }
    }
    Ok(epsilons
        .iter()
        .zip(inner)
        .map(|(&e, per_j)| summarize(e, &sites, per_j, outer_trials))
        .collect())
}

fn single_estimate(est: ConcentrationEstimate, sites: &[Site], outer_trials: usize) -> C1Estimate {
    C1Estimate {
        overall: est.clone(),
        argmax: 0,
        outer_trials,
        per_site: sites
            .iter()
            .enumerate()
            .map(|(j, s)| SiteModulus {
                j,
                site: s.clone(),
                estimate: est.clone(),
            })
            .collect(),
    }
}

fn summarize(eps: f64, sites: &[Site], per_j: Vec<Vec<f64>>, outer_trials: usize) -> C1Estimate {
    let per_site: Vec<SiteModulus> = per_j
        .iter()
        .enumerate()
        .map(|(j, xs)| {
            let (mean, half) = batch_mean_interval(xs, DEFAULT_BATCHES);
            SiteModulus {
                j,
                site: sites[j].clone(),
                estimate: ConcentrationEstimate {
                    epsilon: eps,
                    value: mean,
                    ci_low: (mean - half - 1e-12).max(0.0),
                    ci_high: (mean + half + SUP_SEARCH_REL_ERROR * mean + 1e-12).min(1.0),
                    method: ConcentrationMethod::ConditionalMc,
                },
            }
        })
        .collect();
    let argmax = per_site
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.estimate.value.total_cmp(&b.1.estimate.value))
        .map(|(j, _)| j)
        .unwrap_or(0);
    let ci_low = per_site.iter().map(|s| s.estimate.ci_low).fold(0.0, f64::max);
    let ci_high = per_site.iter().map(|s| s.estimate.ci_high).fold(0.0, f64::max);
    let mut overall = per_site[argmax].estimate.clone();
    overall.ci_low = ci_low;
    overall.ci_high = ci_high;
    C1Estimate {
        overall,
        argmax,
        outer_trials,
        per_site,
    }
}

/// Mean and 95% half-width from batch means.
pub fn batch_mean_interval(xs: &[f64], batches: usize) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let b = batches.min(n);
    if b < 2 {
        return (mean, 0.0);
    }
    let size = n / b;
    let means: Vec<f64> = (0..b)
        .map(|k| {
            let chunk = &xs[k * size..(k + 1) * size];
            chunk.iter().sum::<f64>() / size as f64
        })
        .collect();
    let bm = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, student_t_975(b - 1) * (var / b as f64).sqrt())
}

/// 97.5% Student-t quantile (Cornish-Fisher expansion around the normal quantile).
pub fn student_t_975(dof: usize) -> f64 {
    let z: f64 = 1.959963984540054;
    let v = dof as f64;
    let z3 = z.powi(3);
    let z5 = z.powi(5);
    let z7 = z.powi(7);
    z + (z3 + z) / (4.0 * v)
        + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v)
        + (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * v * v * v)
}

/// `eps / sqrt(2 pi sigma0^2)` with `sigma0^2` the conditional-variance floor
/// over `sites` (each conditioned on all others, plus `context`).
pub fn gaussian_c1_bound(
    model: &GaussianFieldModel,
    sites: &[Site],
    context: &[Site],
    eps: f64,
) -> Result<f64> {
    let floor = crate::fields::conditional_variance_floor_with_context(model, sites, context)?;
    if !(floor > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(eps / (2.0 * std::f64::consts::PI * floor).sqrt())
}

/// `sup` over conditions of the conditional interval mass for a Gaussian field:
/// the narrowest conditional law, `erf(eps / (2 sqrt(2) sigma0))`.
pub fn gaussian_c2(model: &GaussianFieldModel, sites: &[Site], eps: f64) -> Result<f64> {
    let floor = crate::fields::conditional_variance_floor(model, sites)?;
    Ok(libm::erf(eps / (2.0 * (2.0 * floor).sqrt())))
}

/// `eps * exp(beta (osc h + 2 sup|U|)) / (b - a)`.
pub fn gibbs_c1_bound(model: &GibbsFieldModel, dim: usize, eps: f64) -> f64 {
    eps * model.density_bound(dim)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub l: usize,
    pub epsilon: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayScan {
    pub beta_exponent: f64,
    /// Largest `B` with `C1(e^{-L^beta}) <= Const L^{-B}` on every scanned `L`,
    /// `Const` anchored at the smallest `L`.
    pub largest_b: f64,
    pub decays: bool,
    pub rows: Vec<DecayRow>,
}

/// `C1(e^{-L^beta})` over `lengths`, against the power-law reference `Const L^{-B}`.
pub fn decay_scan<R: Rng + ?Sized>(
    model: &FieldModel,
    lattice: &LatticeBox,
    beta_exponent: f64,
    lengths: &[usize],
    outer_trials: usize,
    rng: &mut R,
) -> Result<DecayScan> {
    if !(beta_exponent > 0.0) {
        return Err(Error::InvalidArgument("beta exponent must be positive".into()));
    }
    let mut lengths = lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.is_empty() || lengths[0] == 0 {
        return Err(Error::InvalidArgument("need positive scan lengths".into()));
    }
    let epsilons: Vec<f64> = lengths
        .iter()
        .map(|&l| (-(l as f64).powf(beta_exponent)).exp())
        .collect();
    let estimates = conditional_concentration_c1(model, lattice, &epsilons, outer_trials, rng)?;
    let l0 = lengths[0] as f64;
    let c0 = estimates[0].overall.value;
    let mut largest_b = f64::INFINITY;
    for (l, est) in lengths.iter().zip(&estimates).skip(1) {
        let v = est.overall.value;
        let b = if v <= 0.0 {
            f64::INFINITY
        } else {
            (c0 / v).ln() / (*l as f64 / l0).ln()
        };
        largest_b = largest_b.min(b);
    }
    if !largest_b.is_finite() {
        largest_b = 0.0;
    }
    let largest_b = largest_b.max(0.0);
    let rows = lengths
        .iter()
        .zip(&estimates)
        .map(|(&l, est)| DecayRow {
            l,
            epsilon: est.overall.epsilon,
            estimate: est.overall.value,
            ci_low: est.overall.ci_low,
            ci_high: est.overall.ci_high,
            reference: c0 * (l as f64 / l0).powf(-largest_b),
        })
        .collect();
    Ok(DecayScan {
        beta_exponent,
        largest_b,
        decays: largest_b > 0.0,
        rows,
    })
}

/// Modulus table: `model_id,j,epsilon,estimate,ci_low,ci_high,method`.
pub fn write_moduli_csv<W: Write>(w: W, model_id: &str, estimates: &[C1Estimate]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model_id", "j", "epsilon", "estimate", "ci_low", "ci_high", "method"])?;
    for est in estimates {
        for s in &est.per_site {
            let e = &s.estimate;
            out.write_record([
                model_id.to_string(),
                s.j.to_string(),
                e.epsilon.to_string(),
                e.value.to_string(),
                e.ci_low.to_string(),
                e.ci_high.to_string(),
                e.method.as_str().to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
