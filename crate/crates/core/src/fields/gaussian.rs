use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sample::FieldSample;
use crate::error::{Error, Result};
use crate::lattice::Site;

/// Relative jitter added to the diagonal once before a factorization is
/// declared to have failed.
pub const PSD_JITTER: f64 = 1e-12;

/// Stationary covariance `gamma(x - y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceFamily {
    /// `variance * exp(-|x - y| / correlation_length)`, Euclidean distance.
    Exponential {
        variance: f64,
        correlation_length: f64,
    },
    /// `values[k]` at lattice (l1) distance `k`, zero beyond the list.
    FiniteSupport { values: Vec<f64> },
}

/// Zero-mean stationary Gaussian field on Z^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFieldModel {
    pub covariance: CovarianceFamily,
}

impl GaussianFieldModel {
    pub fn new(covariance: CovarianceFamily) -> Result<Self> {
        let m = GaussianFieldModel { covariance };
        m.validate()?;
        Ok(m)
    }

    pub fn exponential(variance: f64, correlation_length: f64) -> Result<Self> {
        Self::new(CovarianceFamily::Exponential {
            variance,
            correlation_length,
        })
    }

    /// Independent sites with the given variance.
    pub fn white(variance: f64) -> Result<Self> {
        Self::new(CovarianceFamily::FiniteSupport {
            values: vec![variance],
        })
    }

    pub fn validate(&self) -> Result<()> {
        match &self.covariance {
            CovarianceFamily::Exponential {
                variance,
                correlation_length,
            } => {
                if !(*variance > 0.0 && *correlation_length > 0.0) {
                    return Err(Error::InvalidModel(
                        "exponential covariance needs positive variance and correlation length"
                            .into(),
                    ));
                }
            }
            CovarianceFamily::FiniteSupport { values } => {
                if values.first().is_none_or(|v| *v <= 0.0)
                    || values.iter().any(|v| !v.is_finite())
                {
                    return Err(Error::InvalidModel(
                        "finite-support covariance needs gamma(0) > 0 and finite values".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `gamma(0)`.
    pub fn variance(&self) -> f64 {
        match &self.covariance {
            CovarianceFamily::Exponential { variance, .. } => *variance,
            CovarianceFamily::FiniteSupport { values } => values[0],
        }
    }

    pub fn gamma(&self, x: &Site, y: &Site) -> f64 {
        match &self.covariance {
            CovarianceFamily::Exponential {
                variance,
                correlation_length,
            } => variance * (-x.euclidean_distance(y) / correlation_length).exp(),
            CovarianceFamily::FiniteSupport { values } => values
                .get(x.l1_distance(y) as usize)
                .copied()
                .unwrap_or(0.0),
        }
    }

    pub fn name(&self) -> String {
        match &self.covariance {
            CovarianceFamily::Exponential {
                variance,
                correlation_length,
            } => format!("gaussian-exp(var={variance},xi={correlation_length})"),
            CovarianceFamily::FiniteSupport { values } => {
                let v: Vec<String> = values.iter().map(|x| x.to_string()).collect();
                format!("gaussian-finite({})", v.join(","))
            }
        }
    }

    /// `C[i, j] = gamma(site_i - site_j)`, checked to be positive definite
    /// (allowing one diagonal jitter).
    pub fn covariance_matrix(&self, sites: &[Site]) -> Result<DMatrix<f64>> {
        let c = self.raw_covariance(sites);
        factor(&c, self.variance())?;
        Ok(c)
    }

    fn raw_covariance(&self, sites: &[Site]) -> DMatrix<f64> {
        let n = sites.len();
        DMatrix::from_fn(n, n, |i, j| self.gamma(&sites[i], &sites[j]))
    }

    pub fn sampler(&self, sites: &[Site]) -> Result<GaussianSampler> {
        let c = self.raw_covariance(sites);
        let chol = factor(&c, self.variance())?;
        Ok(GaussianSampler {
            sites: sites.to_vec(),
            mean: DVector::zeros(sites.len()),
            lower: chol.l(),
            covariance: c,
        })
    }

    /// Law of the field on `targets` given its values on `observed`.
    pub fn conditional_sampler(
        &self,
        targets: &[Site],
        observed: &[Site],
        observed_values: &[f64],
    ) -> Result<GaussianSampler> {
        if observed.is_empty() {
            return self.sampler(targets);
        }
        assert_eq!(observed.len(), observed_values.len());
        let c_tt = self.raw_covariance(targets);
        let c_oo = self.raw_covariance(observed);
        let c_to = DMatrix::from_fn(targets.len(), observed.len(), |i, j| {
            self.gamma(&targets[i], &observed[j])
        });
        let chol_o = factor(&c_oo, self.variance())?;
        let v = DVector::from_column_slice(observed_values);
        let mean = &c_to * chol_o.solve(&v);
        let cov = &c_tt - &c_to * chol_o.solve(&c_to.transpose());
        let cov = symmetrize(cov);
        let chol = factor(&cov, self.variance())?;
        Ok(GaussianSampler {
            sites: targets.to_vec(),
            mean,
            lower: chol.l(),
            covariance: cov,
        })
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Cholesky with a single `PSD_JITTER * scale` retry.
fn factor(c: &DMatrix<f64>, scale: f64) -> Result<Cholesky<f64, Dyn>> {
    if let Some(ch) = Cholesky::new(c.clone()) {
        return Ok(ch);
    }
    let n = c.nrows();
    let jittered = c + DMatrix::identity(n, n) * (PSD_JITTER * scale);
    Cholesky::new(jittered).ok_or(Error::NotPositiveDefinite)
}

/// Draws `mean + L z` with `L L^T` the covariance and `z` standard normal.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    sites: Vec<Site>,
    mean: DVector<f64>,
    lower: DMatrix<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.sites.len();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let v = &self.mean + &self.lower * z;
        v.iter().copied().collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, seed: Option<u64>, model_id: &str) -> FieldSample {
        FieldSample::from_values(self.sites.clone(), self.sample_values(rng), seed, model_id)
    }

    /// Single-site conditional laws `q_j | q_{k != j}` of this sampler's joint law.
    pub fn single_site_conditionals(&self) -> Result<SingleSiteConditionals> {
        let n = self.sites.len();
        let chol = factor(&self.covariance, self.covariance.diagonal().max())?;
        let precision = chol.solve(&DMatrix::identity(n, n));
        Ok(SingleSiteConditionals {
            precision: symmetrize(precision),
            mean: self.mean.clone(),
        })
    }
}

pub fn sample_gaussian<R: Rng + ?Sized>(
    model: &GaussianFieldModel,
    sites: &[Site],
    rng: &mut R,
) -> Result<FieldSample> {
    Ok(model.sampler(sites)?.sample(rng, None, &model.name()))
}

/// Conditional laws of one coordinate given all the others, read off the
/// precision matrix `P = C^{-1}`: variance `1 / P_jj`, mean
/// `m_j - sum_{k != j} P_jk (q_k - m_k) / P_jj`.
#[derive(Clone, Debug)]
pub struct SingleSiteConditionals {
    precision: DMatrix<f64>,
    mean: DVector<f64>,
}

impl SingleSiteConditionals {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn variance(&self, j: usize) -> f64 {
        1.0 / self.precision[(j, j)]
    }

    /// `(mean, variance)` of coordinate `j` given the other coordinates of `q`.
    pub fn conditional(&self, j: usize, q: &[f64]) -> (f64, f64) {
        let pjj = self.precision[(j, j)];
        let mut shift = 0.0;
        for k in 0..q.len() {
            if k != j {
                shift += self.precision[(j, k)] * (q[k] - self.mean[k]);
            }
        }
        (self.mean[j] - shift / pjj, 1.0 / pjj)
    }
}

/// Conditional variance of the field at `target` given its values at all
/// other points of `sites` (Schur complement of the covariance).
pub fn conditional_gaussian_variance(
    model: &GaussianFieldModel,
    sites: &[Site],
    target: &Site,
) -> Result<f64> {
    if !sites.contains(target) {
        return Err(Error::InvalidArgument(format!(
            "target {target} is not among the sites"
        )));
    }
    let rest: Vec<Site> = sites.iter().filter(|s| *s != target).cloned().collect();
    let c_tt = model.gamma(target, target);
    if rest.is_empty() {
        return Ok(c_tt);
    }
    let c_rr = model.raw_covariance(&rest);
    let c_rt = DVector::from_fn(rest.len(), |i, _| model.gamma(&rest[i], target));
    let chol = factor(&c_rr, model.variance())?;
    let x = chol.solve(&c_rt);
    let var = c_tt - c_rt.dot(&x);
    if var > 0.0 {
        Ok(var)
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

/// Conditional variance of every site of `sites` given all the others,
/// via `1 / (C^{-1})_jj`.
pub fn conditional_variances(model: &GaussianFieldModel, sites: &[Site]) -> Result<Vec<f64>> {
    if sites.len() == 1 {
        return Ok(vec![model.variance()]);
    }
    let sampler = model.sampler(sites)?;
    let cond = sampler.single_site_conditionals()?;
    let out: Vec<f64> = (0..sites.len()).map(|j| cond.variance(j)).collect();
    if out.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

/// Smallest single-site conditional variance over `sites`, each site
/// conditioned on all the others.
pub fn conditional_variance_floor(model: &GaussianFieldModel, sites: &[Site]) -> Result<f64> {
    if sites.is_empty() {
        return Err(Error::Empty);
    }
    Ok(conditional_variances(model, sites)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Floor over `targets` where each target is also conditioned on `context`.
pub fn conditional_variance_floor_with_context(
    model: &GaussianFieldModel,
    targets: &[Site],
    context: &[Site],
) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::Empty);
    }
    let mut all = targets.to_vec();
    all.extend(context.iter().filter(|s| !targets.contains(s)).cloned());
    let vars = conditional_variances(model, &all)?;
    Ok(vars[..targets.len()]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeBox;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(n: usize) -> Vec<Site> {
        LatticeBox::chain(n).unwrap().sites()
    }

    #[test]
    fn covariance_examples() {
        let m = GaussianFieldModel::exponential(2.0, 1.5).unwrap();
        let one = m.covariance_matrix(&chain(1)).unwrap();
        assert_eq!(one[(0, 0)], 2.0);
        let c = m.covariance_matrix(&chain(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let k = (i as f64 - j as f64).abs();
                assert!((c[(i, j)] - 2.0 * (-k / 1.5).exp()).abs() < 1e-15);
            }
        }
        let white = GaussianFieldModel::white(1.0).unwrap();
        let sites = vec![Site(vec![0]), Site(vec![5])];
        assert_eq!(white.covariance_matrix(&sites).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn non_psd_model_rejected() {
        let bad = GaussianFieldModel::new(CovarianceFamily::FiniteSupport {
            values: vec![1.0, 0.9, 0.9],
        })
        .unwrap();
        assert!(matches!(
            bad.covariance_matrix(&chain(6)),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn conditional_variance_basics() {
        let m = GaussianFieldModel::exponential(1.3, 1.0).unwrap();
        let t = Site(vec![0]);
        assert_eq!(conditional_gaussian_variance(&m, &[t.clone()], &t).unwrap(), 1.3);
        let white = GaussianFieldModel::white(0.7).unwrap();
        let sites = chain(4);
        for s in &sites {
            assert!((conditional_gaussian_variance(&white, &sites, s).unwrap() - 0.7).abs() < 1e-15);
        }
        assert!(conditional_gaussian_variance(&m, &sites, &Site(vec![9])).is_err());
    }

    #[test]
    fn precision_route_matches_schur_route() {
        let m = GaussianFieldModel::exponential(1.0, 2.0).unwrap();
        let sites = LatticeBox::new(vec![0, 0], vec![2, 1]).unwrap().sites();
        let by_precision = conditional_variances(&m, &sites).unwrap();
        for (s, v) in sites.iter().zip(by_precision) {
            let schur = conditional_gaussian_variance(&m, &sites, s).unwrap();
            assert!((schur - v).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_sampler_moments() {
        let m = GaussianFieldModel::exponential(1.0, 1.0).unwrap();
        let targets = chain(2);
        let observed = vec![Site(vec![-1]), Site(vec![2])];
        let s = m.conditional_sampler(&targets, &observed, &[1.0, -1.0]).unwrap();
        // site 0 is closer to the +1 observation
        assert!(s.mean()[0] > 0.0 && s.mean()[1] < 0.0);
        assert!((s.mean()[0] + s.mean()[1]).abs() < 1e-12);
        for j in 0..2 {
            assert!(s.covariance()[(j, j)] < 1.0);
        }
    }

    #[test]
    fn white_sampler_variance() {
        // chi-square concentration: 10^4 draws, relative sd of the sample variance ~ sqrt(2/n) = 1.4%
        let m = GaussianFieldModel::white(2.0).unwrap();
        let sampler = m.sampler(&chain(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| sampler.sample_values(&mut rng)[0]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var / 2.0 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn correlated_pair() {
        // Fisher-z: sd of atanh(r) is 1/sqrt(n-3) = 0.01, so |r - 0.9| < 0.02 at > 4 sd
        let m = GaussianFieldModel::new(CovarianceFamily::FiniteSupport {
            values: vec![1.0, 0.9],
        })
        .unwrap();
        let sampler = m.sampler(&chain(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let v = sampler.sample_values(&mut rng);
            sxy += v[0] * v[1];
            sxx += v[0] * v[0];
            syy += v[1] * v[1];
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!((r - 0.9).abs() < 0.02, "{r}");
    }

    #[test]
    fn seed_determinism() {
        let m = GaussianFieldModel::exponential(1.0, 2.0).unwrap();
        let a = sample_gaussian(&m, &chain(5), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_gaussian(&m, &chain(5), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
