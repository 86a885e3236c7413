//! Brute-force checks of concentration for monotone functions: J-monotonicity
//! of a black-box `Phi`, the sweep sets `A^eps_j`, and level-set measures
//! `mu^m { Phi in I }` against `m * s(mu, |I|)` or `m * C1(mu, |I|)`.
//!
//! For monotone `Phi` the sub-level set `A = {Phi <= a}` is a down-set, so the
//! Minkowski sum `A + [0, eps] e_1 + ... + [0, eps] e_j` is exactly
//! `{ q : Phi(q - eps (e_1 + ... + e_j)) <= a }`: shifting down along a
//! direction that is already in the sum can only stay inside `A`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{conditional_concentration_c1, levy_concentration};
use crate::error::{Error, Result};
use crate::fields::{FieldModel, GibbsChain, MarginalDistribution};
use crate::harness::{derive_trial_seed, wilson_interval};
use crate::lattice::{
    assemble_lso_values, assemble_multiparticle, projection_set, InteractionPotential, LatticeBox,
    MultiParticleBox,
};
use crate::fields::FieldSample;
use crate::spectra::eigenvalues_symmetric;

/// Absolute slack in the monotonicity conditions.
pub const MONOTONE_TOLERANCE: f64 = 1e-10;

/// Largest arity for a full tensor grid.
pub const MAX_GRID_ARITY: usize = 6;

/// A function `Phi: R^m -> R` under test.
pub trait MonotoneFunction: Sync {
    fn arity(&self) -> usize;
    fn eval(&self, q: &[f64]) -> f64;
    fn name(&self) -> String;
}

#[derive(Clone, Debug)]
pub struct Min {
    pub m: usize,
}

impl MonotoneFunction for Min {
    fn arity(&self) -> usize {
        self.m
    }
    fn eval(&self, q: &[f64]) -> f64 {
        q.iter().copied().fold(f64::INFINITY, f64::min)
    }
    fn name(&self) -> String {
        "min".into()
    }
}

#[derive(Clone, Debug)]
pub struct Max {
    pub m: usize,
}

impl MonotoneFunction for Max {
    fn arity(&self) -> usize {
        self.m
    }
    fn eval(&self, q: &[f64]) -> f64 {
        q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    fn name(&self) -> String {
        "max".into()
    }
}

/// `q_1 - q_2`; decreasing in `q_2`.
#[derive(Clone, Debug)]
pub struct Difference;

impl MonotoneFunction for Difference {
    fn arity(&self) -> usize {
        2
    }
    fn eval(&self, q: &[f64]) -> f64 {
        q[0] - q[1]
    }
    fn name(&self) -> String {
        "difference".into()
    }
}

/// `q_index`.
#[derive(Clone, Debug)]
pub struct Projection {
    pub m: usize,
    pub index: usize,
}

impl MonotoneFunction for Projection {
    fn arity(&self) -> usize {
        self.m
    }
    fn eval(&self, q: &[f64]) -> f64 {
        q[self.index]
    }
    fn name(&self) -> String {
        format!("projection-{}", self.index)
    }
}

/// Operator family `q -> H(base + q)`.
#[derive(Clone, Debug)]
pub enum OperatorFamily {
    /// `q` is the potential on the box sites.
    SingleParticle { lattice: LatticeBox },
    /// `q` is the one-body potential on the projection set, in sorted site order.
    MultiParticle {
        mbox: MultiParticleBox,
        interaction: InteractionPotential,
    },
}

/// `k`-th sorted eigenvalue (0-based) of an operator family.
#[derive(Clone, Debug)]
pub struct SortedEigenvalue {
    family: OperatorFamily,
    base: Vec<f64>,
    k: usize,
    m: usize,
}

impl SortedEigenvalue {
    pub fn new(family: OperatorFamily, base: Vec<f64>, k: usize) -> Result<Self> {
        let (m, n) = match &family {
            OperatorFamily::SingleParticle { lattice } => {
                (lattice.cardinality(), lattice.cardinality())
            }
            OperatorFamily::MultiParticle { mbox, .. } => {
                (projection_set(mbox).len(), mbox.cardinality())
            }
        };
        if base.len() != m {
            return Err(Error::InvalidArgument(format!(
                "base potential has {} entries, family has {m} coordinates",
                base.len()
            )));
        }
        if k >= n {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue index {k} out of range for dimension {n}"
            )));
        }
        Ok(SortedEigenvalue { family, base, k, m })
    }

    fn try_eval(&self, q: &[f64]) -> Result<f64> {
        let v: Vec<f64> = self.base.iter().zip(q).map(|(b, x)| b + x).collect();
        let h = match &self.family {
            OperatorFamily::SingleParticle { lattice } => assemble_lso_values(lattice, v),
            OperatorFamily::MultiParticle { mbox, interaction } => {
                let sites = projection_set(mbox);
                let field = FieldSample::from_values(sites, v, None, "oracle");
                assemble_multiparticle(mbox, &field, interaction)?
            }
        };
        Ok(eigenvalues_symmetric(&h)?.values()[self.k])
    }
}

impl MonotoneFunction for SortedEigenvalue {
    fn arity(&self) -> usize {
        self.m
    }
    fn eval(&self, q: &[f64]) -> f64 {
        self.try_eval(q).unwrap_or(f64::NAN)
    }
    fn name(&self) -> String {
        format!("sorted-eigenvalue-{}", self.k)
    }
}

/// User-supplied `Phi`.
pub struct FnMonotone<F> {
    pub m: usize,
    pub name: String,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> MonotoneFunction for FnMonotone<F> {
    fn arity(&self) -> usize {
        self.m
    }
    fn eval(&self, q: &[f64]) -> f64 {
        (self.f)(q)
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Points at which the monotonicity conditions are tested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// `points` equispaced values of `[low, high]` per axis (tensor grid).
    Full { low: f64, high: f64, points: usize },
    /// `count` uniform points of `[low, high]^m`.
    Random { low: f64, high: f64, count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneCondition {
    /// `Phi(q + r) >= Phi(q)` for `r >= 0`.
    Coordinatewise,
    /// `Phi(q + t e) - Phi(q) >= t` for `t > 0`.
    Diagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub condition: MonotoneCondition,
    pub q: Vec<f64>,
    /// `r` for the coordinatewise condition, `t e` for the diagonal one.
    pub shift: Vec<f64>,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub phi_name: String,
    pub points_checked: usize,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
}

fn grid_points(spec: &GridSpec, m: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
    match *spec {
        GridSpec::Full { low, high, points } => {
            if m > MAX_GRID_ARITY {
                return Err(Error::InvalidArgument(format!(
                    "full grid needs arity <= {MAX_GRID_ARITY}, got {m}"
                )));
            }
            if points == 0 || !(low <= high) {
                return Err(Error::InvalidArgument("empty grid".into()));
            }
            let axis: Vec<f64> = (0..points)
                .map(|k| {
                    if points == 1 {
                        low
                    } else {
                        low + (high - low) * k as f64 / (points - 1) as f64
                    }
                })
                .collect();
            let total = points.pow(m as u32);
            Ok((0..total)
                .map(|mut idx| {
                    let mut q = vec![0.0; m];
                    for c in (0..m).rev() {
                        q[c] = axis[idx % points];
                        idx /= points;
                    }
                    q
                })
                .collect())
        }
        GridSpec::Random { low, high, count } => {
            if count == 0 || !(low <= high) {
                return Err(Error::InvalidArgument("empty grid".into()));
            }
            Ok((0..count)
                .map(|_| (0..m).map(|_| low + (high - low) * rng.random::<f64>()).collect())
                .collect())
        }
    }
}

/// Tests both monotonicity conditions at every grid point: unit directions
/// `e_i` first, then `directions` random `r` with entries in `[0, 1)`, and
/// diagonal shifts `t = 1` plus `directions` random `t` in `(0, 1]`. Returns
/// the counterexample at the first failing grid point (in grid order).
pub fn check_monotonic<P: MonotoneFunction + ?Sized, R: Rng + ?Sized>(
    phi: &P,
    grid: &GridSpec,
    directions: usize,
    rng: &mut R,
) -> Result<MonotonicityCheck> {
    let m = phi.arity();
    let mut rng = ChaCha8Rng::seed_from_u64(rng.random());
    let points = grid_points(grid, m, &mut rng)?;
    let mut shifts: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            e
        })
        .collect();
    shifts.extend((0..directions).map(|_| (0..m).map(|_| rng.random::<f64>()).collect::<Vec<_>>()));
    let mut ts = vec![1.0];
    ts.extend((0..directions).map(|_| 1.0 - rng.random::<f64>()));

    let first = points.par_iter().find_map_first(|q| {
        let base = phi.eval(q);
        for r in &shifts {
            let moved: Vec<f64> = q.iter().zip(r).map(|(a, b)| a + b).collect();
            let after = phi.eval(&moved);
            if !(after >= base - MONOTONE_TOLERANCE) {
                return Some(Counterexample {
                    condition: MonotoneCondition::Coordinatewise,
                    q: q.clone(),
                    shift: r.clone(),
                    before: base,
                    after,
                });
            }
        }
        for &t in &ts {
            let moved: Vec<f64> = q.iter().map(|a| a + t).collect();
            let after = phi.eval(&moved);
            if !(after - base >= t - MONOTONE_TOLERANCE) {
                return Some(Counterexample {
                    condition: MonotoneCondition::Diagonal,
                    q: q.clone(),
                    shift: vec![t; m],
                    before: base,
                    after,
                });
            }
        }
        None
    });
    Ok(MonotonicityCheck {
        phi_name: phi.name(),
        points_checked: points.len(),
        passed: first.is_none(),
        counterexample: first,
    })
}

/// `q in A^eps_j` for `A = {Phi <= a}`, by the down-set rule
/// `Phi(q - eps (e_1 + ... + e_j)) <= a`. Coordinates are 1-based in `j`;
/// `j = 0` is the plain level set.
pub fn sweep_membership<P: MonotoneFunction + ?Sized>(
    phi: &P,
    a: f64,
    eps: f64,
    j: usize,
    q: &[f64],
) -> bool {
    let shifted: Vec<f64> = q
        .iter()
        .enumerate()
        .map(|(k, x)| if k < j { x - eps } else { *x })
        .collect();
    phi.eval(&shifted) <= a
}

/// Law of `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    /// `mu^m`.
    Product { marginal: MarginalDistribution, m: usize },
    /// A field model on the sites of `lattice`, in site order.
    Correlated { model: FieldModel, lattice: LatticeBox },
}

impl MeasureSpec {
    pub fn arity(&self) -> usize {
        match self {
            MeasureSpec::Product { m, .. } => *m,
            MeasureSpec::Correlated { lattice, .. } => lattice.cardinality(),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(
            self,
            MeasureSpec::Product {
                marginal: MarginalDistribution::Bernoulli { .. },
                ..
            }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureMethod {
    /// Tensor grid with `points` cells per axis (product measures, `m <= 4`).
    Grid { points: usize },
    MonteCarlo { samples: usize },
}

impl MeasureMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasureMethod::Grid { .. } => "grid",
            MeasureMethod::MonteCarlo { .. } => "mc",
        }
    }
}

/// Grid default: 64 cells per axis for `m <= 3`, Monte Carlo with `10^5` points above.
pub fn default_method(m: usize) -> MeasureMethod {
    if m <= 3 {
        MeasureMethod::Grid { points: 64 }
    } else {
        MeasureMethod::MonteCarlo { samples: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: String,
}

/// Largest arity for grid measures.
pub const MAX_GRID_MEASURE_ARITY: usize = 4;

/// `mu{ Phi(q) in [a, b] }`.
///
/// Grid: each cell carries its exact product mass and is scored at its centre;
/// the interval is the rigorous enclosure from the cell corners (for monotone
/// `Phi` the cell image lies between the values at the lower and upper corner).
/// Atomic marginals enumerate the atoms exactly. Monte Carlo: hit frequency with
/// a Wilson interval.
pub fn level_set_measure<P: MonotoneFunction + ?Sized, R: Rng + ?Sized>(
    phi: &P,
    measure: &MeasureSpec,
    interval: (f64, f64),
    method: MeasureMethod,
    rng: &mut R,
) -> Result<LevelSetEstimate> {
    let m = measure.arity();
    if phi.arity() != m {
        return Err(Error::InvalidArgument(format!(
            "function arity {} differs from measure arity {m}",
            phi.arity()
        )));
    }
    let (a, b) = interval;
    if !(a <= b) {
        return Err(Error::InvalidArgument(format!("interval [{a}, {b}]")));
    }
    match method {
        MeasureMethod::Grid { points } => {
            let MeasureSpec::Product { marginal, .. } = measure else {
                return Err(Error::Unsupported("grid measure needs a product measure".into()));
            };
            if m > MAX_GRID_MEASURE_ARITY {
                return Err(Error::InvalidArgument(format!(
                    "grid measure needs arity <= {MAX_GRID_MEASURE_ARITY}, got {m}"
                )));
            }
            grid_measure(phi, marginal, m, a, b, points)
        }
        MeasureMethod::MonteCarlo { samples } => mc_measure(phi, measure, a, b, samples, rng),
    }
}

struct Axis {
    // cell centre, cell lower edge, cell upper edge, mass
    cells: Vec<(f64, f64, f64, f64)>,
    outside: f64,
}

fn axis_cells(marginal: &MarginalDistribution, points: usize, eps: f64) -> Result<Axis> {
    let atoms = marginal.atoms();
    if !atoms.is_empty() {
        return Ok(Axis {
            cells: atoms.iter().map(|&(v, p)| (v, v, v, p)).collect(),
            outside: 0.0,
        });
    }
    if points == 0 {
        return Err(Error::InvalidArgument("grid needs at least one cell".into()));
    }
    let (lo, hi) = marginal.effective_support();
    let step = (hi - lo) / points as f64;
    if step > eps / 4.0 {
        return Err(Error::ResolutionTooCoarse {
            step,
            limit: eps / 4.0,
        });
    }
    let edge = |k: usize| if k == points { hi } else { lo + step * k as f64 };
    let cells: Vec<_> = (0..points)
        .map(|k| {
            let (l, u) = (edge(k), edge(k + 1));
            (0.5 * (l + u), l, u, marginal.cdf(u) - marginal.cdf(l))
        })
        .collect();
    let inside: f64 = cells.iter().map(|c| c.3).sum();
    Ok(Axis {
        cells,
        outside: (1.0 - inside).max(0.0),
    })
}

fn grid_measure<P: MonotoneFunction + ?Sized>(
    phi: &P,
    marginal: &MarginalDistribution,
    m: usize,
    a: f64,
    b: f64,
    points: usize,
) -> Result<LevelSetEstimate> {
    let axis = axis_cells(marginal, points, b - a)?;
    let n = axis.cells.len();
    let total = n.pow(m as u32);
    // per outer index: (centre mass, certain mass, possible mass)
    let sums = (0..total)
        .into_par_iter()
        .with_min_len(1024)
        .map(|mut idx| {
            let mut centre = [0.0; MAX_GRID_MEASURE_ARITY];
            let mut lower = [0.0; MAX_GRID_MEASURE_ARITY];
            let mut upper = [0.0; MAX_GRID_MEASURE_ARITY];
            let mut w = 1.0;
            for c in (0..m).rev() {
                let cell = axis.cells[idx % n];
                idx /= n;
                centre[c] = cell.0;
                lower[c] = cell.1;
                upper[c] = cell.2;
                w *= cell.3;
            }
            let fc = phi.eval(&centre[..m]);
            let fl = phi.eval(&lower[..m]);
            let fu = phi.eval(&upper[..m]);
            let hit = (a <= fc && fc <= b) as u8 as f64;
            let certain = (a <= fl && fu <= b) as u8 as f64;
            let possible = (fl <= b && fu >= a) as u8 as f64;
            (w * hit, w * certain, w * possible)
        })
        .collect::<Vec<_>>();
    // sequential reduction keeps the sum independent of the thread count
    let (mut value, mut low, mut high) = (0.0, 0.0, 0.0);
    for (v, l, h) in sums {
        value += v;
        low += l;
        high += h;
    }
    let tail = 1.0 - (1.0 - axis.outside).powi(m as i32);
    Ok(LevelSetEstimate {
        value,
        ci_low: low.min(value),
        ci_high: (high + tail).max(value).min(1.0),
        method: "grid".into(),
    })
}

const MC_CHUNK: usize = 4096;

fn mc_measure<P: MonotoneFunction + ?Sized, R: Rng + ?Sized>(
    phi: &P,
    measure: &MeasureSpec,
    a: f64,
    b: f64,
    samples: usize,
    rng: &mut R,
) -> Result<LevelSetEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let root: u64 = rng.random();
    let hit = |q: &[f64]| {
        let f = phi.eval(q);
        a <= f && f <= b
    };
    let hits: u64 = match measure {
        MeasureSpec::Product { marginal, m } => {
            let chunks = samples.div_ceil(MC_CHUNK);
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut r = ChaCha8Rng::seed_from_u64(derive_trial_seed(root, c as u64));
                    let len = MC_CHUNK.min(samples - c * MC_CHUNK);
                    let mut q = vec![0.0; *m];
                    (0..len)
                        .filter(|_| {
                            q.iter_mut().for_each(|x| *x = marginal.sample(&mut r));
                            hit(&q)
                        })
                        .count() as u64
                })
                .collect::<Vec<_>>()
                .into_iter()
                .sum()
        }
        MeasureSpec::Correlated { model, lattice } => {
            let sites = lattice.sites();
            match model {
                FieldModel::Iid { marginal } => {
                    let mut r = ChaCha8Rng::seed_from_u64(root);
                    let mut q = vec![0.0; sites.len()];
                    (0..samples)
                        .filter(|_| {
                            q.iter_mut().for_each(|x| *x = marginal.sample(&mut r));
                            hit(&q)
                        })
                        .count() as u64
                }
                FieldModel::Gaussian(g) => {
                    let sampler = g.sampler(&sites)?;
                    let chunks = samples.div_ceil(MC_CHUNK);
                    (0..chunks)
                        .into_par_iter()
                        .map(|c| {
                            let mut r =
                                ChaCha8Rng::seed_from_u64(derive_trial_seed(root, c as u64));
                            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
                            (0..len).filter(|_| hit(&sampler.sample_values(&mut r))).count()
                                as u64
                        })
                        .collect::<Vec<_>>()
                        .into_iter()
                        .sum()
                }
                FieldModel::Gibbs(gm) => {
                    let mut r = ChaCha8Rng::seed_from_u64(root);
                    let mut chain = GibbsChain::new(gm, lattice, None, &mut r)?;
                    let configs =
                        chain.run(&mut r, gm.sampler.burn_in, gm.sampler.thinning, samples)?;
                    configs.iter().filter(|q| hit(q)).count() as u64
                }
            }
        }
    };
    let (lo, hi) = wilson_interval(hits, samples as u64, 0.95)?;
    Ok(LevelSetEstimate {
        value: hits as f64 / samples as f64,
        ci_low: lo,
        ci_high: hi,
        method: "mc".into(),
    })
}

/// Outcome of one `mu{Phi in I} <= m * modulus(|I|)` comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub phi_name: String,
    pub m: usize,
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    pub lhs: f64,
    pub lhs_ci_low: f64,
    pub lhs_ci_high: f64,
    pub rhs: f64,
    pub holds: bool,
    /// The modulus does not decay (atomic marginal), so the bound carries no information.
    pub vacuous: bool,
    pub method: String,
}

/// Outer configurations for the conditional modulus on correlated measures.
pub const C1_OUTER_TRIALS: usize = 2000;

/// Compares the measure of `{Phi in [a, b]}` with `m * s(mu, b - a)` for
/// product measures and `m * C1(b - a)` (Monte Carlo) otherwise.
/// `holds` allows `max(1e-12, 3 * half-width)` of slack, with the half-widths
/// of both sides added.
pub fn verify_bound<P: MonotoneFunction + ?Sized, R: Rng + ?Sized>(
    phi: &P,
    measure: &MeasureSpec,
    interval: (f64, f64),
    method: MeasureMethod,
    rng: &mut R,
) -> Result<LevelSetReport> {
    let m = measure.arity();
    let (a, b) = interval;
    let eps = b - a;
    let lhs = level_set_measure(phi, measure, interval, method, rng)?;
    let (rhs, rhs_half) = match measure {
        MeasureSpec::Product { marginal, .. } => (m as f64 * levy_concentration(marginal, eps), 0.0),
        MeasureSpec::Correlated { model, lattice } => {
            let est = conditional_concentration_c1(model, lattice, &[eps], C1_OUTER_TRIALS, rng)?;
            let o = &est[0].overall;
            (m as f64 * o.value, m as f64 * 0.5 * (o.ci_high - o.ci_low))
        }
    };
    let half = 0.5 * (lhs.ci_high - lhs.ci_low) + rhs_half;
    let tol = (3.0 * half).max(1e-12);
    Ok(LevelSetReport {
        phi_name: phi.name(),
        m,
        epsilon: eps,
        a,
        b,
        lhs: lhs.value,
        lhs_ci_low: lhs.ci_low,
        lhs_ci_high: lhs.ci_high,
        rhs,
        holds: lhs.value <= rhs + tol,
        vacuous: measure.is_atomic(),
        method: lhs.method,
    })
}

/// Treats `q` as site potentials added to `base` and checks that the `k`-th
/// sorted eigenvalue of the box operator is J-monotonic.
pub fn eigenvalue_family_check<R: Rng + ?Sized>(
    lattice: &LatticeBox,
    base: &[f64],
    k: usize,
    grid: &GridSpec,
    directions: usize,
    rng: &mut R,
) -> Result<MonotonicityCheck> {
    if lattice.cardinality() > 16 {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue family check needs at most 16 sites, got {}",
            lattice.cardinality()
        )));
    }
    let phi = SortedEigenvalue::new(
        OperatorFamily::SingleParticle {
            lattice: lattice.clone(),
        },
        base.to_vec(),
        k,
    )?;
    check_monotonic(&phi, grid, directions, rng)
}

/// Product-measure masses on the grid of `points` cells per axis (scored at
/// cell centres): the layers `A^eps_j \ A^eps_{j-1}` for `j = 1..m`, and
/// separately `A^eps_m \ A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepLayers {
    pub layers: Vec<f64>,
    pub outer_minus_base: f64,
}

pub fn sweep_layer_masses<P: MonotoneFunction + ?Sized>(
    phi: &P,
    marginal: &MarginalDistribution,
    a: f64,
    eps: f64,
    points: usize,
) -> Result<SweepLayers> {
    let m = phi.arity();
    if m > MAX_GRID_MEASURE_ARITY {
        return Err(Error::InvalidArgument(format!(
            "grid measure needs arity <= {MAX_GRID_MEASURE_ARITY}, got {m}"
        )));
    }
    let axis = axis_cells(marginal, points, eps)?;
    let n = axis.cells.len();
    let mut layers = vec![0.0; m];
    let mut outer = 0.0;
    let mut q = vec![0.0; m];
    for mut idx in 0..n.pow(m as u32) {
        let mut w = 1.0;
        for c in (0..m).rev() {
            let cell = axis.cells[idx % n];
            idx /= n;
            q[c] = cell.0;
            w *= cell.3;
        }
        if sweep_membership(phi, a, eps, m, &q) && !sweep_membership(phi, a, eps, 0, &q) {
            outer += w;
        }
        for j in 1..=m {
            if sweep_membership(phi, a, eps, j, &q) && !sweep_membership(phi, a, eps, j - 1, &q) {
                layers[j - 1] += w;
            }
        }
    }
    Ok(SweepLayers {
        layers,
        outer_minus_base: outer,
    })
}
