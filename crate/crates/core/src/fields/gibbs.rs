use rand::Rng;
use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use super::sample::FieldSample;
use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Site};

/// Power-law couplings are dropped beyond the distance where the envelope
/// falls below this value.
pub const POWER_LAW_CUTOFF: f64 = 1e-8;

/// Fewest burn-in sweeps a chain will accept.
pub const MIN_BURN_IN_SWEEPS: usize = 10;

/// Shape of the two-body term: `u_l(s, t) = J_l * kernel(s, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKernel {
    /// `s * t`
    Product,
    /// `(s - t)^2`
    SquaredDifference,
}

impl PairKernel {
    pub fn eval(self, s: f64, t: f64) -> f64 {
        match self {
            PairKernel::Product => s * t,
            PairKernel::SquaredDifference => (s - t) * (s - t),
        }
    }

    /// `sup_{s,t in [a,b]} |kernel(s, t)|`.
    pub fn sup_abs(self, a: f64, b: f64) -> f64 {
        match self {
            PairKernel::Product => a.abs().max(b.abs()).powi(2),
            PairKernel::SquaredDifference => (b - a) * (b - a),
        }
    }

    /// Adds `coupling * kernel(s, t)` to the quadratic `energy` in `s`.
    fn accumulate(self, coupling: f64, t: f64, energy: &mut LocalEnergy) {
        match self {
            PairKernel::Product => energy.linear += coupling * t,
            PairKernel::SquaredDifference => {
                energy.quadratic += coupling;
                energy.linear -= 2.0 * coupling * t;
                energy.constant += coupling * t * t;
            }
        }
    }
}

/// Distance dependence of the couplings `J_l`, `l` the l-infinity distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingProfile {
    /// `J_l = strengths[l - 1]` for `l <= R = strengths.len()`, zero beyond.
    Finite { strengths: Vec<f64> },
    /// `J_l = constant / l^(d + 1 + delta)`, truncated at `POWER_LAW_CUTOFF`.
    PowerLaw { constant: f64, delta: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelfEnergy {
    #[default]
    Zero,
    Linear { coefficient: f64 },
    Quadratic { coefficient: f64 },
}

impl SelfEnergy {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            SelfEnergy::Zero => 0.0,
            SelfEnergy::Linear { coefficient } => coefficient * s,
            SelfEnergy::Quadratic { coefficient } => coefficient * s * s,
        }
    }

    /// `sup h - inf h` over `[a, b]`.
    pub fn oscillation(self, a: f64, b: f64) -> f64 {
        match self {
            SelfEnergy::Zero => 0.0,
            SelfEnergy::Linear { coefficient } => coefficient.abs() * (b - a),
            SelfEnergy::Quadratic { coefficient } => {
                let hi = a.abs().max(b.abs()).powi(2);
                let lo = if a <= 0.0 && 0.0 <= b {
                    0.0
                } else {
                    a.abs().min(b.abs()).powi(2)
                };
                coefficient.abs() * (hi - lo)
            }
        }
    }
}

/// Spins outside the box when no explicit configuration is given.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCondition {
    /// `(a + b) / 2`
    #[default]
    Midpoint,
    Constant { value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsSamplerSettings {
    pub burn_in: usize,
    pub thinning: usize,
    pub grid_points: usize,
}

impl Default for GibbsSamplerSettings {
    fn default() -> Self {
        GibbsSamplerSettings {
            burn_in: 500,
            thinning: 10,
            grid_points: 512,
        }
    }
}

/// Lattice Gibbs field with spins in `[spin_low, spin_high]` and formal energy
/// `sum_x h(s_x) + sum_x sum_{0 < |y-x| <= R} u_{|x-y|}(s_x, s_y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsFieldModel {
    pub spin_low: f64,
    pub spin_high: f64,
    pub beta: f64,
    #[serde(default)]
    pub self_energy: SelfEnergy,
    pub kernel: PairKernel,
    pub couplings: CouplingProfile,
    #[serde(default)]
    pub boundary: BoundaryCondition,
    #[serde(default)]
    pub sampler: GibbsSamplerSettings,
}

impl GibbsFieldModel {
    /// Nearest-neighbour model with the given kernel and coupling.
    pub fn nearest_neighbor(
        spin_low: f64,
        spin_high: f64,
        beta: f64,
        kernel: PairKernel,
        coupling: f64,
    ) -> Result<Self> {
        let m = GibbsFieldModel {
            spin_low,
            spin_high,
            beta,
            self_energy: SelfEnergy::Zero,
            kernel,
            couplings: CouplingProfile::Finite {
                strengths: vec![coupling],
            },
            boundary: BoundaryCondition::Midpoint,
            sampler: GibbsSamplerSettings::default(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(m.to_string()));
        if !(self.spin_low.is_finite() && self.spin_high.is_finite() && self.spin_low < self.spin_high)
        {
            return bad("spin interval must be finite with low < high");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("inverse temperature must be finite and non-negative");
        }
        match &self.couplings {
            CouplingProfile::Finite { strengths } => {
                if strengths.iter().any(|j| !j.is_finite()) {
                    return bad("couplings must be finite");
                }
            }
            CouplingProfile::PowerLaw { constant, delta } => {
                if !(constant.is_finite() && *delta > 0.0) {
                    return bad("power-law couplings need a finite constant and delta > 0");
                }
            }
        }
        if self.sampler.grid_points < 2 || self.sampler.thinning == 0 {
            return bad("sampler needs at least 2 grid points and thinning >= 1");
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        let kernel = match self.kernel {
            PairKernel::Product => "st",
            PairKernel::SquaredDifference => "(s-t)^2",
        };
        let couplings = match &self.couplings {
            CouplingProfile::Finite { strengths } => {
                let j: Vec<String> = strengths.iter().map(|x| x.to_string()).collect();
                format!("J=[{}]", j.join(","))
            }
            CouplingProfile::PowerLaw { constant, delta } => format!("J={constant}/l^(d+1+{delta})"),
        };
        format!(
            "gibbs(S=[{},{}],beta={},u={kernel},{couplings})",
            self.spin_low, self.spin_high, self.beta
        )
    }

    pub fn spin_width(&self) -> f64 {
        self.spin_high - self.spin_low
    }

    /// Interaction range `R` in dimension `dim`.
    pub fn range(&self, dim: usize) -> usize {
        match &self.couplings {
            CouplingProfile::Finite { strengths } => strengths.len(),
            CouplingProfile::PowerLaw { constant, delta } => {
                let p = dim as f64 + 1.0 + delta;
                let mut r = 0usize;
                while constant.abs() / ((r + 1) as f64).powf(p) >= POWER_LAW_CUTOFF {
                    r += 1;
                }
                r
            }
        }
    }

    /// `J_l`, zero outside `1..=R`.
    pub fn coupling(&self, l: usize, dim: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        match &self.couplings {
            CouplingProfile::Finite { strengths } => strengths.get(l - 1).copied().unwrap_or(0.0),
            CouplingProfile::PowerLaw { constant, delta } => {
                if l > self.range(dim) {
                    0.0
                } else {
                    constant / (l as f64).powf(dim as f64 + 1.0 + delta)
                }
            }
        }
    }

    pub fn pair_potential(&self, l: usize, dim: usize, s: f64, t: f64) -> f64 {
        self.coupling(l, dim) * self.kernel.eval(s, t)
    }

    /// `max_l sup_{s,t} |u_l(s, t)|`.
    pub fn sup_pair_potential(&self, dim: usize) -> f64 {
        let k = self.kernel.sup_abs(self.spin_low, self.spin_high);
        (1..=self.range(dim))
            .map(|l| self.coupling(l, dim).abs() * k)
            .fold(0.0, f64::max)
    }

    /// Uniform bound on `|U(s_x | s')|`. Finite range: `(2R+1)^d sup|u|`.
    /// Power law: the summed envelope `sum_{y != 0} sup|u_{|y|}|` over the
    /// truncation ball.
    pub fn interaction_bound(&self, dim: usize) -> f64 {
        let r = self.range(dim);
        match self.couplings {
            CouplingProfile::Finite { .. } => {
                ((2 * r + 1) as f64).powi(dim as i32) * self.sup_pair_potential(dim)
            }
            CouplingProfile::PowerLaw { .. } => {
                let k = self.kernel.sup_abs(self.spin_low, self.spin_high);
                (1..=r)
                    .map(|l| {
                        let shell = ((2 * l + 1) as f64).powi(dim as i32)
                            - ((2 * l - 1) as f64).powi(dim as i32);
                        shell * self.coupling(l, dim).abs() * k
                    })
                    .sum()
            }
        }
    }

    /// `sup_s p(s | s') <= exp(beta (osc h + 2 sup|U|)) / (b - a)` for every `s'`.
    pub fn density_bound(&self, dim: usize) -> f64 {
        let osc = self.self_energy.oscillation(self.spin_low, self.spin_high);
        (self.beta * (osc + 2.0 * self.interaction_bound(dim))).exp() / self.spin_width()
    }

    pub fn boundary_spin(&self) -> f64 {
        match self.boundary {
            BoundaryCondition::Midpoint => 0.5 * (self.spin_low + self.spin_high),
            BoundaryCondition::Constant { value } => value,
        }
    }

    /// `U(s | s') = sum_{0 < |y - x| <= R} u_{|x-y|}(s, s'_y)`, evaluated term by term.
    pub fn interaction_energy<F>(&self, site: &Site, s: f64, spins: F) -> Result<f64>
    where
        F: Fn(&Site) -> Option<f64>,
    {
        let dim = site.dim();
        let mut u = 0.0;
        for (y, l) in ball(site, self.range(dim)) {
            let t = spins(&y).ok_or(Error::MissingSpin(y))?;
            u += self.pair_potential(l, dim, s, t);
        }
        Ok(u)
    }

    /// `h(s) + U(s | s')` as a quadratic polynomial in `s`.
    pub fn local_energy<F>(&self, site: &Site, spins: F) -> Result<LocalEnergy>
    where
        F: Fn(&Site) -> Option<f64>,
    {
        let dim = site.dim();
        let mut e = self.self_energy_polynomial();
        for (y, l) in ball(site, self.range(dim)) {
            let t = spins(&y).ok_or(Error::MissingSpin(y))?;
            self.kernel.accumulate(self.coupling(l, dim), t, &mut e);
        }
        Ok(e)
    }

    fn self_energy_polynomial(&self) -> LocalEnergy {
        let mut e = LocalEnergy::default();
        match self.self_energy {
            SelfEnergy::Zero => {}
            SelfEnergy::Linear { coefficient } => e.linear += coefficient,
            SelfEnergy::Quadratic { coefficient } => e.quadratic += coefficient,
        }
        e
    }

    /// `p(s | s') = exp(-beta (h(s) + U(s | s'))) / Xi(beta, s')`, `Xi` by adaptive quadrature.
    pub fn conditional_density<F>(&self, site: &Site, s: f64, spins: F) -> Result<f64>
    where
        F: Fn(&Site) -> Option<f64>,
    {
        if !(self.spin_low..=self.spin_high).contains(&s) {
            return Ok(0.0);
        }
        let energy = self.local_energy(site, spins)?;
        energy.density(self.beta, self.spin_low, self.spin_high, s)
    }
}

/// Sites `y != x` with `|y - x|_inf <= r`, paired with that distance.
fn ball(x: &Site, r: usize) -> Vec<(Site, usize)> {
    let dim = x.dim();
    let r = r as i64;
    let width = (2 * r + 1) as usize;
    let total = width.pow(dim as u32);
    let mut out = Vec::with_capacity(total.saturating_sub(1));
    for k in 0..total {
        let mut rem = k;
        let mut y = x.clone();
        for axis in (0..dim).rev() {
            y.0[axis] += (rem % width) as i64 - r;
            rem /= width;
        }
        let l = y.linf_distance(x) as usize;
        if l > 0 {
            out.push((y, l));
        }
    }
    out
}

/// Single-site energy `quadratic * s^2 + linear * s + constant`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalEnergy {
    pub quadratic: f64,
    pub linear: f64,
    pub constant: f64,
}

impl LocalEnergy {
    pub fn eval(&self, s: f64) -> f64 {
        (self.quadratic * s + self.linear) * s + self.constant
    }

    /// `min` of the energy over `[a, b]`, used to keep Boltzmann weights in range.
    fn min_on(&self, a: f64, b: f64) -> f64 {
        let mut m = self.eval(a).min(self.eval(b));
        if self.quadratic > 0.0 {
            let v = -self.linear / (2.0 * self.quadratic);
            if a < v && v < b {
                m = m.min(self.eval(v));
            }
        }
        m
    }

    /// `Xi = int_a^b exp(-beta (E(t) - E_min)) dt` together with `E_min`.
    pub fn normalization(&self, beta: f64, a: f64, b: f64) -> Result<(f64, f64)> {
        let shift = self.min_on(a, b);
        let tol = 1e-13 * (b - a);
        let z = integrate(|t| (-beta * (self.eval(t) - shift)).exp(), a, b, tol)?;
        Ok((z, shift))
    }

    pub fn density(&self, beta: f64, a: f64, b: f64, s: f64) -> Result<f64> {
        let (z, shift) = self.normalization(beta, a, b)?;
        Ok((-beta * (self.eval(s) - shift)).exp() / z)
    }

    pub fn cdf_table(&self, beta: f64, a: f64, b: f64, points: usize) -> ConditionalCdf {
        ConditionalCdf::new(|t| -beta * self.eval(t), a, b, points)
    }
}

/// Tabulated law on `[a, b]` from an unnormalized log-density: node densities,
/// Simpson cell masses, and a cubic Hermite interpolant of the CDF.
#[derive(Clone, Debug)]
pub struct ConditionalCdf {
    low: f64,
    step: f64,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl ConditionalCdf {
    pub fn new<F: Fn(f64) -> f64>(log_density: F, a: f64, b: f64, points: usize) -> Self {
        assert!(points >= 2 && b > a);
        let step = (b - a) / (points - 1) as f64;
        let nodes: Vec<f64> = (0..points).map(|i| a + step * i as f64).collect();
        let mids: Vec<f64> = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let shift = nodes
            .iter()
            .chain(&mids)
            .map(|&t| log_density(t))
            .fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = nodes.iter().map(|&t| (log_density(t) - shift).exp()).collect();
        let mut cdf = Vec::with_capacity(points);
        cdf.push(0.0);
        for i in 0..points - 1 {
            let fm = (log_density(mids[i]) - shift).exp();
            let cell = step / 6.0 * (dens[i] + 4.0 * fm + dens[i + 1]);
            cdf.push(cdf[i] + cell);
        }
        let total = *cdf.last().expect("non-empty");
        ConditionalCdf {
            low: a,
            step,
            density: dens.into_iter().map(|d| d / total).collect(),
            cdf: cdf.into_iter().map(|c| c / total).collect(),
        }
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.low + self.step * (self.cdf.len() - 1) as f64
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.low {
            return 0.0;
        }
        let n = self.cdf.len();
        let pos = (x - self.low) / self.step;
        if pos >= (n - 1) as f64 {
            return 1.0;
        }
        let i = pos as usize;
        let t = pos - i as f64;
        let h = self.step;
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.density[i] * h, self.density[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * d1;
        v.clamp(f0.min(f1), f0.max(f1))
    }

    /// Mass of `[x, x + width]`.
    pub fn interval_mass(&self, x: f64, width: f64) -> f64 {
        (self.cdf(x + width) - self.cdf(x)).max(0.0)
    }

    /// Inverse CDF at `u in [0, 1)`: cell located by the tabulated masses, then
    /// the linear-density quadratic solved within the cell.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.cdf.len();
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, n - 1) - 1;
        let cell_mass = self.cdf[i + 1] - self.cdf[i];
        if cell_mass <= 0.0 {
            return self.low + self.step * i as f64;
        }
        let r = ((u - self.cdf[i]) / cell_mass).clamp(0.0, 1.0);
        let (f0, f1) = (self.density[i], self.density[i + 1]);
        // linear density on [0, 1]: F(t) = (f0 t + (f1 - f0) t^2 / 2) / ((f0 + f1) / 2)
        let t = if (f1 - f0).abs() < 1e-12 * (f0 + f1) {
            r
        } else {
            let a = 0.5 * (f1 - f0);
            let b = f0;
            let c = -r * 0.5 * (f0 + f1);
            let disc = (b * b - 4.0 * a * c).max(0.0);
            (2.0 * (-c)) / (b + disc.sqrt())
        };
        self.low + self.step * (i as f64 + t.clamp(0.0, 1.0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

enum Slot {
    Inside(usize),
    Fixed(f64),
}

/// Single-site heat-bath chain on a box. Each update draws the spin exactly
/// from its tabulated conditional law given the current neighbours.
pub struct GibbsChain<'m> {
    model: &'m GibbsFieldModel,
    sites: Vec<Site>,
    spins: Vec<f64>,
    stencil: Vec<Vec<(Slot, f64)>>,
    model_id: String,
}

impl<'m> GibbsChain<'m> {
    /// Spins outside `lattice` come from `boundary` when it has them, and from
    /// the model's boundary condition otherwise. Initial spins are uniform.
    pub fn new<R: Rng + ?Sized>(
        model: &'m GibbsFieldModel,
        lattice: &LatticeBox,
        boundary: Option<&FieldSample>,
        rng: &mut R,
    ) -> Result<Self> {
        model.validate()?;
        let dim = lattice.dim();
        let r = model.range(dim);
        let sites = lattice.sites();
        let default_spin = model.boundary_spin();
        let stencil = sites
            .iter()
            .map(|x| {
                ball(x, r)
                    .into_iter()
                    .map(|(y, l)| {
                        let slot = match lattice.index_of(&y) {
                            Some(i) => Slot::Inside(i),
                            None => Slot::Fixed(
                                boundary.and_then(|b| b.get(&y)).unwrap_or(default_spin),
                            ),
                        };
                        (slot, model.coupling(l, dim))
                    })
                    .filter(|(_, j)| *j != 0.0)
                    .collect()
            })
            .collect();
        let spins = (0..sites.len())
            .map(|_| model.spin_low + model.spin_width() * rng.random::<f64>())
            .collect();
        Ok(GibbsChain {
            model,
            sites,
            spins,
            stencil,
            model_id: model.name(),
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn spins(&self) -> &[f64] {
        &self.spins
    }

    pub fn set_spins(&mut self, spins: &[f64]) {
        assert_eq!(spins.len(), self.spins.len());
        self.spins.copy_from_slice(spins);
    }

    pub fn local_energy(&self, i: usize) -> LocalEnergy {
        let mut e = self.model.self_energy_polynomial();
        for (slot, j) in &self.stencil[i] {
            let t = match slot {
                Slot::Inside(k) => self.spins[*k],
                Slot::Fixed(v) => *v,
            };
            self.model.kernel.accumulate(*j, t, &mut e);
        }
        e
    }

    pub fn conditional_table(&self, i: usize) -> ConditionalCdf {
        self.local_energy(i).cdf_table(
            self.model.beta,
            self.model.spin_low,
            self.model.spin_high,
            self.model.sampler.grid_points,
        )
    }

    /// One sweep in site-index order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.sweep_observed(rng, |_, _, _| {});
    }

    /// One sweep, calling `observe(site index, local energy, new spin)` after each update.
    pub fn sweep_observed<R, F>(&mut self, rng: &mut R, mut observe: F)
    where
        R: Rng + ?Sized,
        F: FnMut(usize, &LocalEnergy, f64),
    {
        for i in 0..self.spins.len() {
            let energy = self.local_energy(i);
            let table = energy.cdf_table(
                self.model.beta,
                self.model.spin_low,
                self.model.spin_high,
                self.model.sampler.grid_points,
            );
            let s = table.sample(rng);
            self.spins[i] = s;
            observe(i, &energy, s);
        }
    }

    pub fn state(&self, seed: Option<u64>) -> FieldSample {
        FieldSample::from_values(self.sites.clone(), self.spins.clone(), seed, &self.model_id)
    }

    /// `burn_in` sweeps, then `count` states separated by `thinning` sweeps.
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        burn_in: usize,
        thinning: usize,
        count: usize,
    ) -> Result<Vec<Vec<f64>>> {
        if burn_in < MIN_BURN_IN_SWEEPS {
            return Err(Error::InvalidArgument(format!(
                "burn-in {burn_in} is below the minimum of {MIN_BURN_IN_SWEEPS} sweeps"
            )));
        }
        if thinning == 0 {
            return Err(Error::InvalidArgument("thinning must be positive".into()));
        }
        for _ in 0..burn_in {
            self.sweep(rng);
        }
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            if k > 0 {
                for _ in 0..thinning {
                    self.sweep(rng);
                }
            }
            out.push(self.spins.clone());
        }
        Ok(out)
    }
}

/// One configuration after `burn_in` sweeps from a uniform start.
pub fn sample_gibbs<R: Rng + ?Sized>(
    model: &GibbsFieldModel,
    lattice: &LatticeBox,
    rng: &mut R,
    burn_in: usize,
    thinning: usize,
) -> Result<FieldSample> {
    let mut chain = GibbsChain::new(model, lattice, None, rng)?;
    let spins = chain.run(rng, burn_in, thinning, 1)?.remove(0);
    chain.set_spins(&spins);
    Ok(chain.state(None))
}
