use lso_core::concentration::{
    conditional_concentration_c1, decay_scan, empirical_concentration, gaussian_c1_bound,
    gaussian_c2, gibbs_c1_bound, levy_concentration, sup_interval_mass, write_moduli_csv,
    ConcentrationMethod,
};
use lso_core::fields::{
    conditional_variance_floor, FieldModel, GaussianFieldModel, GibbsFieldModel,
    MarginalDistribution, PairKernel,
};
use lso_core::lattice::LatticeBox;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `int_{-eps/2}^{eps/2}` of the N(0, var) density, composite Simpson.
fn centred_normal_mass(var: f64, eps: f64) -> f64 {
    let f = |x: f64| (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    let n = 2000;
    let h = eps / n as f64;
    let a = -eps / 2.0;
    let mut acc = f(a) + f(-a);
    for k in 1..n {
        acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn levy_examples() {
    let u = MarginalDistribution::uniform(0.0, 1.0).unwrap();
    assert!((levy_concentration(&u, 0.1) - 0.1).abs() < 1e-15);
    let g = MarginalDistribution::gaussian(0.0, 1.0).unwrap();
    let oracle = centred_normal_mass(1.0, 0.01);
    assert!((oracle - 0.0039894).abs() < 1e-7);
    assert!((levy_concentration(&g, 0.01) - oracle).abs() < 1e-12);
    let b = MarginalDistribution::bernoulli(0.3, [0.0, 1.0]).unwrap();
    assert!((levy_concentration(&b, 0.1) - 0.7).abs() < 1e-15);
}

#[test]
fn levy_is_a_sup_over_windows() {
    // brute-force scan of the window position
    let marginals = [
        MarginalDistribution::uniform(-1.0, 2.0).unwrap(),
        MarginalDistribution::gaussian(0.4, 2.0).unwrap(),
        MarginalDistribution::bernoulli(0.6, [-1.0, 0.5]).unwrap(),
    ];
    for m in &marginals {
        for eps in [0.05, 0.3, 1.0, 1.6] {
            let brute = (0..=20_000)
                .map(|k| -6.0 + 12.0 * k as f64 / 20_000.0)
                .map(|a| m.interval_mass(a, a + eps))
                .fold(0.0, f64::max);
            let s = levy_concentration(m, eps);
            assert!(s >= brute - 1e-12 && s - brute < 1e-6, "{} {eps}: {s} {brute}", m.name());
        }
    }
}

#[test]
fn empirical_examples() {
    let e = empirical_concentration(&[0.0, 0.5, 1.0], 0.6).unwrap();
    assert!((e.value - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(e.method, ConcentrationMethod::Empirical);
    assert_eq!(empirical_concentration(&[0.3; 5], 0.01).unwrap().value, 1.0);
    assert!(empirical_concentration(&[0.3], 0.1).is_err());
    let mut r = rng(1);
    let xs: Vec<f64> = (0..100_000).map(|_| r.random::<f64>()).collect();
    let e = empirical_concentration(&xs, 0.1).unwrap();
    assert!((e.value - 0.1).abs() < 0.01);
    assert!(e.ci_low <= 0.1 && 0.1 <= e.ci_high);
}

#[test]
fn sup_search_finds_peak() {
    let g = MarginalDistribution::gaussian(1.3, 0.25).unwrap();
    let v = sup_interval_mass(|a| g.interval_mass(a, a + 0.2), -2.0, 4.0, 0.2);
    let exact = centred_normal_mass(0.25, 0.2);
    assert!(v <= exact + 1e-12 && v >= exact * (1.0 - 1e-6));
}

#[test]
fn product_measure_reduces_to_levy() {
    let lattice = LatticeBox::chain(4).unwrap();
    let marginals = [
        MarginalDistribution::uniform(0.0, 1.0).unwrap(),
        MarginalDistribution::gaussian(0.0, 1.0).unwrap(),
        MarginalDistribution::bernoulli(0.5, [0.0, 1.0]).unwrap(),
    ];
    let eps = [0.01, 0.05, 0.2];
    for m in marginals {
        let model = FieldModel::Iid { marginal: m.clone() };
        let est = conditional_concentration_c1(&model, &lattice, &eps, 200, &mut rng(2)).unwrap();
        for (e, c) in eps.iter().zip(&est) {
            let s = levy_concentration(&m, *e);
            assert!(c.overall.ci_low <= s && s <= c.overall.ci_high, "{} {e}", m.name());
            assert_eq!(c.per_site.len(), 4);
        }
    }
}

#[test]
fn gaussian_diagonal_c1() {
    let model = GaussianFieldModel::white(1.0).unwrap();
    let lattice = LatticeBox::chain(3).unwrap();
    let est = conditional_concentration_c1(
        &FieldModel::Gaussian(model.clone()),
        &lattice,
        &[0.01, 0.1],
        500,
        &mut rng(3),
    )
    .unwrap();
    let oracle = centred_normal_mass(1.0, 0.01);
    assert!(est[0].overall.ci_low <= oracle && oracle <= est[0].overall.ci_high);
    assert!((est[0].overall.value - 0.0039894).abs() < 1e-7);
    assert_eq!(est[0].overall.method, ConcentrationMethod::ConditionalMc);
    let bound = gaussian_c1_bound(&model, &lattice.sites(), &[], 0.1).unwrap();
    assert!((bound - 0.0398942).abs() < 1e-7);
    assert_eq!(gaussian_c1_bound(&model, &lattice.sites(), &[], 0.0).unwrap(), 0.0);
    assert!(est[1].overall.ci_low <= bound);
}

#[test]
fn gibbs_free_c1_is_uniform_width() {
    let model = GibbsFieldModel::nearest_neighbor(0.0, 1.0, 1.0, PairKernel::Product, 0.0).unwrap();
    let lattice = LatticeBox::chain(3).unwrap();
    let est = conditional_concentration_c1(
        &FieldModel::Gibbs(model.clone()),
        &lattice,
        &[0.1],
        200,
        &mut rng(4),
    )
    .unwrap();
    let c = &est[0].overall;
    assert!(c.ci_low <= 0.1 && 0.1 <= c.ci_high, "{c:?}");
    assert!((gibbs_c1_bound(&model, 1, 0.1) - 0.1).abs() < 1e-12);
    let hot = GibbsFieldModel::nearest_neighbor(0.0, 1.0, 0.0, PairKernel::Product, 2.0).unwrap();
    assert!((gibbs_c1_bound(&hot, 1, 0.1) - 0.1).abs() < 1e-12);
}

#[test]
fn analytic_bounds_dominate() {
    let lattice = LatticeBox::chain(5).unwrap();
    let eps = [0.01, 0.05, 0.2];

    let g = GaussianFieldModel::exponential(1.0, 1.5).unwrap();
    let est = conditional_concentration_c1(&FieldModel::Gaussian(g.clone()), &lattice, &eps, 400, &mut rng(5))
        .unwrap();
    for (e, c) in eps.iter().zip(&est) {
        let b = gaussian_c1_bound(&g, &lattice.sites(), &[], *e).unwrap();
        assert!(c.overall.value - c.overall.half_width() <= b, "{e}");
    }

    let gm = GibbsFieldModel::nearest_neighbor(-1.0, 1.0, 1.0, PairKernel::Product, 1.0).unwrap();
    for e in eps {
        let b = gibbs_c1_bound(&gm, 1, e);
        assert!((b - e * 6f64.exp() / 2.0).abs() < 1e-12 * b);
    }
    let est = conditional_concentration_c1(&FieldModel::Gibbs(gm.clone()), &lattice, &eps, 300, &mut rng(6))
        .unwrap();
    for (e, c) in eps.iter().zip(&est) {
        assert!(c.overall.value - c.overall.half_width() <= gibbs_c1_bound(&gm, 1, *e));
    }
}

#[test]
fn c1_below_c2_below_density_bound() {
    for model in [
        GaussianFieldModel::white(0.7).unwrap(),
        GaussianFieldModel::exponential(1.0, 0.8).unwrap(),
    ] {
        let lattice = LatticeBox::chain(4).unwrap();
        let sites = lattice.sites();
        let floor = conditional_variance_floor(&model, &sites).unwrap();
        let c3 = 1.0 / (2.0 * std::f64::consts::PI * floor).sqrt();
        let eps = [0.01, 0.1, 0.5];
        let c1 = conditional_concentration_c1(&FieldModel::Gaussian(model.clone()), &lattice, &eps, 200, &mut rng(7))
            .unwrap();
        for (e, c) in eps.iter().zip(&c1) {
            let c2 = gaussian_c2(&model, &sites, *e).unwrap();
            assert!(c.overall.value <= c2 + 1e-12);
            assert!(c2 <= e * c3 + 1e-15);
            assert!((c2 - centred_normal_mass(floor, *e)).abs() < 1e-10);
        }
    }
}

#[test]
fn decay_scans() {
    let lengths: Vec<usize> = (2..=8).collect();
    let lattice = LatticeBox::chain(2).unwrap();

    let uniform = FieldModel::Iid { marginal: MarginalDistribution::uniform(0.0, 1.0).unwrap() };
    let scan = decay_scan(&uniform, &lattice, 1.0, &lengths, 50, &mut rng(8)).unwrap();
    assert!(scan.decays && scan.largest_b > 1.0);
    for row in &scan.rows {
        let e = (-(row.l as f64)).exp();
        assert!((row.estimate - e).abs() < 1e-9 * e.max(1e-300) + 1e-15);
        assert!(row.estimate <= row.reference * (1.0 + 1e-9));
    }

    let gaussian = FieldModel::Gaussian(GaussianFieldModel::white(1.0).unwrap());
    let scan = decay_scan(&gaussian, &lattice, 1.0, &lengths, 50, &mut rng(9)).unwrap();
    assert!(scan.decays);
    for row in &scan.rows {
        assert!((row.estimate / row.epsilon - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-3);
    }

    let atoms = FieldModel::Iid { marginal: MarginalDistribution::bernoulli(0.5, [0.0, 1.0]).unwrap() };
    let scan = decay_scan(&atoms, &lattice, 1.0, &lengths, 50, &mut rng(10)).unwrap();
    assert!(!scan.decays);
    assert!(scan.rows.iter().all(|r| (r.estimate - 0.5).abs() < 1e-15));
}

#[test]
fn moduli_table() {
    let lattice = LatticeBox::chain(3).unwrap();
    let model = FieldModel::Gaussian(GaussianFieldModel::exponential(1.0, 2.0).unwrap());
    let est = conditional_concentration_c1(&model, &lattice, &[0.01, 0.1], 100, &mut rng(11)).unwrap();
    let mut buf = Vec::new();
    write_moduli_csv(&mut buf, &model.name(), &est).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["model_id", "j", "epsilon", "estimate", "ci_low", "ci_high", "method"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[0][0], model.name());
    assert_eq!(&rows[0][6], "conditional-mc");
    let v: f64 = rows[0][3].parse().unwrap();
    let lo: f64 = rows[0][4].parse().unwrap();
    let hi: f64 = rows[0][5].parse().unwrap();
    assert!(lo <= v && v <= hi);
}

fn any_marginal() -> impl Strategy<Value = MarginalDistribution> {
    prop_oneof![
        (-2.0f64..2.0, 0.1f64..3.0).prop_map(|(a, w)| MarginalDistribution::uniform(a, a + w).unwrap()),
        (-1.0f64..1.0, 0.05f64..4.0).prop_map(|(m, v)| MarginalDistribution::gaussian(m, v).unwrap()),
        (0.05f64..0.95, 0.1f64..2.0).prop_map(|(p, gap)| MarginalDistribution::bernoulli(p, [0.0, gap]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn levy_monotone_and_subadditive(m in any_marginal(), e1 in 1e-4f64..2.0, e2 in 1e-4f64..2.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let s_lo = levy_concentration(&m, lo);
        let s_hi = levy_concentration(&m, hi);
        prop_assert!((0.0..=1.0).contains(&s_lo) && s_hi <= 1.0);
        prop_assert!(s_lo <= s_hi + 1e-15);
        prop_assert!(levy_concentration(&m, e1 + e2) <= levy_concentration(&m, e1) + levy_concentration(&m, e2) + 1e-12);
    }

    #[test]
    fn c1_monotone_in_eps(seed in any::<u64>(), xi in 0.3f64..3.0) {
        let model = FieldModel::Gaussian(GaussianFieldModel::exponential(1.0, xi).unwrap());
        let eps = [0.001, 0.01, 0.05, 0.1, 0.5];
        let est = conditional_concentration_c1(&model, &LatticeBox::chain(3).unwrap(), &eps, 40, &mut rng(seed)).unwrap();
        for w in est.windows(2) {
            prop_assert!(w[0].overall.value <= w[1].overall.value);
        }
    }

    #[test]
    fn empirical_monotone(seed in any::<u64>(), n in 2usize..400) {
        let mut r = rng(seed);
        let xs: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let mut prev = 0.0;
        for e in [0.001, 0.01, 0.1, 0.3, 1.0] {
            let v = empirical_concentration(&xs, e).unwrap().value;
            prop_assert!(v >= prev);
            prev = v;
        }
    }
}
