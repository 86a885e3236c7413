//! Dense symmetric eigensolver and spectral queries.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Hamiltonian;

/// Eigenvalues of a finite Hamiltonian, ascending, with multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    /// For eigenvalue-only solves `|sum(lambda) - trace|`; for full
    /// decompositions the Frobenius norm of `HQ - QD`.
    residual: f64,
}

impl Spectrum {
    /// Sorts `values` (stable, so ties keep their input order).
    pub fn new(mut values: Vec<f64>, residual: f64) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        Spectrum { values, residual }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn min(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("matrix has non-finite entries".into()))
    }
}

pub fn eigenvalues_symmetric(h: &Hamiltonian) -> Result<Spectrum> {
    if h.dim() == 0 {
        return Err(Error::Empty);
    }
    let m = h.to_dense();
    check_finite(&m)?;
    spectrum_of(m, h.trace())
}

/// Eigenvalues of a dense matrix; the matrix must be exactly symmetric.
pub fn eigenvalues_dense(m: &DMatrix<f64>) -> Result<Spectrum> {
    if m.nrows() == 0 {
        return Err(Error::Empty);
    }
    crate::lattice::Hamiltonian::from_dense(m, Default::default())?;
    check_finite(m)?;
    spectrum_of(m.clone(), m.trace())
}

fn spectrum_of(m: DMatrix<f64>, trace: f64) -> Result<Spectrum> {
    let values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure);
    }
    let residual = (values.iter().sum::<f64>() - trace).abs();
    Ok(Spectrum::new(values, residual))
}

/// Eigenvalues with orthonormal eigenvectors (columns, in the same order).
pub fn eigen_decomposition(h: &Hamiltonian) -> Result<(Spectrum, DMatrix<f64>)> {
    if h.dim() == 0 {
        return Err(Error::Empty);
    }
    let m = h.to_dense();
    check_finite(&m)?;
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or(Error::SolverFailure)?;
    let n = h.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values.clone()));
    let residual = (&m * &vectors - &vectors * d).norm();
    Ok((Spectrum { values, residual }, vectors))
}

/// `min_j |E_j - e|`.
pub fn dist_to_spectrum(spec: &Spectrum, e: f64) -> Result<f64> {
    let v = spec.values();
    if v.is_empty() {
        return Err(Error::Empty);
    }
    let k = v.partition_point(|&x| x < e);
    let mut best = f64::INFINITY;
    if k < v.len() {
        best = best.min((v[k] - e).abs());
    }
    if k > 0 {
        best = best.min((v[k - 1] - e).abs());
    }
    Ok(best)
}

/// `#{ j : E_j <= e }`.
pub fn counting_function(spec: &Spectrum, e: f64) -> usize {
    spec.values().partition_point(|&x| x <= e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{assemble_lso_values, LatticeBox};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn chain(n: usize) -> Hamiltonian {
        assemble_lso_values(&LatticeBox::chain(n).unwrap(), vec![0.0; n])
    }

    /// Closed-form Dirichlet chain eigenvalues `2 cos(k pi / (n + 1))`.
    fn chain_oracle(n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (1..=n)
            .map(|k| 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos())
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn diagonal_matrix() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let s = eigenvalues_dense(&m).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn chains_match_closed_form() {
        for n in [2, 3, 5, 12] {
            let s = eigenvalues_symmetric(&chain(n)).unwrap();
            for (a, b) in s.values().iter().zip(chain_oracle(n)) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
        }
        let s2 = eigenvalues_symmetric(&chain(2)).unwrap();
        assert!((s2.values()[0] + 1.0).abs() < 1e-14 && (s2.values()[1] - 1.0).abs() < 1e-14);
        let s3 = eigenvalues_symmetric(&chain(3)).unwrap();
        let r2 = 2f64.sqrt();
        for (a, b) in s3.values().iter().zip([-r2, 0.0, r2]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_asymmetric_and_empty() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 1.0]);
        assert!(matches!(eigenvalues_dense(&m), Err(Error::NotSymmetric { .. })));
        assert!(matches!(
            eigenvalues_dense(&DMatrix::<f64>::zeros(0, 0)),
            Err(Error::Empty)
        ));
    }

    #[test]
    fn dist_examples() {
        let s = Spectrum::new(vec![-1.0, 1.0], 0.0);
        assert_eq!(dist_to_spectrum(&s, 0.0).unwrap(), 1.0);
        assert_eq!(dist_to_spectrum(&s, 1.0).unwrap(), 0.0);
        let s = Spectrum::new(vec![0.2, 0.7, 0.9], 0.0);
        assert!((dist_to_spectrum(&s, 0.75).unwrap() - 0.05).abs() < 1e-15);
        assert!(matches!(
            dist_to_spectrum(&Spectrum::new(vec![], 0.0), 0.0),
            Err(Error::Empty)
        ));
    }

    #[test]
    fn counting_examples() {
        let s = Spectrum::new(vec![-1.0, 1.0], 0.0);
        assert_eq!(counting_function(&s, 0.0), 1);
        assert_eq!(counting_function(&s, -2.0), 0);
        assert_eq!(counting_function(&s, 1.0), 2);
    }

    #[test]
    fn decomposition_residual() {
        let b = LatticeBox::new(vec![0, 0], vec![3, 4]).unwrap();
        let pot: Vec<f64> = (0..b.cardinality()).map(|i| ((i * 7) % 5) as f64 * 0.3).collect();
        let h = assemble_lso_values(&b, pot);
        let (s, q) = eigen_decomposition(&h).unwrap();
        let n = h.dim() as f64;
        let norm = h.to_dense().norm();
        assert!(s.residual() <= 1e-9 * n * norm);
        let qtq = q.transpose() * &q;
        assert!((qtq - DMatrix::identity(h.dim(), h.dim())).norm() < 1e-12);
        let plain = eigenvalues_symmetric(&h).unwrap();
        for (a, b) in s.values().iter().zip(plain.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bipartite_spectrum_is_symmetric() {
        let b = LatticeBox::new(vec![0, 0], vec![3, 2]).unwrap();
        let s = eigenvalues_symmetric(&assemble_lso_values(&b, vec![0.0; 12])).unwrap();
        let v = s.values();
        for k in 0..v.len() {
            assert!((v[k] + v[v.len() - 1 - k]).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn trace_and_counting_invariants(
            pot in prop::collection::vec(-3.0f64..3.0, 1..30),
            probe in -6.0f64..6.0,
        ) {
            let n = pot.len();
            let h = assemble_lso_values(&LatticeBox::chain(n).unwrap(), pot);
            let s = eigenvalues_symmetric(&h).unwrap();
            prop_assert_eq!(s.len(), n);
            prop_assert!(s.values().windows(2).all(|w| w[0] <= w[1]));
            let tol = 1e-8 * n as f64 * h.max_abs_entry().max(1.0);
            prop_assert!((s.sum() - h.trace()).abs() <= tol);
            for &e in s.values() {
                prop_assert_eq!(dist_to_spectrum(&s, e).unwrap(), 0.0);
            }
            prop_assert_eq!(counting_function(&s, s.min().unwrap() - 1e-9), 0);
            prop_assert_eq!(counting_function(&s, s.max().unwrap()), n);
            let c = counting_function(&s, probe);
            prop_assert!(counting_function(&s, probe + 0.5) >= c);
        }
    }
}
