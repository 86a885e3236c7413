use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::geometry::LatticeBox;
use crate::error::{Error, Result};
use crate::fields::FieldSample;

/// Where a Hamiltonian came from. Carried along so results can be traced
/// back to a box, a potential model and a seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub description: String,
    pub model_id: Option<String>,
    pub seed: Option<u64>,
    pub site_order: String,
}

impl Provenance {
    pub fn new(description: impl Into<String>) -> Self {
        Provenance {
            description: description.into(),
            model_id: None,
            seed: None,
            site_order: "lexicographic".into(),
        }
    }
}

/// Real symmetric sparse matrix. Only the diagonal and the strict upper
/// triangle are stored, so `H = H^T` holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    diagonal: Vec<f64>,
    // (row, col, value) with row < col, sorted, no duplicates
    upper: Vec<(usize, usize, f64)>,
    provenance: Provenance,
}

impl Hamiltonian {
    pub fn from_parts(
        diagonal: Vec<f64>,
        mut upper: Vec<(usize, usize, f64)>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = diagonal.len();
        for e in upper.iter_mut() {
            if e.0 > e.1 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
            if e.0 == e.1 || e.1 >= n {
                return Err(Error::InvalidArgument(format!(
                    "off-diagonal entry ({}, {}) out of range for dimension {n}",
                    e.0, e.1
                )));
            }
        }
        upper.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if upper.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidArgument("duplicate off-diagonal entry".into()));
        }
        Ok(Hamiltonian {
            diagonal,
            upper,
            provenance,
        })
    }

    /// Builds from a dense matrix, rejecting anything that is not exactly symmetric.
    pub fn from_dense(m: &DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        check_symmetric(m)?;
        let n = m.nrows();
        let diagonal = (0..n).map(|i| m[(i, i)]).collect();
        let mut upper = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if m[(i, j)] != 0.0 {
                    upper.push((i, j, m[(i, j)]));
                }
            }
        }
        Ok(Hamiltonian {
            diagonal,
            upper,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn upper_entries(&self) -> &[(usize, usize, f64)] {
        &self.upper
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Every stored entry of the full symmetric matrix, both triangles.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.diagonal
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, v))
            .chain(
                self.upper
                    .iter()
                    .flat_map(|&(i, j, v)| [(i, j, v), (j, i, v)]),
            )
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if row == col {
            return self.diagonal[row];
        }
        let key = (row.min(col), row.max(col));
        self.upper
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|k| self.upper[k].2)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.diagonal.iter().sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries().map(|e| e.2.abs()).fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        let mut y: Vec<f64> = self.diagonal.iter().zip(x).map(|(d, v)| d * v).collect();
        for &(i, j, v) in &self.upper {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
        y
    }
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            if m[(i, j)] != m[(j, i)] {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    diff: m[(i, j)] - m[(j, i)],
                });
            }
        }
    }
    Ok(())
}

/// Unit hopping between box neighbours, potential on the diagonal:
/// `(H psi)(x) = sum_{|y-x|=1, y in box} psi(y) + V(x) psi(x)`.
pub fn assemble_lso(lattice: &LatticeBox, potential: &FieldSample) -> Result<Hamiltonian> {
    let sites = lattice.sites();
    let diagonal = sites
        .iter()
        .map(|x| {
            potential
                .get(x)
                .ok_or_else(|| Error::MissingPotential(x.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_lso_values(lattice, diagonal)
        .with_provenance(provenance_for(lattice, potential)))
}

/// Same as [`assemble_lso`] with the potential given in site-index order.
pub fn assemble_lso_values(lattice: &LatticeBox, potential: Vec<f64>) -> Hamiltonian {
    assert_eq!(potential.len(), lattice.cardinality());
    Hamiltonian {
        diagonal: potential,
        upper: hopping_pairs(lattice),
        provenance: Provenance::new(format!("lso box {}", lattice.dims_label())),
    }
}

/// Sorted `(i, j, 1.0)` with `i < j` for every neighbouring pair of the box.
pub(crate) fn hopping_pairs(lattice: &LatticeBox) -> Vec<(usize, usize, f64)> {
    let lens = lattice.side_lengths();
    let n = lattice.cardinality();
    let mut strides = vec![1usize; lens.len()];
    for k in (0..lens.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * lens[k + 1];
    }
    let mut pairs = Vec::with_capacity(n * lens.len());
    for i in 0..n {
        for k in 0..lens.len() {
            let coord = (i / strides[k]) % lens[k];
            if coord + 1 < lens[k] {
                pairs.push((i, i + strides[k], 1.0));
            }
        }
    }
    pairs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    pairs
}

fn provenance_for(lattice: &LatticeBox, potential: &FieldSample) -> Provenance {
    Provenance {
        description: format!("lso box {}", lattice.dims_label()),
        model_id: Some(potential.model_id().to_string()),
        seed: potential.seed(),
        site_order: "lexicographic".into(),
    }
}

/// `H + t I`; for a single-particle operator this is the potential shift `V -> V + t`.
pub fn shift_potential(h: &Hamiltonian, t: f64) -> Hamiltonian {
    let mut out = h.clone();
    for d in out.diagonal.iter_mut() {
        *d += t;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;

    #[test]
    fn single_site() {
        let b = LatticeBox::chain(1).unwrap();
        let v = FieldSample::from_values(b.sites(), vec![3.5], None, "test");
        let h = assemble_lso(&b, &v).unwrap();
        assert_eq!(h.to_dense(), DMatrix::from_element(1, 1, 3.5));
    }

    #[test]
    fn two_site_chain() {
        let b = LatticeBox::chain(2).unwrap();
        let h = assemble_lso(&b, &FieldSample::constant(b.sites(), 0.0)).unwrap();
        assert_eq!(h.to_dense(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn missing_potential_is_error() {
        let b = LatticeBox::chain(3).unwrap();
        let v = FieldSample::constant(vec![Site(vec![0]), Site(vec![1])], 0.0);
        assert!(matches!(assemble_lso(&b, &v), Err(Error::MissingPotential(_))));
    }

    #[test]
    fn hopping_matches_neighbor_relation() {
        let b = LatticeBox::new(vec![0, -1], vec![2, 1]).unwrap();
        let h = assemble_lso_values(&b, vec![0.0; b.cardinality()]);
        let sites = b.sites();
        for (i, x) in sites.iter().enumerate() {
            for (j, y) in sites.iter().enumerate() {
                let expect = if x.l1_distance(y) == 1 { 1.0 } else { 0.0 };
                if i != j {
                    assert_eq!(h.get(i, j), expect);
                }
            }
        }
        let dense = h.to_dense();
        assert_eq!(dense, dense.transpose());
    }

    #[test]
    fn shift_adds_to_diagonal() {
        let b = LatticeBox::chain(1).unwrap();
        let h = assemble_lso_values(&b, vec![3.0]);
        assert_eq!(shift_potential(&h, 2.0).diagonal(), &[5.0]);
        assert_eq!(shift_potential(&h, 0.0), h);
    }

    #[test]
    fn from_dense_rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0 + 1e-15, 0.0]);
        assert!(matches!(
            Hamiltonian::from_dense(&m, Provenance::default()),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn apply_matches_dense() {
        let b = LatticeBox::new(vec![0, 0], vec![2, 1]).unwrap();
        let h = assemble_lso_values(&b, vec![0.5, -1.0, 2.0, 0.0, 1.5, 3.0]);
        let x = vec![1.0, 2.0, -1.0, 0.5, 0.0, 1.0];
        let dense = h.to_dense() * nalgebra::DVector::from_vec(x.clone());
        for (a, b) in h.apply(&x).iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
