use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::geometry::{LatticeBox, Site};
use super::hamiltonian::{hopping_pairs, Hamiltonian, Provenance};
use crate::error::{Error, Result};
use crate::fields::FieldSample;

/// Product box `Lambda^(1) x ... x Lambda^(N)` for N particles in Z^d.
///
/// Configurations are indexed in mixed radix with particle 1 most significant,
/// each particle's coordinate being its site index in its own box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LatticeBox>", into = "Vec<LatticeBox>")]
pub struct MultiParticleBox {
    boxes: Vec<LatticeBox>,
}

impl TryFrom<Vec<LatticeBox>> for MultiParticleBox {
    type Error = Error;
    fn try_from(boxes: Vec<LatticeBox>) -> Result<Self> {
        MultiParticleBox::new(boxes)
    }
}

impl From<MultiParticleBox> for Vec<LatticeBox> {
    fn from(m: MultiParticleBox) -> Self {
        m.boxes
    }
}

/// A point `x = (x_1, ..., x_N)` of the configuration space.
pub type Configuration = Vec<Site>;

impl MultiParticleBox {
    pub fn new(boxes: Vec<LatticeBox>) -> Result<Self> {
        let Some(first) = boxes.first() else {
            return Err(Error::InvalidBox("need at least one particle".into()));
        };
        if boxes.iter().any(|b| b.dim() != first.dim()) {
            return Err(Error::InvalidBox(
                "all particle boxes must have the same dimension".into(),
            ));
        }
        Ok(MultiParticleBox { boxes })
    }

    /// N copies of the same box.
    pub fn identical(lattice: LatticeBox, particles: usize) -> Result<Self> {
        Self::new(vec![lattice; particles])
    }

    pub fn particles(&self) -> usize {
        self.boxes.len()
    }

    pub fn boxes(&self) -> &[LatticeBox] {
        &self.boxes
    }

    pub fn dim(&self) -> usize {
        self.boxes[0].dim()
    }

    /// `|Lambda| = prod_j |Lambda^(j)|`, the Hilbert space dimension.
    pub fn cardinality(&self) -> usize {
        self.boxes.iter().map(|b| b.cardinality()).product()
    }

    /// `M(Lambda) = sum_j |Lambda^(j)|`.
    pub fn total_single_particle_sites(&self) -> usize {
        self.boxes.iter().map(|b| b.cardinality()).sum()
    }

    pub fn all_identical(&self) -> bool {
        self.boxes.windows(2).all(|w| w[0] == w[1])
    }

    fn radices(&self) -> Vec<usize> {
        self.boxes.iter().map(|b| b.cardinality()).collect()
    }

    pub fn local_indices(&self, mut index: usize) -> Vec<usize> {
        let radices = self.radices();
        let mut out = vec![0; radices.len()];
        for j in (0..radices.len()).rev() {
            out[j] = index % radices[j];
            index /= radices[j];
        }
        out
    }

    pub fn index_from_local(&self, local: &[usize]) -> usize {
        local
            .iter()
            .zip(self.radices())
            .fold(0, |acc, (&i, r)| acc * r + i)
    }

    pub fn configuration(&self, index: usize) -> Configuration {
        self.local_indices(index)
            .into_iter()
            .zip(&self.boxes)
            .map(|(i, b)| b.site_at(i).expect("local index in range"))
            .collect()
    }

    pub fn configurations(&self) -> Vec<Configuration> {
        (0..self.cardinality()).map(|i| self.configuration(i)).collect()
    }

    pub fn dims_label(&self) -> String {
        self.boxes
            .iter()
            .map(|b| b.dims_label())
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// `X(Lambda)`: union of the single-particle boxes, sorted.
pub fn projection_set(mbox: &MultiParticleBox) -> Vec<Site> {
    let set: BTreeSet<Site> = mbox.boxes.iter().flat_map(|b| b.sites()).collect();
    set.into_iter().collect()
}

/// `c(x, y)`: how many particles of the configuration sit on `y`.
pub fn occupation_coefficients(config: &[Site], y: &Site) -> usize {
    config.iter().filter(|x| *x == y).count()
}

/// All non-zero occupation coefficients of a configuration.
pub fn occupation_map(config: &[Site]) -> BTreeMap<Site, usize> {
    let mut out = BTreeMap::new();
    for x in config {
        *out.entry(x.clone()).or_insert(0) += 1;
    }
    out
}

/// Interaction energy `U(x_1, ..., x_N)`. All variants are symmetric in the
/// particle positions. Distances are lattice (l1) distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionPotential {
    Zero,
    /// `strength` when all particles share one site.
    HardCore { strength: f64 },
    /// `strength` when the largest pairwise distance is at most `range`.
    Cluster { strength: f64, range: u32 },
    /// `sum_{j<k} strength / (1 + |x_j - x_k|)`; infinite range.
    Coulomb { strength: f64 },
}

impl InteractionPotential {
    /// `Some(r)` for finite range, `None` for infinite range.
    pub fn range(&self) -> Option<u32> {
        match self {
            InteractionPotential::Zero | InteractionPotential::HardCore { .. } => Some(0),
            InteractionPotential::Cluster { range, .. } => Some(*range),
            InteractionPotential::Coulomb { .. } => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        true
    }

    pub fn evaluate(&self, config: &[Site]) -> f64 {
        let max_pair = || {
            let mut m = 0;
            for j in 0..config.len() {
                for k in j + 1..config.len() {
                    m = m.max(config[j].l1_distance(&config[k]));
                }
            }
            m
        };
        match self {
            InteractionPotential::Zero => 0.0,
            InteractionPotential::HardCore { strength } => {
                if max_pair() == 0 {
                    *strength
                } else {
                    0.0
                }
            }
            InteractionPotential::Cluster { strength, range } => {
                if max_pair() <= *range as i64 {
                    *strength
                } else {
                    0.0
                }
            }
            InteractionPotential::Coulomb { strength } => {
                let mut u = 0.0;
                for j in 0..config.len() {
                    for k in j + 1..config.len() {
                        u += strength / (1.0 + config[j].l1_distance(&config[k]) as f64);
                    }
                }
                u
            }
        }
    }
}

/// N-particle operator `sum_j (Delta^(j) + V(x_j)) + U(x)` on the product box.
/// Hopping moves exactly one particle by one unit step inside its own box.
pub fn assemble_multiparticle(
    mbox: &MultiParticleBox,
    field: &FieldSample,
    interaction: &InteractionPotential,
) -> Result<Hamiltonian> {
    // potential per particle, by local site index
    let local_potentials = mbox
        .boxes
        .iter()
        .map(|b| {
            b.sites()
                .into_iter()
                .map(|x| field.get(&x).ok_or(Error::MissingPotential(x)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let n = mbox.cardinality();
    let radices = mbox.radices();
    let mut strides = vec![1usize; radices.len()];
    for j in (0..radices.len().saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * radices[j + 1];
    }

    let mut diagonal = Vec::with_capacity(n);
    for index in 0..n {
        let local = mbox.local_indices(index);
        let v: f64 = local
            .iter()
            .enumerate()
            .map(|(j, &i)| local_potentials[j][i])
            .sum();
        let u = match interaction {
            InteractionPotential::Zero => 0.0,
            _ => interaction.evaluate(&mbox.configuration(index)),
        };
        diagonal.push(v + u);
    }

    let mut upper = Vec::new();
    for (j, b) in mbox.boxes.iter().enumerate() {
        for &(a, c, _) in &hopping_pairs(b) {
            // every configuration with particle j on local site a hops to c
            for index in 0..n {
                if (index / strides[j]) % radices[j] == a {
                    let target = index + (c - a) * strides[j];
                    upper.push((index, target, 1.0));
                }
            }
        }
    }

    let provenance = Provenance {
        description: format!("multiparticle box {}", mbox.dims_label()),
        model_id: Some(field.model_id().to_string()),
        seed: field.seed(),
        site_order: "lexicographic".into(),
    };
    Hamiltonian::from_parts(diagonal, upper, provenance)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistics {
    Bose,
    Fermi,
}

/// Orthonormal basis of the (anti)symmetric subspace: one vector per sorted
/// tuple of local indices, as sparse (configuration index, coefficient) lists.
pub fn symmetric_basis(
    mbox: &MultiParticleBox,
    statistics: Statistics,
) -> Result<Vec<Vec<(usize, f64)>>> {
    if !mbox.all_identical() {
        return Err(Error::NonIdenticalBoxes);
    }
    let n_sites = mbox.boxes[0].cardinality();
    let particles = mbox.particles();
    let mut basis = Vec::new();
    let mut tuple = vec![0usize; particles];
    loop {
        let sorted_ok = tuple.windows(2).all(|w| match statistics {
            Statistics::Bose => w[0] <= w[1],
            Statistics::Fermi => w[0] < w[1],
        });
        if sorted_ok {
            basis.push(symmetrized_vector(mbox, &tuple, statistics));
        }
        // odometer over all tuples
        let mut k = particles;
        loop {
            if k == 0 {
                return Ok(basis);
            }
            k -= 1;
            tuple[k] += 1;
            if tuple[k] < n_sites {
                break;
            }
            tuple[k] = 0;
        }
    }
}

fn symmetrized_vector(
    mbox: &MultiParticleBox,
    tuple: &[usize],
    statistics: Statistics,
) -> Vec<(usize, f64)> {
    let mut terms: BTreeMap<usize, f64> = BTreeMap::new();
    for (perm, sign) in permutations(tuple.len()) {
        let permuted: Vec<usize> = perm.iter().map(|&p| tuple[p]).collect();
        let idx = mbox.index_from_local(&permuted);
        let s = match statistics {
            Statistics::Bose => 1.0,
            Statistics::Fermi => sign,
        };
        match statistics {
            // each distinct permutation counted once
            Statistics::Bose => {
                terms.insert(idx, s);
            }
            Statistics::Fermi => {
                *terms.entry(idx).or_insert(0.0) += s;
            }
        }
    }
    let norm = terms.values().map(|c| c * c).sum::<f64>().sqrt();
    terms.into_iter().map(|(i, c)| (i, c / norm)).collect()
}

/// All permutations of `0..n` with their signs (Heap's algorithm).
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    out.push((a.clone(), sign));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            sign = -sign;
            out.push((a.clone(), sign));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Restriction of a multi-particle operator to the Bose (symmetric) or Fermi
/// (antisymmetric) subspace, expressed in the orthonormal symmetrized basis.
pub fn symmetrize_subspace(
    h: &Hamiltonian,
    statistics: Statistics,
    mbox: &MultiParticleBox,
) -> Result<Hamiltonian> {
    if h.dim() != mbox.cardinality() {
        return Err(Error::InvalidArgument(format!(
            "operator dimension {} does not match box cardinality {}",
            h.dim(),
            mbox.cardinality()
        )));
    }
    let basis = symmetric_basis(mbox, statistics)?;
    let n = h.dim();
    let m = basis.len();
    // H applied to every basis vector
    let images: Vec<Vec<f64>> = basis
        .iter()
        .map(|v| {
            let mut dense = vec![0.0; n];
            for &(i, c) in v {
                dense[i] = c;
            }
            h.apply(&dense)
        })
        .collect();
    let mut diagonal = Vec::with_capacity(m);
    let mut upper = Vec::new();
    for a in 0..m {
        for b in a..m {
            let value: f64 = basis[a].iter().map(|&(i, c)| c * images[b][i]).sum();
            if a == b {
                diagonal.push(value);
            } else if value != 0.0 {
                upper.push((a, b, value));
            }
        }
    }
    let mut provenance = h.provenance().clone();
    provenance.description = format!("{} ({:?} subspace)", provenance.description, statistics);
    Hamiltonian::from_parts(diagonal, upper, provenance)
}
