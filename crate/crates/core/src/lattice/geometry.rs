use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of Z^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1_distance(&self, other: &Site) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn linf_distance(&self, other: &Site) -> i64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn euclidean_distance(&self, other: &Site) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| ((a - b) as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<i64>> for Site {
    fn from(v: Vec<i64>) -> Self {
        Site(v)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, x) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Axis-aligned finite box `[lower_1, upper_1] x ... x [lower_d, upper_d]` in Z^d.
///
/// Sites are indexed in lexicographic order (first axis most significant), and
/// that order is the canonical row/column order of every assembled operator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct LatticeBox {
    lower: Vec<i64>,
    upper: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRepr {
    lower: Vec<i64>,
    upper: Vec<i64>,
}

impl TryFrom<BoxRepr> for LatticeBox {
    type Error = Error;
    fn try_from(r: BoxRepr) -> Result<Self> {
        LatticeBox::new(r.lower, r.upper)
    }
}

impl From<LatticeBox> for BoxRepr {
    fn from(b: LatticeBox) -> Self {
        BoxRepr {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl LatticeBox {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBox("dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidBox(format!(
                "corner dimensions differ ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(k) = (0..lower.len()).find(|&k| lower[k] > upper[k]) {
            return Err(Error::InvalidBox(format!(
                "lower {} > upper {} on axis {k}",
                lower[k], upper[k]
            )));
        }
        Ok(LatticeBox { lower, upper })
    }

    /// `[-l, l]^d`.
    pub fn centered(dim: usize, l: i64) -> Result<Self> {
        Self::new(vec![-l; dim], vec![l; dim])
    }

    /// The 1D chain `{0, ..., n-1}`.
    pub fn chain(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidBox("chain length must be positive".into()));
        }
        Self::new(vec![0], vec![n as i64 - 1])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    pub fn side_lengths(&self) -> Vec<usize> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l + 1) as usize)
            .collect()
    }

    pub fn cardinality(&self) -> usize {
        self.side_lengths().iter().product()
    }

    pub fn contains(&self, site: &Site) -> bool {
        site.dim() == self.dim()
            && site
                .0
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| l <= x && x <= u)
    }

    pub fn index_of(&self, site: &Site) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut idx = 0usize;
        for (k, len) in self.side_lengths().into_iter().enumerate() {
            idx = idx * len + (site.0[k] - self.lower[k]) as usize;
        }
        Some(idx)
    }

    pub fn site_at(&self, mut index: usize) -> Option<Site> {
        if index >= self.cardinality() {
            return None;
        }
        let lens = self.side_lengths();
        let mut coords = vec![0i64; self.dim()];
        for k in (0..self.dim()).rev() {
            coords[k] = self.lower[k] + (index % lens[k]) as i64;
            index /= lens[k];
        }
        Some(Site(coords))
    }

    /// All sites in lexicographic order; position in the vector is the site index.
    pub fn sites(&self) -> Vec<Site> {
        (0..self.cardinality())
            .map(|i| self.site_at(i).expect("index in range"))
            .collect()
    }

    /// Nearest neighbours (`|y - x|_1 = 1`) of `site` that lie in the box.
    pub fn neighbors(&self, site: &Site) -> Result<Vec<Site>> {
        if !self.contains(site) {
            return Err(Error::SiteOutsideBox(site.clone()));
        }
        let mut out = Vec::with_capacity(2 * self.dim());
        for k in 0..self.dim() {
            for step in [-1i64, 1] {
                let mut y = site.clone();
                y.0[k] += step;
                if self.contains(&y) {
                    out.push(y);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// The box grown by `margin` sites on every side.
    pub fn expanded(&self, margin: i64) -> Result<Self> {
        Self::new(
            self.lower.iter().map(|l| l - margin).collect(),
            self.upper.iter().map(|u| u + margin).collect(),
        )
    }

    /// Compact label such as `21` or `5x5`.
    pub fn dims_label(&self) -> String {
        self.side_lengths()
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

pub fn enumerate_sites(lattice: &LatticeBox) -> Vec<Site> {
    lattice.sites()
}

pub fn neighbors_in_box(site: &Site, lattice: &LatticeBox) -> Result<Vec<Site>> {
    lattice.neighbors(site)
}
