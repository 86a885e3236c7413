use std::collections::BTreeMap;
use std::io::Write;

use crate::lattice::Site;

/// One realization of a random potential on a finite set of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    values: BTreeMap<Site, f64>,
    seed: Option<u64>,
    model_id: String,
}

impl FieldSample {
    pub fn from_values(
        sites: Vec<Site>,
        values: Vec<f64>,
        seed: Option<u64>,
        model_id: impl Into<String>,
    ) -> Self {
        assert_eq!(sites.len(), values.len(), "one value per site");
        FieldSample {
            values: sites.into_iter().zip(values).collect(),
            seed,
            model_id: model_id.into(),
        }
    }

    pub fn constant(sites: Vec<Site>, value: f64) -> Self {
        let n = sites.len();
        Self::from_values(sites, vec![value; n], None, "constant")
    }

    pub fn get(&self, site: &Site) -> Option<f64> {
        self.values.get(site).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Sites in lexicographic order with their values.
    pub fn iter(&self) -> impl Iterator<Item = (&Site, f64)> {
        self.values.iter().map(|(s, v)| (s, *v))
    }

    /// Values at `sites`, in that order; `None` if any is missing.
    pub fn values_at(&self, sites: &[Site]) -> Option<Vec<f64>> {
        sites.iter().map(|s| self.get(s)).collect()
    }

    /// `V -> V + t` at every site.
    pub fn shifted(&self, t: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.values_mut() {
            *v += t;
        }
        out
    }

    /// Union with `other`; values of `other` win on overlapping sites.
    pub fn merged(&self, other: &FieldSample) -> Self {
        let mut out = self.clone();
        out.values
            .extend(other.values.iter().map(|(s, v)| (s.clone(), *v)));
        out
    }

    /// CSV dump: `x0,...,x{d-1},value`, one row per site.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.values.keys().next().map(|s| s.dim()).unwrap_or(0);
        let header: Vec<String> = (0..dim).map(|k| format!("x{k}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for (site, v) in &self.values {
            let coords: Vec<String> = site.0.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{}", coords.join(","), v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_dump() {
        let f = FieldSample::from_values(
            vec![Site(vec![1, 0]), Site(vec![0, 2])],
            vec![0.5, -1.25],
            Some(3),
            "m",
        );
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "x0,x1,value\n0,2,-1.25\n1,0,0.5\n"
        );
    }

    #[test]
    fn merge_and_shift() {
        let a = FieldSample::constant(vec![Site(vec![0]), Site(vec![1])], 1.0);
        let b = FieldSample::constant(vec![Site(vec![1]), Site(vec![2])], 2.0);
        let m = a.merged(&b).shifted(0.5);
        assert_eq!(m.values_at(&[Site(vec![0]), Site(vec![1]), Site(vec![2])]),
            Some(vec![1.5, 2.5, 2.5]));
        assert_eq!(m.values_at(&[Site(vec![9])]), None);
    }
}
