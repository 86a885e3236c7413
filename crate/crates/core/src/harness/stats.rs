use crate::error::{Error, Result};

const Z_95: f64 = 1.959963984540054;

/// Wilson score interval for `hits` out of `trials` at 95% or 99% level.
pub fn wilson_interval(hits: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidArgument("wilson interval needs trials > 0".into()));
    }
    if hits > trials {
        return Err(Error::InvalidArgument(format!("{hits} hits out of {trials} trials")));
    }
    let z = z_for_level(level)?;
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    Ok((low, high))
}

fn z_for_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level}")));
    }
    if (level - 0.95).abs() < 1e-12 {
        return Ok(Z_95);
    }
    Ok(crate::fields::quadrature::normal_quantile(0.5 + 0.5 * level))
}

/// Per-trial seed: a bijective 64-bit mixer applied to `root + golden * (index + 1)`,
/// so distinct indices under one root never collide.
pub fn derive_trial_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036995).abs() < 1e-5, "{hi}");
        let (lo, hi) = wilson_interval(100, 100, 0.95).unwrap();
        assert!((lo - (1.0 - 0.036995)).abs() < 1e-5);
        assert_eq!(hi, 1.0);
        let (lo, hi) = wilson_interval(50, 100, 0.95).unwrap();
        assert!((0.5 * (lo + hi) - 0.5).abs() < 1e-12);
        assert!(wilson_interval(0, 0, 0.95).is_err());
        assert!(wilson_interval(3, 2, 0.95).is_err());
    }

    #[test]
    fn wilson_other_level_is_wider() {
        let (a, b) = wilson_interval(30, 100, 0.95).unwrap();
        let (c, d) = wilson_interval(30, 100, 0.99).unwrap();
        assert!(c < a && d > b);
    }

    #[test]
    fn seeds_distinct() {
        let seeds: HashSet<u64> = (0..100_000).map(|i| derive_trial_seed(42, i)).collect();
        assert_eq!(seeds.len(), 100_000);
        assert_eq!(derive_trial_seed(42, 7), derive_trial_seed(42, 7));
        assert_ne!(derive_trial_seed(42, 0), derive_trial_seed(43, 0));
    }
}
