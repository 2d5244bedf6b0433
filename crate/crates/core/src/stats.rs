//! Small shared numeric helpers: quantiles, percentile intervals, Cliff's
//! delta, and deterministic seed derivation.
//!
//! All helpers assume finite inputs; orderings use `f64::total_cmp`, so NaNs
//! would sort last rather than panic, but callers are expected to validate
//! upstream.

use rand::Rng;

use crate::error::{Error, Result};

/// Linear-interpolation quantile (the "type 7" convention: `h = (n-1)q`)
/// over an already sorted slice. Returns `None` on empty input.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let q = q.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Quantile over an unsorted slice (clones and sorts internally).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

/// Median via [`quantile`].
pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Unbiased sample variance (denominator `n - 1`). `None` when `n < 2`.
pub fn sample_variance(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some(ss / (values.len() - 1) as f64)
}

/// Population variance (denominator `n`). `None` on empty input.
pub fn population_variance(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some(ss / values.len() as f64)
}

/// Central percentile interval of a vector of bootstrap draws.
/// `level = 0.95` yields the (2.5%, 97.5%) quantile pair.
pub fn percentile_interval(draws: &[f64], level: f64) -> Option<(f64, f64)> {
    if draws.is_empty() || !(0.0..1.0).contains(&level) && level != 1.0 {
        return None;
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let lo = quantile_sorted(&sorted, alpha)?;
    let hi = quantile_sorted(&sorted, 1.0 - alpha)?;
    Some((lo, hi))
}

/// Cliff's delta: `(#{x > y} - #{x < y}) / (|x| * |y|)` over all cross pairs.
/// Positive values mean `x` tends to exceed `y`. Runs in
/// `O((n + m) log m)` by sorting the second sample.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Validation(
            "cliffs_delta requires two non-empty samples".into(),
        ));
    }
    let mut sorted_y = y.to_vec();
    sorted_y.sort_by(f64::total_cmp);
    let m = sorted_y.len();
    let mut net: i64 = 0;
    for &xi in x {
        // Number of y strictly below xi, and strictly above xi.
        let below = sorted_y.partition_point(|&v| v < xi);
        let not_above = sorted_y.partition_point(|&v| v <= xi);
        let above = m - not_above;
        net += below as i64 - above as i64;
    }
    Ok(net as f64 / (x.len() as f64 * m as f64))
}

/// Derives an independent child seed from a root seed and a stream index
/// using the splitmix64 finalizer. Stable across platforms.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `n` indices with replacement from `0..n` (one bootstrap resample).
pub fn bootstrap_indices(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_matches_linear_interpolation_convention() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), Some(1.0));
        assert_eq!(quantile(&xs, 1.0), Some(4.0));
        assert_eq!(quantile(&xs, 0.5), Some(2.5));
        // h = 0.75 -> 1 + 0.75*(2-1)
        assert_eq!(quantile(&xs, 0.25), Some(1.75));
        assert_eq!(quantile(&[10.0], 0.3), Some(10.0));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }

    #[test]
    fn variance_against_hand_computation() {
        // mean 2, squared deviations 2 -> sample var 1, population var 2/3.
        let xs = [1.0, 2.0, 3.0];
        assert!((sample_variance(&xs).unwrap() - 1.0).abs() < 1e-12);
        assert!((population_variance(&xs).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(sample_variance(&[5.0]), None);
    }

    #[test]
    fn percentile_interval_of_known_grid() {
        let draws: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let (lo, hi) = percentile_interval(&draws, 0.95).unwrap();
        // h = 0.025 * 999 = 24.975 and 0.975 * 999 = 974.025.
        assert!((lo - 24.975).abs() < 1e-9);
        assert!((hi - 974.025).abs() < 1e-9);
    }

    #[test]
    fn cliffs_delta_extremes_and_ties() {
        assert_eq!(
            cliffs_delta(&[1.0, 2.0, 3.0], &[0.0, 0.0]).unwrap(),
            1.0
        );
        assert_eq!(
            cliffs_delta(&[0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap(),
            -1.0
        );
        // Identical samples: every pair ties or cancels.
        assert_eq!(cliffs_delta(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        // Hand-counted mixed case: 4 greater, 4 less out of 8 pairs.
        assert_eq!(
            cliffs_delta(&[5.0, 6.0, 7.0, 8.0], &[1.0, 9.0]).unwrap(),
            0.0
        );
        assert!(cliffs_delta(&[], &[1.0]).is_err());
    }

    #[test]
    fn cliffs_delta_matches_naive_quadratic_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(1..30);
            let m = rng.gen_range(1..30);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..10) as f64).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(0..10) as f64).collect();
            let mut net = 0i64;
            for &a in &x {
                for &b in &y {
                    if a > b {
                        net += 1;
                    } else if a < b {
                        net -= 1;
                    }
                }
            }
            let oracle = net as f64 / (n * m) as f64;
            assert!((cliffs_delta(&x, &y).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(42, 1);
        let b = derive_seed(42, 2);
        let c = derive_seed(43, 1);
        assert_eq!(a, derive_seed(42, 1));
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
