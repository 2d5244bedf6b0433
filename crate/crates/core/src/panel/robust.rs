//! Robustness machinery: winsorizing, rank weights, the MNAR worst-case
//! gap bound, classifier-error propagation, and box-plot summaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{derive_seed, median, quantile};
use crate::types::{LabelSource, Pattern, PatternLabel, Region};

use super::build::PanelRow;
use super::regress::{twfe_regress, Regressor, Response};

/// Clamps the `k` smallest values up to the (k+1)-th order statistic and
/// the `k'` largest down, with `k = ⌊n·pct/100⌋` per side. Length and order
/// are preserved.
pub fn winsorize(values: &[f64], lower_pct: f64, upper_pct: f64) -> Result<Vec<f64>> {
    if !(0.0..=100.0).contains(&lower_pct) || !(0.0..=100.0).contains(&upper_pct) {
        return Err(Error::Validation(format!(
            "winsorize percentiles must lie in [0, 100], got ({lower_pct}, {upper_pct})"
        )));
    }
    if lower_pct >= upper_pct {
        return Err(Error::Validation(format!(
            "winsorize needs lower < upper, got ({lower_pct}, {upper_pct})"
        )));
    }
    let n = values.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k_low = ((n as f64) * lower_pct / 100.0).floor() as usize;
    let k_high = ((n as f64) * (100.0 - upper_pct) / 100.0).floor() as usize;
    let lo = sorted[k_low.min(n - 1)];
    let hi = sorted[n - 1 - k_high.min(n - 1)];
    Ok(values.iter().map(|&v| v.clamp(lo, hi)).collect())
}

/// Popularity weights: w ∝ 1/log2(rank+1), normalized to mean 1 so
/// weighted and unweighted sample sizes stay comparable.
pub fn rank_weights(ranks: &[u32]) -> Vec<f64> {
    if ranks.is_empty() {
        return Vec::new();
    }
    let raw: Vec<f64> = ranks
        .iter()
        .map(|&r| 1.0 / ((r.max(1) as f64) + 1.0).log2())
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    raw.into_iter().map(|w| w / mean).collect()
}

/// Sets each row's analysis weight from its rank.
pub fn apply_rank_weights(panel: &mut [PanelRow]) {
    let ranks: Vec<u32> = panel.iter().map(|r| r.rank).collect();
    for (row, w) in panel.iter_mut().zip(rank_weights(&ranks)) {
        row.weight = w;
    }
}

/// Worst-case sensitivity of a between-region median-A gap to
/// missing-not-at-random banner surfacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnarBound {
    pub group_hi: Region,
    pub group_lo: Region,
    pub observed_gap: f64,
    pub worst_case_gap: f64,
    /// observed − worst-case: how much of the gap adversarial imputation
    /// can eat.
    pub shrink: f64,
}

/// Recomputes the median-A gap after assigning every non-surfaced row the
/// group-adverse extreme (0 for the higher-median group, 1 for the lower).
/// Rows with no score at all (no policy) stay excluded throughout.
pub fn mnar_gap_bound(panel: &[PanelRow], group_a: Region, group_b: Region) -> Result<MnarBound> {
    if group_a == group_b {
        return Err(Error::Validation("MNAR bound needs two distinct groups".into()));
    }
    let observed = |g: Region| -> Vec<f64> {
        panel
            .iter()
            .filter(|r| r.region == g && r.banner_surfaced)
            .filter_map(|r| r.a)
            .collect()
    };
    let med_a = median(&observed(group_a))
        .ok_or_else(|| Error::Validation(format!("no surfaced scored rows in {group_a}")))?;
    let med_b = median(&observed(group_b))
        .ok_or_else(|| Error::Validation(format!("no surfaced scored rows in {group_b}")))?;
    let (hi, lo, observed_gap) = if med_a >= med_b {
        (group_a, group_b, med_a - med_b)
    } else {
        (group_b, group_a, med_b - med_a)
    };

    let adversarial = |g: Region, fill: f64| -> Vec<f64> {
        panel
            .iter()
            .filter(|r| r.region == g && r.a.is_some())
            .map(|r| if r.banner_surfaced { r.a.unwrap() } else { fill })
            .collect()
    };
    let med_hi = median(&adversarial(hi, 0.0)).expect("group checked non-empty");
    let med_lo = median(&adversarial(lo, 1.0)).expect("group checked non-empty");
    let worst_case_gap = med_hi - med_lo;

    Ok(MnarBound {
        group_hi: hi,
        group_lo: lo,
        observed_gap,
        worst_case_gap,
        shrink: observed_gap - worst_case_gap,
    })
}

/// Builds a row-stochastic confusion matrix with the given per-class
/// recalls on the diagonal and the leak spread uniformly off-diagonal.
pub fn confusion_from_recalls(recalls: &[f64; Pattern::COUNT]) -> Result<[[f64; 5]; 5]> {
    let mut confusion = [[0.0; Pattern::COUNT]; Pattern::COUNT];
    for (i, &r) in recalls.iter().enumerate() {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Validation(format!(
                "recall out of range for class {i}: {r}"
            )));
        }
        let off = (1.0 - r) / (Pattern::COUNT - 1) as f64;
        for j in 0..Pattern::COUNT {
            confusion[i][j] = if i == j { r } else { off };
        }
    }
    Ok(confusion)
}

/// Classifier-error propagation summary.
///
/// Two complementary views are reported for each tracked statistic family:
/// the worst single draw (`max_abs_delta_*`, the spread of the bootstrap
/// distribution) and the displacement of the statistic under propagation
/// (`shift_*`, the mean across draws minus the baseline — the systematic
/// movement the error model induces, free of single-draw extremes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSummary {
    pub draws: usize,
    /// Max over draws and pattern classes of |Δ per-pattern median A|.
    pub max_abs_delta_median_a: f64,
    /// Max over draws and pattern coefficients of |Δ TWFE estimate|.
    pub max_abs_delta_coefficient: f64,
    /// Max over pattern classes of |mean-across-draws − baseline| median A.
    pub shift_median_a: f64,
    /// Max over pattern coefficients of |mean-across-draws − baseline|.
    pub shift_coefficient: f64,
    /// Per coefficient: fraction of draws whose estimate kept the baseline
    /// sign.
    pub sign_stability: Vec<(String, f64)>,
}

fn validate_confusion(confusion: &[[f64; 5]; 5]) -> Result<()> {
    for (i, row) in confusion.iter().enumerate() {
        if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Validation(format!(
                "confusion row {i} has entries outside [0, 1]"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "confusion row {i} sums to {sum}, not 1"
            )));
        }
    }
    Ok(())
}

fn sample_from_row(row: &[f64; 5], u: f64) -> Pattern {
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return Pattern::from_index(j).expect("index in range");
        }
    }
    Pattern::from_index(Pattern::COUNT - 1).expect("last index")
}

/// Per-pattern median of A over labeled, scored rows.
fn per_pattern_median_a(panel: &[PanelRow]) -> [Option<f64>; Pattern::COUNT] {
    let mut buckets: [Vec<f64>; Pattern::COUNT] = Default::default();
    for row in panel {
        if let (Some(p), Some(a)) = (row.pattern_kind(), row.a) {
            buckets[p.index()].push(a);
        }
    }
    let mut out = [None; Pattern::COUNT];
    for (slot, bucket) in out.iter_mut().zip(&buckets) {
        *slot = median(bucket);
    }
    out
}

/// How the pattern coefficients are fitted during propagation. The primary
/// specification is the full dummy set over the whole panel — one dummy
/// per pattern, identified against rows that carry a score but no label,
/// which label resampling never touches. When every scored row is labeled
/// that set is collinear after the within transformation, so the fit falls
/// back to contrasts against the first pattern on labeled rows only.
struct CoefficientSpec {
    regressors: Vec<Regressor>,
    labeled_only: bool,
}

impl CoefficientSpec {
    fn choose(panel: &[PanelRow]) -> Result<(Self, Vec<(String, f64)>)> {
        let full = CoefficientSpec {
            regressors: Pattern::ALL
                .iter()
                .map(|&p| Regressor::PatternDummy(p))
                .collect(),
            labeled_only: false,
        };
        if let Ok(estimates) = full.estimates(panel) {
            // A near-singular design can slip past the factorization with
            // exploded coefficients; treat that as unidentified too.
            if estimates.iter().all(|(_, e)| e.is_finite() && e.abs() < 1e6) {
                return Ok((full, estimates));
            }
        }
        let contrasts = CoefficientSpec {
            regressors: Pattern::ALL[1..]
                .iter()
                .map(|&p| Regressor::PatternDummy(p))
                .collect(),
            labeled_only: true,
        };
        let estimates = contrasts.estimates(panel)?;
        Ok((contrasts, estimates))
    }

    fn estimates(&self, panel: &[PanelRow]) -> Result<Vec<(String, f64)>> {
        let result = if self.labeled_only {
            let labeled: Vec<PanelRow> = panel
                .iter()
                .filter(|r| r.pattern.is_some())
                .cloned()
                .collect();
            twfe_regress(&labeled, Response::A, &self.regressors)?
        } else {
            twfe_regress(panel, Response::A, &self.regressors)?
        };
        Ok(result
            .within
            .into_iter()
            .map(|c| (c.name, c.estimate))
            .collect())
    }
}

/// Propagates classifier uncertainty: each draw resamples every labeled
/// row's pattern from the confusion row of its predicted class, then
/// recomputes the per-pattern median-A profile and the two-way FE pattern
/// coefficients. With the identity matrix every draw reproduces the
/// baseline exactly, so every reported perturbation is exactly zero.
pub fn propagate_confusion(
    panel: &[PanelRow],
    confusion: &[[f64; 5]; 5],
    draws: usize,
    seed: u64,
) -> Result<PerturbationSummary> {
    validate_confusion(confusion)?;
    if draws == 0 {
        return Err(Error::Validation("need at least one draw".into()));
    }
    let base_medians = per_pattern_median_a(panel);
    let (spec, base_coefs) = CoefficientSpec::choose(panel)?;

    let mut perturbed = panel.to_vec();
    let mut max_delta_median = 0.0f64;
    let mut max_delta_coef = 0.0f64;
    let mut median_delta_sums = [0.0f64; Pattern::COUNT];
    let mut median_delta_counts = [0usize; Pattern::COUNT];
    let mut coef_delta_sums = vec![0.0f64; base_coefs.len()];
    let mut sign_hits = vec![0usize; base_coefs.len()];

    for d in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, d as u64));
        for (row, orig) in perturbed.iter_mut().zip(panel) {
            if let Some(label) = &orig.pattern {
                let sampled = sample_from_row(&confusion[label.pattern.index()], rng.gen::<f64>());
                row.pattern = Some(PatternLabel::new(
                    sampled,
                    label.confidence,
                    LabelSource::Classifier,
                ));
            }
        }
        let medians = per_pattern_median_a(&perturbed);
        for (k, (base, draw)) in base_medians.iter().zip(&medians).enumerate() {
            if let (Some(b), Some(m)) = (base, draw) {
                let delta = m - b;
                max_delta_median = max_delta_median.max(delta.abs());
                median_delta_sums[k] += delta;
                median_delta_counts[k] += 1;
            }
        }
        let coefs = spec.estimates(&perturbed)?;
        for (j, ((name, base), (dname, draw))) in
            base_coefs.iter().zip(&coefs).enumerate()
        {
            debug_assert_eq!(name, dname);
            let delta = draw - base;
            max_delta_coef = max_delta_coef.max(delta.abs());
            coef_delta_sums[j] += delta;
            let same_sign = (base >= &0.0) == (draw >= &0.0);
            if same_sign {
                sign_hits[j] += 1;
            }
        }
    }

    let shift_median_a = median_delta_sums
        .iter()
        .zip(&median_delta_counts)
        .filter(|(_, &n)| n > 0)
        .map(|(&s, &n)| (s / n as f64).abs())
        .fold(0.0f64, f64::max);
    let shift_coefficient = coef_delta_sums
        .iter()
        .map(|&s| (s / draws as f64).abs())
        .fold(0.0f64, f64::max);

    Ok(PerturbationSummary {
        draws,
        max_abs_delta_median_a: max_delta_median,
        max_abs_delta_coefficient: max_delta_coef,
        shift_median_a,
        shift_coefficient,
        sign_stability: base_coefs
            .iter()
            .zip(sign_hits)
            .map(|((name, _), hits)| (name.clone(), hits as f64 / draws as f64))
            .collect(),
    })
}

/// Five-number box-plot summary with 1.5·IQR whiskers clamped to the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub lo_whisker: f64,
    pub hi_whisker: f64,
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let q1 = quantile(values, 0.25)?;
    let q3 = quantile(values, 0.75)?;
    let med = median(values)?;
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let lo_whisker = values
        .iter()
        .copied()
        .filter(|&v| v >= lo_fence)
        .fold(f64::INFINITY, f64::min);
    let hi_whisker = values
        .iter()
        .copied()
        .filter(|&v| v <= hi_fence)
        .fold(f64::NEG_INFINITY, f64::max);
    Some(BoxStats {
        n: values.len(),
        median: med,
        q1,
        q3,
        lo_whisker,
        hi_whisker,
    })
}
