//! Difference-in-differences event study around a known event month.
//!
//! The design interacts treatment-group membership with relative-month
//! dummies (reference: the month before the event), absorbs site and month
//! effects, and clusters by site. Reported alongside the per-period path:
//! the average post-event coefficient (the level shift) and a joint Wald
//! test that all pre-event coefficients are zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::types::{Region, Vertical};

use super::build::PanelRow;
use super::regress::{cluster_ols, demean_two_way, extract_sample, CoefficientEstimate, Response};

/// Which rows count as treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentGroup {
    Region(Region),
    Vertical(Vertical),
}

impl TreatmentGroup {
    pub fn is_treated(&self, row: &PanelRow) -> bool {
        match self {
            TreatmentGroup::Region(r) => row.region == *r,
            TreatmentGroup::Vertical(v) => row.vertical == *v,
        }
    }

    pub fn name(&self) -> String {
        match self {
            TreatmentGroup::Region(r) => format!("region_{r}"),
            TreatmentGroup::Vertical(v) => format!("vertical_{v}"),
        }
    }
}

/// Event-study request: response, event timing, symmetric window width
/// (±`window` months), and the treated group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventStudyConfig {
    pub response: Response,
    pub event_month: u32,
    pub window: u32,
    pub group: TreatmentGroup,
}

/// One relative-month coefficient. The reference period (k = −1) is pinned
/// to zero by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCoefficient {
    pub relative_month: i64,
    pub estimate: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub reference: bool,
}

/// Full event-study output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStudyResult {
    pub response: String,
    pub group: String,
    pub event_month: u32,
    pub window: u32,
    pub coefficients: Vec<EventCoefficient>,
    /// Mean of the post-event coefficients with its cluster-robust SE.
    pub level_shift: CoefficientEstimate,
    pub pre_trend_stat: f64,
    pub pre_trend_df: usize,
    pub pre_trend_p: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
}

/// Estimates the event study. Every group×relative-month cell inside the
/// window must be populated.
pub fn did_estimate(panel: &[PanelRow], config: &EventStudyConfig) -> Result<EventStudyResult> {
    if config.window == 0 {
        return Err(Error::Validation("event window must be at least ±1".into()));
    }
    let w = config.window as i64;
    let event = config.event_month as i64;
    let in_window: Vec<&PanelRow> = panel
        .iter()
        .filter(|row| {
            let k = row.month as i64 - event;
            (-w..=w).contains(&k) && config.response.value(row).is_some()
        })
        .collect();

    // Populate the group×period grid before touching any linear algebra so
    // the error names the offending cell.
    for k in -w..=w {
        for treated in [false, true] {
            let hit = in_window.iter().any(|row| {
                row.month as i64 - event == k && config.group.is_treated(row) == treated
            });
            if !hit {
                return Err(Error::Validation(format!(
                    "empty cell in group×period grid: treated={treated}, relative month {k}"
                )));
            }
        }
    }

    // Relative-month interaction dummies, skipping the k = −1 reference.
    let ks: Vec<i64> = (-w..=w).filter(|&k| k != -1).collect();
    let owned: Vec<PanelRow> = in_window.iter().map(|r| (*r).clone()).collect();
    let sample = extract_sample(&owned, config.response, &[])?;
    debug_assert_eq!(sample.y.len(), owned.len());
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(ks.len() + 1);
    cols.push(sample.y.clone());
    for &k in &ks {
        let col: Vec<f64> = owned
            .iter()
            .map(|row| {
                let treated = config.group.is_treated(row);
                let rel = row.month as i64 - event;
                if treated && rel == k {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        cols.push(col);
    }
    demean_two_way(
        &mut cols,
        &sample.sites,
        &sample.months,
        &sample.weights,
        sample.n_sites,
        sample.n_months,
    );
    let y_dm = cols.remove(0);
    let fit = cluster_ols(
        &y_dm,
        &cols,
        &sample.weights,
        &sample.sites,
        sample.n_sites,
        sample.n_sites + sample.n_months - 1,
    )?;

    let mut coefficients = Vec::with_capacity(ks.len() + 1);
    for k in -w..=w {
        if k == -1 {
            coefficients.push(EventCoefficient {
                relative_month: -1,
                estimate: 0.0,
                std_error: 0.0,
                ci_lo: 0.0,
                ci_hi: 0.0,
                reference: true,
            });
            continue;
        }
        let j = ks.iter().position(|&kk| kk == k).expect("k enumerated");
        let est = CoefficientEstimate::new(format!("rel_{k}"), fit.coefficients[j], fit.std_error(j));
        coefficients.push(EventCoefficient {
            relative_month: k,
            estimate: est.estimate,
            std_error: est.std_error,
            ci_lo: est.ci_lo,
            ci_hi: est.ci_hi,
            reference: false,
        });
    }

    // Level shift: average of the post coefficients (k ≥ 0), with variance
    // aᵀVa from the joint cluster-robust covariance.
    let post_idx: Vec<usize> = ks
        .iter()
        .enumerate()
        .filter(|(_, &k)| k >= 0)
        .map(|(j, _)| j)
        .collect();
    let share = 1.0 / post_idx.len() as f64;
    let mut a = DVector::zeros(ks.len());
    for &j in &post_idx {
        a[j] = share;
    }
    let shift_est: f64 = post_idx.iter().map(|&j| fit.coefficients[j] * share).sum();
    let shift_var = (a.transpose() * &fit.covariance * &a)[(0, 0)].max(0.0);
    let level_shift = CoefficientEstimate::new("post_mean".into(), shift_est, shift_var.sqrt());

    // Joint pre-trend Wald test over k ≤ −2.
    let pre_idx: Vec<usize> = ks
        .iter()
        .enumerate()
        .filter(|(_, &k)| k <= -2)
        .map(|(j, _)| j)
        .collect();
    let (pre_trend_stat, pre_trend_df, pre_trend_p) = if pre_idx.is_empty() {
        (0.0, 0, 1.0)
    } else {
        let q = pre_idx.len();
        let mut gamma = DVector::zeros(q);
        let mut vsub = DMatrix::zeros(q, q);
        for (r, &jr) in pre_idx.iter().enumerate() {
            gamma[r] = fit.coefficients[jr];
            for (c, &jc) in pre_idx.iter().enumerate() {
                vsub[(r, c)] = fit.covariance[(jr, jc)];
            }
        }
        let chol = vsub.cholesky().ok_or_else(|| {
            Error::Computation("pre-trend covariance is singular; Wald test undefined".into())
        })?;
        let stat = (gamma.transpose() * chol.solve(&gamma))[(0, 0)].max(0.0);
        let dist = ChiSquared::new(q as f64)
            .map_err(|e| Error::Computation(format!("chi-squared setup: {e}")))?;
        (stat, q, 1.0 - dist.cdf(stat))
    };

    Ok(EventStudyResult {
        response: config.response.name().into(),
        group: config.group.name(),
        event_month: config.event_month,
        window: config.window,
        coefficients,
        level_shift,
        pre_trend_stat,
        pre_trend_df,
        pre_trend_p,
        n_obs: fit.n_obs,
        n_clusters: fit.n_clusters,
    })
}
