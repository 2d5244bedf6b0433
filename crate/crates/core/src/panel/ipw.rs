//! Inverse-probability weighting for banner-surfacing selection.
//!
//! A logistic model of the surfacing indicator on site covariates yields
//! p̂; surfaced rows are weighted by 1/p̂ (floored at 0.01, with a count of
//! clips) so the weighted surfaced sample matches the full panel on the
//! covariates. Balance is reported as standardized mean differences of the
//! surfaced sample against the full panel, before and after weighting.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::build::PanelRow;
use super::regress::Regressor;

/// Probabilities below this are clipped before weighting.
pub const PROPENSITY_FLOOR: f64 = 0.01;

/// Balance of one covariate: surfaced sample vs. the full panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateBalance {
    pub name: String,
    pub smd_before: f64,
    pub smd_after: f64,
}

/// Balance diagnostics for the fitted weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub covariates: Vec<CovariateBalance>,
    pub max_smd_before: f64,
    pub max_smd_after: f64,
    /// Number of surfaced rows whose p̂ was clipped at the floor.
    pub clipped: usize,
    pub n_surfaced: usize,
    pub n_total: usize,
}

/// Weights aligned with the input panel (0 for non-surfaced rows) plus the
/// balance report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpwResult {
    pub weights: Vec<f64>,
    pub balance: BalanceReport,
}

/// Fits the surfacing model and computes 1/p̂ weights for surfaced rows.
///
/// Every covariate must be present on every row — surfacing weights are
/// about selection into observation, so the covariates must themselves be
/// observable unconditionally (region, vertical, rank). With no surfaced
/// rows the weights are undefined; with nothing *but* surfaced rows the
/// model degenerates and every weight is exactly 1.
pub fn ipw_weights(panel: &[PanelRow], covariates: &[Regressor]) -> Result<IpwResult> {
    if panel.is_empty() {
        return Err(Error::Validation("cannot weight an empty panel".into()));
    }
    let n = panel.len();
    let mut x = DMatrix::zeros(n, covariates.len() + 1);
    let mut y = DVector::zeros(n);
    for (i, row) in panel.iter().enumerate() {
        x[(i, 0)] = 1.0;
        for (j, cov) in covariates.iter().enumerate() {
            x[(i, j + 1)] = cov.value(row).ok_or_else(|| {
                Error::Validation(format!(
                    "covariate {} absent on row {}/{}",
                    cov.name(),
                    row.site_id,
                    row.month
                ))
            })?;
        }
        y[i] = if row.banner_surfaced { 1.0 } else { 0.0 };
    }
    let n_surfaced = panel.iter().filter(|r| r.banner_surfaced).count();
    if n_surfaced == 0 {
        return Err(Error::Validation(
            "no surfaced rows: IPW weights are undefined".into(),
        ));
    }

    let mut weights = vec![0.0; n];
    let mut clipped = 0usize;
    if n_surfaced == n {
        // Degenerate always-surfaced sample: p̂ ≡ 1, weights exactly 1.
        weights.fill(1.0);
    } else {
        let beta = fit_logistic(&x, &y)?;
        for (i, row) in panel.iter().enumerate() {
            if !row.banner_surfaced {
                continue;
            }
            let eta: f64 = (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum();
            let mut p = sigmoid(eta);
            if p < PROPENSITY_FLOOR {
                p = PROPENSITY_FLOOR;
                clipped += 1;
            }
            weights[i] = 1.0 / p;
        }
    }

    let mut covariate_balance = Vec::with_capacity(covariates.len());
    for (j, cov) in covariates.iter().enumerate() {
        let full: Vec<f64> = (0..n).map(|i| x[(i, j + 1)]).collect();
        let surfaced_unweighted: Vec<(f64, f64)> = panel
            .iter()
            .enumerate()
            .filter(|(_, r)| r.banner_surfaced)
            .map(|(i, _)| (x[(i, j + 1)], 1.0))
            .collect();
        let surfaced_weighted: Vec<(f64, f64)> = panel
            .iter()
            .enumerate()
            .filter(|(_, r)| r.banner_surfaced)
            .map(|(i, _)| (x[(i, j + 1)], weights[i]))
            .collect();
        covariate_balance.push(CovariateBalance {
            name: cov.name(),
            smd_before: smd(&surfaced_unweighted, &full),
            smd_after: smd(&surfaced_weighted, &full),
        });
    }
    let max = |f: fn(&CovariateBalance) -> f64| {
        covariate_balance
            .iter()
            .map(f)
            .fold(0.0f64, f64::max)
    };

    Ok(IpwResult {
        weights,
        balance: BalanceReport {
            max_smd_before: max(|c| c.smd_before),
            max_smd_after: max(|c| c.smd_after),
            covariates: covariate_balance,
            clipped,
            n_surfaced,
            n_total: n,
        },
    })
}

/// Multiplies surfaced rows' panel weights by the fitted IPW weights.
pub fn apply_ipw(panel: &mut [PanelRow], ipw: &IpwResult) -> Result<()> {
    if panel.len() != ipw.weights.len() {
        return Err(Error::Validation(format!(
            "weight vector length {} does not match panel length {}",
            ipw.weights.len(),
            panel.len()
        )));
    }
    for (row, &w) in panel.iter_mut().zip(&ipw.weights) {
        if row.banner_surfaced {
            row.weight *= w;
        }
    }
    Ok(())
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Newton–Raphson (IRLS) logistic fit with a tiny ridge for numerical
/// safety. Separation cannot run away: iterations are capped and the
/// fitted probabilities saturate harmlessly.
fn fit_logistic(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let k = x.ncols();
    let mut beta = DVector::zeros(k);
    for _ in 0..100 {
        let eta = x * &beta;
        let p: DVector<f64> = eta.map(sigmoid);
        let w: DVector<f64> = p.map(|pi| (pi * (1.0 - pi)).max(1e-10));
        let mut xtwx = DMatrix::zeros(k, k);
        let mut score = DVector::zeros(k);
        for i in 0..x.nrows() {
            let r = y[i] - p[i];
            for a in 0..k {
                score[a] += x[(i, a)] * r;
                for b in a..k {
                    xtwx[(a, b)] += w[i] * x[(i, a)] * x[(i, b)];
                }
            }
        }
        for a in 0..k {
            xtwx[(a, a)] += 1e-10;
            for b in 0..a {
                xtwx[(a, b)] = xtwx[(b, a)];
            }
        }
        let step = xtwx
            .cholesky()
            .ok_or_else(|| Error::Computation("singular information matrix in IPW fit".into()))?
            .solve(&score);
        beta += &step;
        if step.amax() < 1e-10 {
            break;
        }
    }
    Ok(beta)
}

/// Standardized mean difference of a (possibly weighted) sample against the
/// full-panel target, scaled by the full-panel standard deviation.
fn smd(sample: &[(f64, f64)], full: &[f64]) -> f64 {
    let wsum: f64 = sample.iter().map(|(_, w)| w).sum();
    if wsum <= 0.0 || full.is_empty() {
        return 0.0;
    }
    let sample_mean: f64 = sample.iter().map(|(v, w)| v * w).sum::<f64>() / wsum;
    let full_mean: f64 = full.iter().sum::<f64>() / full.len() as f64;
    let var: f64 =
        full.iter().map(|v| (v - full_mean).powi(2)).sum::<f64>() / full.len() as f64;
    if var <= 0.0 {
        return 0.0;
    }
    (sample_mean - full_mean).abs() / var.sqrt()
}
