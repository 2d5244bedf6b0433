//! Two-way fixed-effects regression with cluster-robust inference.
//!
//! Estimation is the within estimator: site and month means are absorbed by
//! alternating-projection demeaning, then the slopes come from (weighted)
//! least squares on the transformed data. Standard errors are CR1
//! cluster-robust, clustered by site. Time-invariant regressors (region,
//! vertical, rank) are wiped out by site demeaning, so they are reported
//! from a companion specification that absorbs month effects only.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Pattern, Region, Vertical};

use super::build::PanelRow;

/// Critical value for the normal-approximation 95% CI.
pub const Z_95: f64 = 1.96;

/// Left-hand-side variable of a panel regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    /// Claim–UI alignment score.
    A,
    /// Monthly clause churn.
    Churn,
    /// 1 when a reject control is visible without scrolling.
    RejectVisible,
}

impl Response {
    pub fn value(&self, row: &PanelRow) -> Option<f64> {
        match self {
            Response::A => row.a,
            Response::Churn => row.churn,
            Response::RejectVisible => row.reject_visible(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Response::A => "A",
            Response::Churn => "churn",
            Response::RejectVisible => "reject_visible",
        }
    }
}

/// Right-hand-side variable. Pattern dummies are 1 for rows labeled with
/// that pattern and 0 otherwise — including unlabeled rows, which form the
/// omitted baseline category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    PatternDummy(Pattern),
    RegionIs(Region),
    VerticalIs(Vertical),
    Churn,
    LogRank,
}

impl Regressor {
    pub fn value(&self, row: &PanelRow) -> Option<f64> {
        match self {
            Regressor::PatternDummy(p) => {
                Some(if row.pattern_kind() == Some(*p) { 1.0 } else { 0.0 })
            }
            Regressor::RegionIs(r) => Some(if row.region == *r { 1.0 } else { 0.0 }),
            Regressor::VerticalIs(v) => Some(if row.vertical == *v { 1.0 } else { 0.0 }),
            Regressor::Churn => row.churn,
            Regressor::LogRank => Some((row.rank as f64).ln_1p()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Regressor::PatternDummy(p) => format!("pattern_{p}"),
            Regressor::RegionIs(r) => format!("region_{r}"),
            Regressor::VerticalIs(v) => format!("vertical_{v}"),
            Regressor::Churn => "churn".into(),
            Regressor::LogRank => "log_rank".into(),
        }
    }
}

/// One estimated coefficient with CR1 inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimate {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl CoefficientEstimate {
    pub(crate) fn new(name: String, estimate: f64, std_error: f64) -> Self {
        CoefficientEstimate {
            name,
            estimate,
            std_error,
            ci_lo: estimate - Z_95 * std_error,
            ci_hi: estimate + Z_95 * std_error,
        }
    }
}

/// Fixed-effect groups absorbed by the within transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorbedEffects {
    pub sites: usize,
    pub months: usize,
}

/// Full output of `twfe_regress`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub response: String,
    /// Time-varying coefficients from the two-way FE specification.
    pub within: Vec<CoefficientEstimate>,
    /// Time-invariant coefficients from the month-FE-only specification
    /// (empty when no time-invariant regressor was requested).
    pub time_invariant: Vec<CoefficientEstimate>,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub absorbed: AbsorbedEffects,
}

/// A fit produced by `cluster_ols`: coefficients plus their cluster-robust
/// covariance, shared by the TWFE and event-study front ends.
#[derive(Debug, Clone)]
pub(crate) struct ClusterFit {
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub n_obs: usize,
    pub n_clusters: usize,
}

impl ClusterFit {
    pub fn std_error(&self, j: usize) -> f64 {
        self.covariance[(j, j)].max(0.0).sqrt()
    }
}

const DEMEAN_TOL: f64 = 1e-11;
const DEMEAN_MAX_SWEEPS: usize = 10_000;

/// Removes weighted site and month means from every column by alternating
/// projections, iterating to convergence (exact in one sweep for balanced
/// panels).
pub(crate) fn demean_two_way(
    columns: &mut [Vec<f64>],
    sites: &[usize],
    months: &[usize],
    weights: &[f64],
    n_sites: usize,
    n_months: usize,
) {
    let mut site_w = vec![0.0; n_sites];
    let mut month_w = vec![0.0; n_months];
    for i in 0..weights.len() {
        site_w[sites[i]] += weights[i];
        month_w[months[i]] += weights[i];
    }
    for col in columns.iter_mut() {
        for _ in 0..DEMEAN_MAX_SWEEPS {
            let mut shift = 0.0f64;
            let mut site_sum = vec![0.0; n_sites];
            for (i, v) in col.iter().enumerate() {
                site_sum[sites[i]] += weights[i] * v;
            }
            for (i, v) in col.iter_mut().enumerate() {
                let m = site_sum[sites[i]] / site_w[sites[i]];
                *v -= m;
                shift = shift.max(m.abs());
            }
            let mut month_sum = vec![0.0; n_months];
            for (i, v) in col.iter().enumerate() {
                month_sum[months[i]] += weights[i] * v;
            }
            for (i, v) in col.iter_mut().enumerate() {
                let m = month_sum[months[i]] / month_w[months[i]];
                *v -= m;
                shift = shift.max(m.abs());
            }
            if shift < DEMEAN_TOL {
                break;
            }
        }
    }
}

/// Removes weighted month means only (exact single projection).
pub(crate) fn demean_by_month(
    columns: &mut [Vec<f64>],
    months: &[usize],
    weights: &[f64],
    n_months: usize,
) {
    let mut month_w = vec![0.0; n_months];
    for (i, &w) in weights.iter().enumerate() {
        month_w[months[i]] += w;
    }
    for col in columns.iter_mut() {
        let mut month_sum = vec![0.0; n_months];
        for (i, v) in col.iter().enumerate() {
            month_sum[months[i]] += weights[i] * v;
        }
        for (i, v) in col.iter_mut().enumerate() {
            *v -= month_sum[months[i]] / month_w[months[i]];
        }
    }
}

/// Weighted least squares with CR1 cluster-robust covariance.
///
/// `dof_absorbed` counts parameters soaked up before this fit (fixed
/// effects plus intercept), entering the small-sample correction
/// `G/(G−1)·(N−1)/(N−K)` with `K = k + dof_absorbed`.
pub(crate) fn cluster_ols(
    y: &[f64],
    x_cols: &[Vec<f64>],
    weights: &[f64],
    clusters: &[usize],
    n_clusters: usize,
    dof_absorbed: usize,
) -> Result<ClusterFit> {
    let n = y.len();
    let k = x_cols.len();
    if k == 0 {
        return Err(Error::Validation("no regressors to estimate".into()));
    }
    let total_params = k + dof_absorbed;
    if n <= total_params {
        return Err(Error::Validation(format!(
            "{n} observations cannot identify {total_params} parameters"
        )));
    }
    if n_clusters < 2 {
        return Err(Error::Validation(
            "cluster-robust inference needs at least 2 clusters".into(),
        ));
    }

    let mut xtx = DMatrix::zeros(k, k);
    let mut xty = DVector::zeros(k);
    for i in 0..n {
        let w = weights[i];
        for a in 0..k {
            let xa = x_cols[a][i];
            xty[a] += w * xa * y[i];
            for b in a..k {
                xtx[(a, b)] += w * xa * x_cols[b][i];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }

    let chol = xtx.clone().cholesky().ok_or_else(|| {
        Error::Computation(
            "singular normal equations: regressors are collinear after the within transformation"
                .into(),
        )
    })?;
    let beta = chol.solve(&xty);

    // Cluster scores: s_g = Σ_{i∈g} w_i · x_i · e_i.
    let mut scores = vec![DVector::<f64>::zeros(k); n_clusters];
    for i in 0..n {
        let mut e = y[i];
        for a in 0..k {
            e -= beta[a] * x_cols[a][i];
        }
        let we = weights[i] * e;
        for a in 0..k {
            scores[clusters[i]][a] += we * x_cols[a][i];
        }
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in &scores {
        meat += s * s.transpose();
    }
    let bread = chol.inverse();
    let g = n_clusters as f64;
    let nn = n as f64;
    let cr1 = (g / (g - 1.0)) * ((nn - 1.0) / (nn - total_params as f64));
    let covariance = cr1 * &bread * meat * &bread;

    Ok(ClusterFit {
        coefficients: beta.iter().copied().collect(),
        covariance,
        n_obs: n,
        n_clusters,
    })
}

/// Rows selected for estimation plus their dense index maps.
pub(crate) struct Sample {
    pub y: Vec<f64>,
    pub x_cols: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub sites: Vec<usize>,
    pub months: Vec<usize>,
    pub n_sites: usize,
    pub n_months: usize,
}

/// Extracts the estimation sample: rows where the response and every
/// regressor are present. Site/month labels are re-indexed densely.
pub(crate) fn extract_sample(
    panel: &[PanelRow],
    response: Response,
    regressors: &[Regressor],
) -> Result<Sample> {
    let mut site_ids: BTreeMap<&str, usize> = BTreeMap::new();
    let mut month_ids: BTreeMap<u32, usize> = BTreeMap::new();
    let mut y = Vec::new();
    let mut x_cols = vec![Vec::new(); regressors.len()];
    let mut weights = Vec::new();
    let mut sites = Vec::new();
    let mut months = Vec::new();

    'rows: for row in panel {
        let Some(resp) = response.value(row) else {
            continue;
        };
        let mut xs = Vec::with_capacity(regressors.len());
        for reg in regressors {
            match reg.value(row) {
                Some(v) => xs.push(v),
                None => continue 'rows,
            }
        }
        if !(row.weight > 0.0) {
            return Err(Error::Validation(format!(
                "row {}/{} has non-positive weight {}",
                row.site_id, row.month, row.weight
            )));
        }
        let next_site = site_ids.len();
        let site = *site_ids.entry(row.site_id.as_str()).or_insert(next_site);
        let next_month = month_ids.len();
        let month = *month_ids.entry(row.month).or_insert(next_month);
        y.push(resp);
        for (col, v) in x_cols.iter_mut().zip(xs) {
            col.push(v);
        }
        weights.push(row.weight);
        sites.push(site);
        months.push(month);
    }

    if site_ids.len() < 2 || month_ids.len() < 2 {
        return Err(Error::Validation(format!(
            "panel regression needs at least 2 sites and 2 months in-sample, got {} and {}",
            site_ids.len(),
            month_ids.len()
        )));
    }
    Ok(Sample {
        y,
        x_cols,
        weights,
        sites,
        months,
        n_sites: site_ids.len(),
        n_months: month_ids.len(),
    })
}

/// True when a column never varies within any site of the sample.
fn is_time_invariant(col: &[f64], sites: &[usize], n_sites: usize) -> bool {
    let mut first: Vec<Option<f64>> = vec![None; n_sites];
    for (i, &v) in col.iter().enumerate() {
        match first[sites[i]] {
            None => first[sites[i]] = Some(v),
            Some(f) if f != v => return false,
            Some(_) => {}
        }
    }
    true
}

/// Two-way fixed-effects regression of `response` on `regressors`,
/// clustered by site.
///
/// Time-varying regressors are estimated with site and month effects
/// absorbed. Regressors that never vary within a site cannot ride along —
/// site demeaning annihilates them — so they are estimated in a companion
/// specification that absorbs month effects only (all regressors included)
/// and reported separately.
pub fn twfe_regress(
    panel: &[PanelRow],
    response: Response,
    regressors: &[Regressor],
) -> Result<RegressionResult> {
    if regressors.is_empty() {
        return Err(Error::Validation("no regressors requested".into()));
    }
    let sample = extract_sample(panel, response, regressors)?;

    let mut varying_idx = Vec::new();
    let mut invariant_idx = Vec::new();
    for (j, col) in sample.x_cols.iter().enumerate() {
        if is_time_invariant(col, &sample.sites, sample.n_sites) {
            invariant_idx.push(j);
        } else {
            varying_idx.push(j);
        }
    }

    let mut within = Vec::new();
    if !varying_idx.is_empty() {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(varying_idx.len() + 1);
        cols.push(sample.y.clone());
        for &j in &varying_idx {
            cols.push(sample.x_cols[j].clone());
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
        for (pos, &j) in varying_idx.iter().enumerate() {
            within.push(CoefficientEstimate::new(
                regressors[j].name(),
                fit.coefficients[pos],
                fit.std_error(pos),
            ));
        }
    }

    let mut time_invariant = Vec::new();
    if !invariant_idx.is_empty() {
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(sample.x_cols.len() + 1);
        cols.push(sample.y.clone());
        for col in &sample.x_cols {
            cols.push(col.clone());
        }
        demean_by_month(&mut cols, &sample.months, &sample.weights, sample.n_months);
        let y_dm = cols.remove(0);
        let fit = cluster_ols(
            &y_dm,
            &cols,
            &sample.weights,
            &sample.sites,
            sample.n_sites,
            sample.n_months,
        )?;
        for &j in &invariant_idx {
            time_invariant.push(CoefficientEstimate::new(
                regressors[j].name(),
                fit.coefficients[j],
                fit.std_error(j),
            ));
        }
    }

    Ok(RegressionResult {
        response: response.name().into(),
        within,
        time_invariant,
        n_obs: sample.y.len(),
        n_clusters: sample.n_sites,
        absorbed: AbsorbedEffects {
            sites: sample.n_sites,
            months: sample.n_months,
        },
    })
}
