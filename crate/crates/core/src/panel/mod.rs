//! Longitudinal analytics: the site×month panel and everything computed
//! over it — prevalence, transitions, change points, fixed-effects and
//! event-study regressions, IPW reweighting, and robustness checks.

mod build;
mod changepoint;
mod did;
mod ipw;
mod regress;
mod robust;

pub use build::{build_panel, prevalence_series, transition_matrix, PanelRow, TransitionMatrix};
pub use changepoint::{default_penalty, detect_changepoints, MIN_SERIES_LEN};
pub use did::{
    did_estimate, EventCoefficient, EventStudyConfig, EventStudyResult, TreatmentGroup,
};
pub use ipw::{apply_ipw, ipw_weights, BalanceReport, CovariateBalance, IpwResult, PROPENSITY_FLOOR};
pub use regress::{
    twfe_regress, AbsorbedEffects, CoefficientEstimate, RegressionResult, Regressor, Response,
    Z_95,
};
pub use robust::{
    apply_rank_weights, box_stats, confusion_from_recalls, mnar_gap_bound, propagate_confusion,
    rank_weights, winsorize, BoxStats, MnarBound, PerturbationSummary,
};
