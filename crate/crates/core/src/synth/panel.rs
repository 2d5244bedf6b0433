//! Direct panel synthesis: renders [`SiteTruth`] into analysis-ready
//! [`PanelRow`]s without going through bundles, for effect-recovery checks
//! where the planted coefficients must be known exactly.

use serde::{Deserialize, Serialize};

use crate::claims::PredicateSet;
use crate::error::Result;
use crate::panel::PanelRow;
use crate::types::{LabelSource, Pattern, PatternLabel};

use super::sites::{generate_sites, SiteTruth};
use super::spec::ScenarioSpec;

/// A synthetic panel with its generating description attached, so
/// consumers read planted values from the echo instead of re-stating them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPanel {
    pub spec: ScenarioSpec,
    pub rows: Vec<PanelRow>,
}

/// Renders one site-month as the pipeline would observe it: labels and
/// predicates only for surfaced banners, scores only where a policy exists.
fn row_from_truth(site: &SiteTruth, m: &super::sites::MonthTruth) -> PanelRow {
    let pattern = (m.surfaced).then(|| {
        PatternLabel::new(m.pattern, 1.0, LabelSource::Classifier)
    });
    let predicates = m.surfaced.then(|| PredicateSet {
        default_off: site.default_off && m.pattern != Pattern::PreTicked,
        reject_all_visible: m.reject_visible,
        steps_to_reject_le2: m.pattern != Pattern::RejectHidden,
        reopen_affordance: site.reopen,
    });
    PanelRow {
        site_id: site.site_id.clone(),
        month: m.month,
        region: site.region,
        vertical: site.vertical,
        rank: site.rank,
        pattern,
        a: (!m.policy_missing).then_some(m.a),
        churn: if m.policy_missing { None } else { m.churn },
        predicates,
        banner_surfaced: m.surfaced,
        weight: 1.0,
    }
}

/// Generates the full panel for a scenario: one row per site-month, in
/// (site_id, month) order.
pub fn generate_panel(spec: &ScenarioSpec) -> Result<SyntheticPanel> {
    let sites = generate_sites(spec)?;
    let mut rows = Vec::with_capacity(sites.len() * spec.n_months as usize);
    for site in &sites {
        for m in &site.months {
            rows.push(row_from_truth(site, m));
        }
    }
    Ok(SyntheticPanel {
        spec: spec.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{twfe_regress, Regressor, Response};

    #[test]
    fn rows_cover_every_site_month_in_order() {
        let mut spec = ScenarioSpec::reference();
        spec.n_sites = 25;
        spec.n_months = 4;
        spec.event = None;
        spec.rewrite_surge_months = vec![];
        let panel = generate_panel(&spec).unwrap();
        assert_eq!(panel.rows.len(), 100);
        let mut keys: Vec<_> = panel
            .rows
            .iter()
            .map(|r| (r.site_id.clone(), r.month))
            .collect();
        let sorted = keys.clone();
        keys.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn unsurfaced_rows_carry_no_labels_or_predicates() {
        let spec = ScenarioSpec::ipw();
        let panel = generate_panel(&spec).unwrap();
        let mut unsurfaced = 0usize;
        for row in &panel.rows {
            if row.banner_surfaced {
                assert!(row.pattern.is_some());
                assert!(row.predicates.is_some());
                let label = row.pattern.as_ref().unwrap();
                assert_eq!(label.source, LabelSource::Classifier);
                assert_eq!(label.confidence, 1.0);
            } else {
                unsurfaced += 1;
                assert!(row.pattern.is_none());
                assert!(row.predicates.is_none());
            }
        }
        assert!(unsurfaced > 1000, "ipw scenario should hide many rows");
    }

    #[test]
    fn noiseless_panel_recovers_planted_deltas_exactly() {
        let spec = ScenarioSpec::twfe_noiseless();
        let panel = generate_panel(&spec).unwrap();
        let regressors: Vec<Regressor> =
            Pattern::ALL.iter().map(|&p| Regressor::PatternDummy(p)).collect();
        let fit = twfe_regress(&panel.rows, Response::A, &regressors).unwrap();
        for (pattern, want) in Pattern::ALL.iter().zip(spec.pattern_delta) {
            let got = fit
                .within
                .iter()
                .find(|c| c.name == format!("pattern_{pattern}"))
                .expect("every pattern estimated")
                .estimate;
            assert!(
                (got - want).abs() < 1e-8,
                "{pattern:?}: got {got}, planted {want}"
            );
        }
    }

    #[test]
    fn missing_policy_rows_have_no_score() {
        let mut spec = ScenarioSpec::reference();
        spec.n_sites = 80;
        spec.policy_missing_rate = 0.3;
        let panel = generate_panel(&spec).unwrap();
        let missing = panel.rows.iter().filter(|r| r.a.is_none()).count();
        assert!(missing > 0);
        for row in &panel.rows {
            if row.a.is_none() {
                assert!(row.churn.is_none());
            }
        }
    }
}
