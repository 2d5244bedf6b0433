//! Scenario specifications: every planted quantity of a synthetic corpus or
//! panel in one JSON-serializable struct. A spec plus its seed fully
//! determines the generated output.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::TreatmentGroup;
use crate::types::{Pattern, Region, Vertical};

/// A planted event: from `month` onward, rows in `group` shift their
/// alignment score by `effect_a` and their reject-visibility probability by
/// `effect_visibility`. Zero effects make a valid null scenario that keeps
/// the analysis configuration intact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub month: u32,
    pub group: TreatmentGroup,
    pub effect_a: f64,
    pub effect_visibility: f64,
}

/// Full scenario description. All probabilities live in [0, 1]; mixes sum
/// to 1. `validate` enforces feasibility: no planted effect may push a
/// probability or the deterministic part of a score outside [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub seed: u64,
    pub n_sites: usize,
    pub n_months: u32,
    /// Ordered region shares; sites are assigned by exact quota in order.
    pub region_mix: Vec<(Region, f64)>,
    /// Vertical shares; sampled per site (approximate mix).
    pub vertical_mix: Vec<(Vertical, f64)>,
    /// Per-region probability that surfacing fails at a banner-bearing
    /// site-month.
    pub surfacing_failure: Vec<(Region, f64)>,
    /// Logit-scale slope of surfacing success on standardized log rank.
    pub logrank_surfacing_slope: f64,
    /// Share of site-months with no consent banner at all (these rows stay
    /// unlabeled and carry no pattern effect).
    pub no_banner_share: f64,
    /// Initial pattern distribution, indexed like `Pattern::ALL`.
    pub pattern_mix: [f64; 5],
    /// Month-to-month probability that a site keeps its pattern.
    pub pattern_stickiness: f64,
    /// Additive pattern effects on A, indexed like `Pattern::ALL`.
    pub pattern_delta: [f64; 5],
    pub base_a: f64,
    /// Std deviation of persistent site intercepts in A.
    pub site_sigma: f64,
    /// Total linear drift of A across the observation window.
    pub month_trend: f64,
    /// Std deviation of the i.i.d. noise on A.
    pub noise_sigma: f64,
    /// Baseline probability that the reject control is visible.
    pub visibility_base: f64,
    /// Std deviation of persistent site intercepts in visibility.
    pub visibility_site_sigma: f64,
    pub event: Option<EventSpec>,
    /// Mean of the planted per-row churn values.
    pub churn_base: f64,
    pub churn_noise: f64,
    /// Monthly probability that a site rewrites its retention clause.
    pub rewrite_rate: f64,
    /// Months in which every site rewrites its sharing clause.
    pub rewrite_surge_months: Vec<u32>,
    /// Probability that a site omits its policy in a given month.
    pub policy_missing_rate: f64,
    /// Per-claim probability that a site makes that claim in its policy.
    pub claim_rate: f64,
    /// Probability that a site's non-pre-ticked banners keep all toggles off.
    pub default_off_rate: f64,
    /// Probability that a site offers a reopen/settings affordance.
    pub reopen_rate: f64,
    /// Probability that a surfaced site-month enters the gold set.
    pub gold_fraction: f64,
    /// Probability that a gold row carries a second coder.
    pub double_code_fraction: f64,
    /// Probability that the second coder disagrees with the first.
    pub coder_flip_rate: f64,
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::Validation(format!(
            "{name} must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

fn check_mix<T: std::fmt::Debug>(name: &str, mix: &[(T, f64)]) -> Result<()> {
    if mix.is_empty() {
        return Err(Error::Validation(format!("{name} must be non-empty")));
    }
    let mut sum = 0.0;
    for (item, share) in mix {
        check_prob(&format!("{name} share of {item:?}"), *share)?;
        sum += share;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "{name} shares sum to {sum}, not 1"
        )));
    }
    Ok(())
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::Validation("n_sites must be positive".into()));
        }
        if self.n_months == 0 {
            return Err(Error::Validation("n_months must be positive".into()));
        }
        check_mix("region_mix", &self.region_mix)?;
        check_mix("vertical_mix", &self.vertical_mix)?;
        for region in Region::ALL {
            if !self.surfacing_failure.iter().any(|(r, _)| *r == region)
                && self.region_mix.iter().any(|(r, s)| *r == region && *s > 0.0)
            {
                return Err(Error::Validation(format!(
                    "surfacing_failure missing an entry for {region}"
                )));
            }
        }
        for (region, p) in &self.surfacing_failure {
            check_prob(&format!("surfacing_failure[{region}]"), *p)?;
        }
        check_prob("no_banner_share", self.no_banner_share)?;
        let mix_sum: f64 = self.pattern_mix.iter().sum();
        if (mix_sum - 1.0).abs() > 1e-9 || self.pattern_mix.iter().any(|&p| p < 0.0) {
            return Err(Error::Validation(format!(
                "pattern_mix must be a distribution over {} classes",
                Pattern::COUNT
            )));
        }
        check_prob("pattern_stickiness", self.pattern_stickiness)?;
        for p in [
            ("churn_base", self.churn_base),
            ("rewrite_rate", self.rewrite_rate),
            ("policy_missing_rate", self.policy_missing_rate),
            ("claim_rate", self.claim_rate),
            ("default_off_rate", self.default_off_rate),
            ("reopen_rate", self.reopen_rate),
            ("gold_fraction", self.gold_fraction),
            ("double_code_fraction", self.double_code_fraction),
            ("coder_flip_rate", self.coder_flip_rate),
        ] {
            check_prob(p.0, p.1)?;
        }
        for sigma in [
            ("site_sigma", self.site_sigma),
            ("noise_sigma", self.noise_sigma),
            ("visibility_site_sigma", self.visibility_site_sigma),
            ("churn_noise", self.churn_noise),
        ] {
            if sigma.1 < 0.0 || !sigma.1.is_finite() {
                return Err(Error::Validation(format!(
                    "{} must be a non-negative finite number, got {}",
                    sigma.0, sigma.1
                )));
            }
        }
        if !self.logrank_surfacing_slope.is_finite() {
            return Err(Error::Validation(
                "logrank_surfacing_slope must be finite".into(),
            ));
        }
        for m in &self.rewrite_surge_months {
            if *m < 2 || *m > self.n_months {
                return Err(Error::Validation(format!(
                    "rewrite surge month {m} outside [2, {}]",
                    self.n_months
                )));
            }
        }

        // Feasibility: the deterministic part of A must stay inside [0, 1].
        let delta_hi = self.pattern_delta.iter().cloned().fold(0.0, f64::max);
        let delta_lo = self.pattern_delta.iter().cloned().fold(0.0, f64::min);
        let event_a = self.event.map(|e| e.effect_a).unwrap_or(0.0);
        let a_hi = self.base_a + delta_hi + self.month_trend.max(0.0) + event_a.max(0.0);
        let a_lo = self.base_a + delta_lo + self.month_trend.min(0.0) + event_a.min(0.0);
        if a_lo < 0.0 || a_hi > 1.0 {
            return Err(Error::Validation(format!(
                "infeasible spec: planted effects push A outside [0, 1] \
                 (deterministic range [{a_lo:.4}, {a_hi:.4}])"
            )));
        }
        // Feasibility: visibility probabilities, allowing ±4σ of the site
        // intercept before clamping would bite.
        let event_vis = self.event.map(|e| e.effect_visibility).unwrap_or(0.0);
        let vis_spread = 4.0 * self.visibility_site_sigma;
        let vis_hi = self.visibility_base + event_vis.max(0.0) + vis_spread;
        let vis_lo = self.visibility_base + event_vis.min(0.0) - vis_spread;
        if vis_lo < 0.0 || vis_hi > 1.0 {
            return Err(Error::Validation(format!(
                "infeasible spec: planted effects push reject-visibility \
                 shares outside [0, 1] (range [{vis_lo:.4}, {vis_hi:.4}])"
            )));
        }
        if let Some(event) = &self.event {
            if event.month < 2 || event.month > self.n_months {
                return Err(Error::Validation(format!(
                    "event month {} outside [2, {}]",
                    event.month, self.n_months
                )));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            serde_json::from_str(json).map_err(|e| Error::parse("scenario spec", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&raw)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::parse("scenario spec", e))
    }

    /// The default corpus-and-panel scenario: moderate size, every pipeline
    /// stage exercised, pattern effects ordered ACC > SW > MS > RH > PT,
    /// and a small mid-window event.
    pub fn reference() -> Self {
        ScenarioSpec {
            name: "reference".into(),
            seed: 424_242,
            n_sites: 400,
            n_months: 9,
            region_mix: vec![
                (Region::Eu, 0.45),
                (Region::UsCa, 0.30),
                (Region::Other, 0.25),
            ],
            vertical_mix: vec![
                (Vertical::News, 0.30),
                (Vertical::Retail, 0.30),
                (Vertical::Social, 0.20),
                (Vertical::Video, 0.20),
            ],
            surfacing_failure: vec![
                (Region::Eu, 0.10),
                (Region::UsCa, 0.16),
                (Region::Other, 0.13),
            ],
            logrank_surfacing_slope: 0.0,
            no_banner_share: 0.06,
            pattern_mix: [0.40, 0.20, 0.16, 0.12, 0.12],
            pattern_stickiness: 0.78,
            pattern_delta: [0.010, 0.018, 0.004, -0.014, -0.006],
            base_a: 0.62,
            site_sigma: 0.05,
            month_trend: 0.03,
            noise_sigma: 0.02,
            visibility_base: 0.55,
            visibility_site_sigma: 0.08,
            event: Some(EventSpec {
                month: 6,
                group: TreatmentGroup::Region(Region::Eu),
                effect_a: 0.02,
                effect_visibility: 0.06,
            }),
            churn_base: 0.05,
            churn_noise: 0.015,
            rewrite_rate: 0.08,
            rewrite_surge_months: vec![6],
            policy_missing_rate: 0.02,
            claim_rate: 0.55,
            default_off_rate: 0.35,
            reopen_rate: 0.80,
            gold_fraction: 0.07,
            double_code_fraction: 0.50,
            coder_flip_rate: 0.08,
        }
    }

    /// Panel scenario for fixed-effects recovery: no missingness beyond a
    /// banner-free baseline share, frequent pattern switching, and the
    /// published effect vector.
    pub fn twfe() -> Self {
        ScenarioSpec {
            name: "twfe".into(),
            seed: 7_001,
            n_sites: 200,
            n_months: 9,
            surfacing_failure: vec![
                (Region::Eu, 0.0),
                (Region::UsCa, 0.0),
                (Region::Other, 0.0),
            ],
            no_banner_share: 0.10,
            pattern_mix: [0.30, 0.22, 0.18, 0.15, 0.15],
            pattern_stickiness: 0.60,
            pattern_delta: [0.05, 0.08, 0.02, -0.06, -0.03],
            base_a: 0.55,
            site_sigma: 0.06,
            month_trend: 0.04,
            noise_sigma: 0.02,
            event: None,
            rewrite_surge_months: vec![],
            gold_fraction: 0.05,
            ..Self::reference()
        }
        .named("twfe")
    }

    /// The `twfe` scenario with the i.i.d. noise removed; site intercepts
    /// and the common trend stay (both are absorbed exactly).
    pub fn twfe_noiseless() -> Self {
        let mut spec = Self::twfe();
        spec.noise_sigma = 0.0;
        spec.named("twfe-noiseless")
    }

    /// Event-study scenario: a reject-visibility jump of `jump` for EU
    /// sites from month 5 on. `jump = 0` is the null configuration.
    pub fn did(jump: f64) -> Self {
        ScenarioSpec {
            name: if jump == 0.0 { "did-null" } else { "did" }.into(),
            seed: 11_003,
            n_sites: 2_000,
            n_months: 9,
            region_mix: vec![
                (Region::Eu, 0.50),
                (Region::UsCa, 0.30),
                (Region::Other, 0.20),
            ],
            surfacing_failure: vec![
                (Region::Eu, 0.0),
                (Region::UsCa, 0.0),
                (Region::Other, 0.0),
            ],
            no_banner_share: 0.0,
            pattern_delta: [0.0; 5],
            base_a: 0.60,
            site_sigma: 0.05,
            month_trend: 0.02,
            noise_sigma: 0.02,
            visibility_base: 0.05,
            visibility_site_sigma: 0.01,
            event: Some(EventSpec {
                month: 5,
                group: TreatmentGroup::Region(Region::Eu),
                effect_a: 0.0,
                effect_visibility: jump,
            }),
            rewrite_surge_months: vec![],
            ..Self::reference()
        }
    }

    /// Missingness scenario: the published per-region surfacing failure
    /// rates with a mild rank gradient, sized for balance diagnostics.
    pub fn ipw() -> Self {
        ScenarioSpec {
            name: "ipw".into(),
            seed: 13_007,
            n_sites: 2_000,
            n_months: 4,
            event: None,
            rewrite_surge_months: vec![],
            region_mix: vec![
                (Region::Eu, 0.40),
                (Region::UsCa, 0.35),
                (Region::Other, 0.25),
            ],
            surfacing_failure: vec![
                (Region::Eu, 0.19),
                (Region::UsCa, 0.48),
                (Region::Other, 0.43),
            ],
            logrank_surfacing_slope: 0.15,
            no_banner_share: 0.0,
            pattern_delta: [0.010, 0.018, 0.004, -0.014, -0.006],
            ..Self::reference()
        }
    }

    /// Looks up a preset by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "reference" => Ok(Self::reference()),
            "twfe" => Ok(Self::twfe()),
            "twfe-noiseless" => Ok(Self::twfe_noiseless()),
            "did" => Ok(Self::did(0.093)),
            "did-null" => Ok(Self::did(0.0)),
            "ipw" => Ok(Self::ipw()),
            other => Err(Error::Validation(format!(
                "unknown scenario preset {other:?}; known: reference, twfe, \
                 twfe-noiseless, did, did-null, ipw"
            ))),
        }
    }

    fn named(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }
}

/// A standalone step series with planted mean shifts, for change-point
/// checks: `levels[j]` holds from `starts[j]` (0 for the first segment) to
/// the next start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSeriesSpec {
    pub seed: u64,
    pub length: usize,
    /// (first index of segment, segment level); the first entry must start
    /// at 0, starts strictly increase.
    pub segments: Vec<(usize, f64)>,
    pub noise_sigma: f64,
}

impl StepSeriesSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length < 4 {
            return Err(Error::Validation(format!(
                "step series length {} below the minimum of 4",
                self.length
            )));
        }
        if self.segments.first().map(|(s, _)| *s) != Some(0) {
            return Err(Error::Validation(
                "step series segments must start at index 0".into(),
            ));
        }
        for pair in self.segments.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Validation(
                    "step series segment starts must strictly increase".into(),
                ));
            }
        }
        if self.segments.last().map(|(s, _)| *s).unwrap_or(0) >= self.length {
            return Err(Error::Validation(
                "step series segment start beyond series end".into(),
            ));
        }
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::Validation(
                "step series noise must be non-negative and finite".into(),
            ));
        }
        Ok(())
    }

    /// Indices of the planted change points (all segment starts except 0).
    pub fn change_points(&self) -> Vec<usize> {
        self.segments.iter().skip(1).map(|(s, _)| *s).collect()
    }

    /// 24-point series with two well-separated shifts.
    pub fn two_steps(seed: u64, noise_sigma: f64) -> Self {
        StepSeriesSpec {
            seed,
            length: 24,
            segments: vec![(0, 0.20), (8, 0.55), (16, 0.25)],
            noise_sigma,
        }
    }
}
