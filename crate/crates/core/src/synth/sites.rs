//! Ground-truth site histories. All randomness for a scenario lives here:
//! every site gets its own deterministic RNG stream, and corpus/panel
//! rendering are pure functions of the resulting [`SiteTruth`] records, so a
//! serialized truth file fully describes what was planted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::Normal;

use crate::claims::ClaimSet;
use crate::error::Result;
use crate::types::{Pattern, Region, Vertical};

use super::spec::ScenarioSpec;

/// Policy template sections, in document order.
pub const SECTION_COUNT: usize = 7;
pub const SECTION_INTRO: usize = 0;
pub const SECTION_PURPOSE: usize = 1;
pub const SECTION_RETENTION: usize = 2;
pub const SECTION_SHARING: usize = 3;
pub const SECTION_LEGAL: usize = 4;
pub const SECTION_RIGHTS: usize = 5;
pub const SECTION_CONTACT: usize = 6;
/// Interchangeable phrasings per section; rewrites cycle through them.
pub const VARIANTS_PER_SECTION: u8 = 3;

/// Planted state of one site-month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthTruth {
    pub month: u32,
    /// Whether the site shows any consent banner this month. When false the
    /// pattern field is meaningless and no consent artifacts exist.
    pub has_banner: bool,
    /// Banner present but the capture failed; no consent artifacts exist.
    pub surfacing_failed: bool,
    /// Banner present and captured: consent artifacts exist.
    pub surfaced: bool,
    /// Underlying interface pattern (meaningful only with a banner).
    pub pattern: Pattern,
    /// Monthly reject-visibility draw; drives the panel-path response. The
    /// rendered corpus DOM ties visibility to the pattern template instead.
    pub reject_visible: bool,
    /// Planted alignment score for the panel path (corpus snapshots get
    /// their score from the rendered text and DOM instead).
    pub a: f64,
    /// Planted churn for the panel path; absent in the first month.
    pub churn: Option<f64>,
    /// True when this row falls under the scenario event.
    pub treated_post: bool,
    /// The policy document is absent from this month's bundle.
    pub policy_missing: bool,
    pub rewrote_retention: bool,
    pub rewrote_sharing: bool,
    /// Current phrasing variant of each policy section.
    pub section_variants: [u8; SECTION_COUNT],
    /// This surfaced month enters the gold label set.
    pub gold: bool,
    /// A second coder also labeled this gold row.
    pub double_coded: bool,
    /// The second coder's label, when present.
    pub coder_b_pattern: Option<Pattern>,
}

impl MonthTruth {
    /// The label a perfect annotator would assign: the pattern when a banner
    /// exists, nothing otherwise.
    pub fn true_pattern(&self) -> Option<Pattern> {
        self.has_banner.then_some(self.pattern)
    }
}

/// Planted state of one site across the whole observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteTruth {
    pub site_id: String,
    pub region: Region,
    pub vertical: Vertical,
    pub rank: u32,
    /// Persistent site intercept on the alignment score.
    pub site_effect_a: f64,
    /// Persistent site intercept on reject visibility.
    pub site_effect_visibility: f64,
    /// Claims asserted by this site's policy (constant over the window).
    pub claims: ClaimSet,
    /// Non-pre-ticked banners at this site keep optional toggles off.
    pub default_off: bool,
    /// This site's banner offers a reopen/settings affordance.
    pub reopen: bool,
    pub months: Vec<MonthTruth>,
}

/// Derives a per-stream seed from the scenario seed; splitmix64 finalizer.
pub(crate) fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn normal_draw(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let dist = Normal::new(0.0, sigma).expect("validated sigma");
    rng.sample(dist)
}

fn categorical_vertical(rng: &mut ChaCha8Rng, mix: &[(Vertical, f64)]) -> Vertical {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (v, share) in mix {
        cum += share;
        if u < cum {
            return *v;
        }
    }
    mix.last().expect("validated non-empty mix").0
}

fn categorical_pattern(rng: &mut ChaCha8Rng, mix: &[f64; Pattern::COUNT]) -> Pattern {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, share) in mix.iter().enumerate() {
        cum += share;
        if u < cum {
            return Pattern::ALL[i];
        }
    }
    *Pattern::ALL.last().expect("non-empty")
}

/// Exact-quota region assignment, interleaved: at each index the region
/// furthest below its cumulative target gets the slot, so quotas hold and
/// regions mix across the rank range instead of forming rank blocks.
fn assign_regions(spec: &ScenarioSpec) -> Vec<Region> {
    let mut counts = vec![0usize; spec.region_mix.len()];
    let mut out = Vec::with_capacity(spec.n_sites);
    for i in 0..spec.n_sites {
        let mut best = 0usize;
        let mut best_deficit = f64::NEG_INFINITY;
        for (j, (_, share)) in spec.region_mix.iter().enumerate() {
            let deficit = share * (i + 1) as f64 - counts[j] as f64;
            if deficit > best_deficit {
                best_deficit = deficit;
                best = j;
            }
        }
        counts[best] += 1;
        out.push(spec.region_mix[best].0);
    }
    out
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-site surfacing-failure probabilities. Rank enters on the logit
/// scale; each region's intercept is calibrated so the region's *mean*
/// failure probability equals its planted rate exactly, keeping observed
/// failure shares on target even with a rank gradient.
fn failure_probabilities(spec: &ScenarioSpec, regions: &[Region], z: &[f64]) -> Vec<f64> {
    let slope = spec.logrank_surfacing_slope;
    let mut probs = vec![0.0; regions.len()];
    for (region, base) in &spec.surfacing_failure {
        let members: Vec<usize> = (0..regions.len())
            .filter(|&i| regions[i] == *region)
            .collect();
        if members.is_empty() {
            continue;
        }
        if slope == 0.0 || *base <= 0.0 || *base >= 1.0 {
            for &i in &members {
                probs[i] = *base;
            }
            continue;
        }
        // Mean of sigmoid(o + slope·z) is monotone in o: bisect for the
        // intercept that puts the region mean exactly on the base rate.
        let mean_at = |o: f64| {
            members
                .iter()
                .map(|&i| sigmoid(o + slope * z[i]))
                .sum::<f64>()
                / members.len() as f64
        };
        let spread = members
            .iter()
            .map(|&i| (slope * z[i]).abs())
            .fold(0.0, f64::max);
        let (mut lo, mut hi) = (logit(*base) - spread - 1.0, logit(*base) + spread + 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mean_at(mid) < *base {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let offset = 0.5 * (lo + hi);
        for &i in &members {
            probs[i] = sigmoid(offset + slope * z[i]);
        }
    }
    probs
}

fn treated(spec: &ScenarioSpec, region: Region, vertical: Vertical) -> bool {
    use crate::panel::TreatmentGroup;
    match spec.event {
        Some(e) => match e.group {
            TreatmentGroup::Region(r) => region == r,
            TreatmentGroup::Vertical(v) => vertical == v,
        },
        None => false,
    }
}

/// Generates the full ground truth for a scenario. Deterministic in the
/// spec (including its seed); each site consumes only its own RNG stream.
pub fn generate_sites(spec: &ScenarioSpec) -> Result<Vec<SiteTruth>> {
    spec.validate()?;
    let trend_denom = (spec.n_months.saturating_sub(1)).max(1) as f64;

    // Standardized log rank across the cohort, for the surfacing model.
    let logranks: Vec<f64> = (0..spec.n_sites)
        .map(|i| ((i + 1) as f64 + 1.0).ln())
        .collect();
    let mean_lr = logranks.iter().sum::<f64>() / logranks.len() as f64;
    let var_lr = logranks.iter().map(|x| (x - mean_lr).powi(2)).sum::<f64>()
        / logranks.len() as f64;
    let sd_lr = var_lr.sqrt();

    let z: Vec<f64> = logranks
        .iter()
        .map(|&lr| if sd_lr > 0.0 { (lr - mean_lr) / sd_lr } else { 0.0 })
        .collect();
    let regions = assign_regions(spec);
    let fail_probs = failure_probabilities(spec, &regions, &z);

    let mut sites = Vec::with_capacity(spec.n_sites);
    for i in 0..spec.n_sites {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, i as u64));
        let region = regions[i];
        let rank = (i + 1) as u32;

        // Site-level draws, in fixed order.
        let site_effect_a = normal_draw(&mut rng, spec.site_sigma);
        let site_effect_visibility = normal_draw(&mut rng, spec.visibility_site_sigma);
        let vertical = categorical_vertical(&mut rng, &spec.vertical_mix);
        let mut claims = ClaimSet::default();
        for field in crate::claims::ClaimField::ALL {
            let hit: f64 = rng.gen();
            claims.set(field, hit < spec.claim_rate);
        }
        let default_off = rng.gen::<f64>() < spec.default_off_rate;
        let reopen = rng.gen::<f64>() < spec.reopen_rate;
        let mut section_variants = [0u8; SECTION_COUNT];
        for v in &mut section_variants {
            *v = rng.gen_range(0..VARIANTS_PER_SECTION);
        }

        let fail_p = fail_probs[i];
        let is_treated_site = treated(spec, region, vertical);

        let mut months = Vec::with_capacity(spec.n_months as usize);
        let mut pattern = Pattern::ScrollWall;
        for month in 1..=spec.n_months {
            // Monthly draws, each consumed unconditionally so one knob
            // never shifts unrelated streams.
            let banner_u: f64 = rng.gen();
            let fail_u: f64 = rng.gen();
            let stick_u: f64 = rng.gen();
            let fresh = categorical_pattern(&mut rng, &spec.pattern_mix);
            let visible_u: f64 = rng.gen();
            let a_noise = normal_draw(&mut rng, spec.noise_sigma);
            let churn_noise = normal_draw(&mut rng, spec.churn_noise);
            let missing_u: f64 = rng.gen();
            let rewrite_u: f64 = rng.gen();
            let gold_u: f64 = rng.gen();
            let double_u: f64 = rng.gen();
            let flip_u: f64 = rng.gen();
            let alt_raw = rng.gen_range(0..Pattern::COUNT - 1);

            let has_banner = banner_u >= spec.no_banner_share;
            let surfacing_failed = has_banner && fail_u < fail_p;
            let surfaced = has_banner && !surfacing_failed;
            pattern = if month == 1 || stick_u >= spec.pattern_stickiness {
                fresh
            } else {
                pattern
            };
            let treated_post = match spec.event {
                Some(e) => is_treated_site && month >= e.month,
                None => false,
            };

            let vis_p = (spec.visibility_base
                + site_effect_visibility
                + if treated_post {
                    spec.event.map(|e| e.effect_visibility).unwrap_or(0.0)
                } else {
                    0.0
                })
            .clamp(0.0, 1.0);
            let reject_visible = surfaced && visible_u < vis_p;

            let a = spec.base_a
                + site_effect_a
                + spec.month_trend * (month - 1) as f64 / trend_denom
                + if has_banner {
                    spec.pattern_delta[pattern.index()]
                } else {
                    0.0
                }
                + if treated_post {
                    spec.event.map(|e| e.effect_a).unwrap_or(0.0)
                } else {
                    0.0
                }
                + a_noise;

            let churn = (month > 1)
                .then(|| (spec.churn_base + churn_noise).clamp(0.0, 1.0));

            let policy_missing = missing_u < spec.policy_missing_rate;
            let rewrote_retention = month > 1 && rewrite_u < spec.rewrite_rate;
            let rewrote_sharing = spec.rewrite_surge_months.contains(&month);
            if rewrote_retention {
                section_variants[SECTION_RETENTION] =
                    (section_variants[SECTION_RETENTION] + 1) % VARIANTS_PER_SECTION;
            }
            if rewrote_sharing {
                section_variants[SECTION_SHARING] =
                    (section_variants[SECTION_SHARING] + 1) % VARIANTS_PER_SECTION;
            }

            let gold = surfaced && gold_u < spec.gold_fraction;
            let double_coded = gold && double_u < spec.double_code_fraction;
            let coder_b_pattern = if double_coded {
                if flip_u < spec.coder_flip_rate {
                    let idx = if alt_raw >= pattern.index() {
                        alt_raw + 1
                    } else {
                        alt_raw
                    };
                    Some(Pattern::from_index(idx).expect("alternative index in range"))
                } else {
                    Some(pattern)
                }
            } else {
                None
            };

            months.push(MonthTruth {
                month,
                has_banner,
                surfacing_failed,
                surfaced,
                pattern,
                reject_visible,
                a,
                churn,
                treated_post,
                policy_missing,
                rewrote_retention,
                rewrote_sharing,
                section_variants,
                gold,
                double_coded,
                coder_b_pattern,
            });
        }

        sites.push(SiteTruth {
            site_id: format!("site-{:05}", i + 1),
            region,
            vertical,
            rank,
            site_effect_a,
            site_effect_visibility,
            claims,
            default_off,
            reopen,
            months,
        });
    }
    Ok(sites)
}
