//! The run configuration: one JSON document covering the control zone, the
//! traffic template, the predictor choice, training hyperparameters, and
//! the seed layout of the dataset splits.
//!
//! Every field has a default; a config file may set any subset. Loading
//! reports problems with full field paths ("zone.dt: ..."), and
//! `reference()` renders the complete field list with defaults and
//! documentation so the format needs no separate manual.

use std::path::Path;

use confmerge::hdv::ScenarioTemplate;
use confmerge::predictor::TrainConfig;
use confmerge::zone::ZoneConfig;
use serde::{Deserialize, Serialize};

use crate::fail::{validation, Fail};

/// Which arrival-time predictor the commands operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    /// Trained recurrent network (needs a checkpoint from `train`).
    Network,
    /// Constant-speed extrapolation baseline; no parameters.
    Physics,
    /// Ground-truth arrival times taken from the dataset itself. Only
    /// meaningful for `calibrate` and `coverage` sanity checks.
    Oracle,
}

impl PredictorKind {
    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Network => "network",
            PredictorKind::Physics => "physics",
            PredictorKind::Oracle => "oracle",
        }
    }
}

/// Seed layout of the three dataset splits. Counts are trajectories
/// (vehicle episodes), not scenarios; each scenario contributes
/// `template.num_hdvs` of them. Scenario seeds are drawn from
/// `[base, base + count)` per split, so the ranges must not overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedPlan {
    pub train_base: u64,
    pub train_count: usize,
    pub calib_base: u64,
    pub calib_count: usize,
    pub test_base: u64,
    pub test_count: usize,
}

impl Default for SeedPlan {
    fn default() -> Self {
        SeedPlan {
            train_base: 1000,
            train_count: 3000,
            calib_base: 101_000,
            calib_count: 500,
            test_base: 201_000,
            test_count: 500,
        }
    }
}

impl SeedPlan {
    pub fn splits(&self) -> [(&'static str, u64, usize); 3] {
        [
            ("train", self.train_base, self.train_count),
            ("calib", self.calib_base, self.calib_count),
            ("test", self.test_base, self.test_count),
        ]
    }

    fn validate(&self) -> Result<(), Fail> {
        let spans = self.splits();
        for (name, base, count) in spans {
            if base.checked_add(count as u64).is_none() {
                return Err(validation(format!(
                    "seeds.{name}_base: seed range overflows past u64::MAX"
                )));
            }
        }
        for i in 0..spans.len() {
            for j in i + 1..spans.len() {
                let (an, ab, ac) = spans[i];
                let (bn, bb, bc) = spans[j];
                if ac == 0 || bc == 0 {
                    continue;
                }
                if ab < bb + bc as u64 && bb < ab + ac as u64 {
                    return Err(validation(format!(
                        "seeds: {an} and {bn} seed ranges overlap \
                         ([{ab}, {}) vs [{bb}, {}))",
                        ab + ac as u64,
                        bb + bc as u64
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub zone: ZoneConfig,
    pub template: ScenarioTemplate,
    pub predictor: PredictorKind,
    pub train: TrainConfig,
    pub seeds: SeedPlan,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            zone: ZoneConfig::default(),
            template: ScenarioTemplate::default(),
            predictor: PredictorKind::Network,
            train: TrainConfig::default(),
            seeds: SeedPlan::default(),
        }
    }
}

fn prefixed(section: &str, err: confmerge::Error) -> Fail {
    // Core validation messages start with the bare field name; anchor them
    // to their section of the config document.
    match err {
        confmerge::Error::InvalidConfig(m) | confmerge::Error::InvalidTemplate(m) => {
            validation(format!("{section}.{m}"))
        }
        other => validation(format!("{section}: {other}")),
    }
}

impl RunConfig {
    /// Loads and validates; `None` means the built-in defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, Fail> {
        let config = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| validation(format!("{}: {e}", p.display())))?;
                let mut de = serde_json::Deserializer::from_str(&text);
                serde_path_to_error::deserialize(&mut de).map_err(|e| {
                    let path = e.path().to_string();
                    let field = if path == "." {
                        String::new()
                    } else {
                        format!("{path}: ")
                    };
                    validation(format!("{}: {field}{}", p.display(), e.inner()))
                })?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Fail> {
        self.zone.validate().map_err(|e| prefixed("zone", e))?;
        self.template
            .validate()
            .map_err(|e| prefixed("template", e))?;
        if self.train.batch_size == 0 {
            return Err(validation("train.batch_size: must be >= 1"));
        }
        if self.train.epochs == 0 {
            return Err(validation("train.epochs: must be >= 1"));
        }
        if !(self.train.learning_rate.is_finite() && self.train.learning_rate > 0.0) {
            return Err(validation(format!(
                "train.learning_rate: must be finite and > 0, got {}",
                self.train.learning_rate
            )));
        }
        self.seeds.validate()
    }

    pub fn default_json() -> String {
        let mut text =
            serde_json::to_string_pretty(&RunConfig::default()).expect("default config serializes");
        text.push('\n');
        text
    }
}

/// Field path, one-line documentation. Order here is the order of the
/// rendered reference; a unit test keeps the list in sync with the struct.
const FIELD_DOCS: &[(&str, &str)] = &[
    ("zone.dt", "Simulation and planning step, seconds."),
    ("zone.horizon_steps", "Steps per episode; samples run 0..=horizon_steps."),
    (
        "zone.candidate_positions",
        "Merging-slot positions along the control zone, meters; strictly increasing, equally spaced.",
    ),
    (
        "zone.headway_delta",
        "Required time gap, seconds, between the ramp vehicle's merge and any highway arrival at the chosen slot.",
    ),
    ("zone.v_min", "Lower speed limit for planned merge trajectories, m/s."),
    ("zone.v_max", "Upper speed limit for planned merge trajectories, m/s."),
    ("zone.u_min", "Ramp-vehicle braking limit, m/s^2 (negative)."),
    ("zone.u_max", "Ramp-vehicle acceleration limit, m/s^2."),
    (
        "zone.epsilon",
        "Target miscoverage level of the calibrated bound table; `calibrate --epsilon` overrides it.",
    ),
    ("zone.merge_speed_step", "Grid resolution of the merge-speed search, m/s."),
    ("template.num_hdvs", "Highway vehicles per scenario."),
    (
        "template.lead_position",
        "[lo, hi] initial position of the front-most highway vehicle, m.",
    ),
    (
        "template.initial_gap",
        "[lo, hi] spacing between successive highway vehicles, m.",
    ),
    ("template.initial_speed", "[lo, hi] initial highway speeds, m/s."),
    ("template.desired_speed", "[lo, hi] per-driver free-flow speed, m/s."),
    (
        "template.altruism",
        "[lo, hi] per-driver courtesy strength; 0 ignores the ramp vehicle entirely.",
    ),
    ("template.alpha", "Courtesy falloff rate with distance to the ramp vehicle, 1/m."),
    ("template.idm_t", "Desired time headway of the car-following model, s."),
    ("template.idm_s0", "Standstill gap of the car-following model, m."),
    ("template.idm_a", "Comfortable acceleration of the car-following model, m/s^2."),
    ("template.idm_b", "Comfortable braking of the car-following model, m/s^2."),
    ("template.noise_std", "Standard deviation of per-step driver acceleration noise, m/s^2."),
    (
        "template.min_initial_gap",
        "Smallest admissible sampled spacing between highway vehicles, m.",
    ),
    ("template.cav_position", "[lo, hi] ramp-vehicle initial position, m."),
    ("template.cav_speed", "[lo, hi] ramp-vehicle initial speed, m/s."),
    (
        "predictor",
        "Arrival-time predictor: \"network\" (trained model), \"physics\" (constant-speed extrapolation), or \"oracle\" (dataset ground truth; calibrate/coverage only).",
    ),
    ("train.learning_rate", "Gradient-descent step size."),
    ("train.epochs", "Passes over the training split."),
    ("train.batch_size", "Trajectories per parameter update."),
    ("train.seed", "Seed for parameter initialization and batch shuffling."),
    ("seeds.train_base", "First scenario seed of the training split."),
    (
        "seeds.train_count",
        "Trajectories in the training split; `gen-data --count` overrides.",
    ),
    ("seeds.calib_base", "First scenario seed of the calibration split."),
    ("seeds.calib_count", "Trajectories in the calibration split."),
    ("seeds.test_base", "First scenario seed of the test split."),
    ("seeds.test_count", "Trajectories in the test split."),
];

#[cfg(test)]
fn leaf_paths(value: &serde_json::Value, prefix: &str, out: &mut Vec<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                leaf_paths(v, &path, out);
            }
        }
        _ => out.push(prefix.to_string()),
    }
}

/// Renders the complete config reference: every field, its default, and
/// what it means. Generated from the same defaults the program uses, so it
/// cannot drift.
pub fn reference() -> String {
    let defaults = serde_json::to_value(RunConfig::default()).expect("default config serializes");
    let mut out = String::new();
    out.push_str(
        "Run configuration reference\n\
         ===========================\n\
         A config file is a single JSON document; pass it with --config. Every\n\
         field is optional and defaults to the value shown. Positions are\n\
         longitudinal meters in zone coordinates, speeds m/s, times seconds.\n\n",
    );
    for (path, doc) in FIELD_DOCS {
        let pointer = format!("/{}", path.replace('.', "/"));
        let value = defaults
            .pointer(&pointer)
            .unwrap_or_else(|| panic!("documented field {path} missing from defaults"));
        let rendered = serde_json::to_string(value).expect("leaf serializes");
        out.push_str(&format!("{path} = {rendered}\n    {doc}\n"));
    }
    out
}
