//! Model files. A network predictor stores its full checkpoint; the
//! physics baseline has no parameters, so `train` leaves a small marker
//! file and the loaders accept either that marker or no file at all.

use std::path::Path;

use confmerge::predictor::{
    load_checkpoint, KnownArrivalsPredictor, NetPredictor, PhysicsPredictor, Predictor,
};
use confmerge::state::HdvTrajectory;
use confmerge::zone::ZoneConfig;
use serde::{Deserialize, Serialize};

use crate::config::PredictorKind;
use crate::fail::{reject_input, validation, write_failed, Fail};

const MARKER_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MarkerFile {
    version: u32,
    kind: String,
}

pub fn save_physics_marker(path: &Path) -> Result<(), Fail> {
    let marker = MarkerFile {
        version: MARKER_VERSION,
        kind: "physics".into(),
    };
    let mut text = serde_json::to_string_pretty(&marker).map_err(|e| write_failed(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| write_failed(path, e))
}

fn check_physics_marker(path: &Path) -> Result<(), Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| reject_input(path, e))?;
    let marker: MarkerFile = serde_json::from_str(&text).map_err(|e| reject_input(path, e))?;
    if marker.kind != "physics" || marker.version != MARKER_VERSION {
        return Err(reject_input(
            path,
            format!(
                "not a physics marker (kind {:?}, version {})",
                marker.kind, marker.version
            ),
        ));
    }
    Ok(())
}

/// Builds the predictor selected by the config. `dataset` feeds the oracle
/// variant (its ground truth comes from the data it is evaluated on);
/// commands without a dataset at hand pass `None`, which makes the oracle
/// choice a validation error.
pub fn load_predictor(
    kind: PredictorKind,
    model: Option<&Path>,
    zone: &ZoneConfig,
    dataset: Option<&[HdvTrajectory]>,
) -> Result<Box<dyn Predictor>, Fail> {
    match kind {
        PredictorKind::Network => {
            let path = model.ok_or_else(|| {
                validation("--model: required when the config selects predictor \"network\"")
            })?;
            let params = load_checkpoint(path).map_err(|e| reject_input(path, e))?;
            let predictor =
                NetPredictor::new(params, zone.clone()).map_err(|e| reject_input(path, e))?;
            Ok(Box::new(predictor))
        }
        PredictorKind::Physics => {
            if let Some(path) = model {
                check_physics_marker(path)?;
            }
            let predictor = PhysicsPredictor::new(zone.clone())
                .map_err(|e| validation(format!("zone: {e}")))?;
            Ok(Box::new(predictor))
        }
        PredictorKind::Oracle => {
            let data = dataset.ok_or_else(|| {
                validation(
                    "predictor: \"oracle\" reads ground truth from a dataset and is only \
                     available for calibrate and coverage",
                )
            })?;
            let arrivals = data.iter().map(|t| t.arrivals.clone()).collect();
            Ok(Box::new(KnownArrivalsPredictor::new(
                arrivals,
                zone.clone(),
            )))
        }
    }
}
