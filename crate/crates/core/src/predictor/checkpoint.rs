use super::net::{NetParams, ENC1_DIM, ENC2_DIM, HEAD_HIDDEN, HIDDEN_DIM, OBS_DIM};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeHeader {
    pub obs: usize,
    pub enc1: usize,
    pub enc2: usize,
    pub hidden: usize,
    pub head_hidden: usize,
    pub heads: usize,
}

/// On-disk model format: version, explicit layer shapes, then every
/// parameter array. JSON text; floats survive the round trip bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub shapes: ShapeHeader,
    pub params: NetParams,
}

impl Checkpoint {
    pub fn new(params: NetParams) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            shapes: ShapeHeader {
                obs: OBS_DIM,
                enc1: ENC1_DIM,
                enc2: ENC2_DIM,
                hidden: HIDDEN_DIM,
                head_hidden: HEAD_HIDDEN,
                heads: params.num_heads(),
            },
            params,
        }
    }

    fn validate(&self) -> crate::Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(crate::Error::Serialization(format!(
                "checkpoint version {} unsupported (expected {})",
                self.version, CHECKPOINT_VERSION
            )));
        }
        let expect = ShapeHeader {
            obs: OBS_DIM,
            enc1: ENC1_DIM,
            enc2: ENC2_DIM,
            hidden: HIDDEN_DIM,
            head_hidden: HEAD_HIDDEN,
            heads: self.params.num_heads(),
        };
        if self.shapes != expect {
            return Err(crate::Error::Serialization(format!(
                "checkpoint shape header {:?} does not match this build ({:?})",
                self.shapes, expect
            )));
        }
        Ok(())
    }
}

pub fn save_checkpoint(path: &Path, params: &NetParams) -> crate::Result<()> {
    let ck = Checkpoint::new(params.clone());
    let text = serde_json::to_string_pretty(&ck)
        .map_err(|e| crate::Error::Serialization(e.to_string()))?;
    std::fs::write(path, text)
        .map_err(|e| crate::Error::Serialization(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> crate::Result<NetParams> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| crate::Error::Serialization(format!("{}: {e}", path.display())))?;
    let ck: Checkpoint =
        serde_json::from_str(&text).map_err(|e| crate::Error::Serialization(e.to_string()))?;
    ck.validate()?;
    Ok(ck.params)
}
