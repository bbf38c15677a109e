//! Versioned JSON checkpoints: encoder settings, label inventory, head
//! architecture and the flattened parameter vector with its layout tag.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, EncoderConfig, PolicyParameters, LAYOUT_TAG};
use crate::data::LabelInventory;
use crate::error::{Error, Result};

const FORMAT: &str = "lre-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub encoder: EncoderConfig,
    pub inventory: LabelInventory,
    pub params: PolicyParameters,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    format: String,
    version: u32,
    layout: String,
    encoder: EncoderConfig,
    labels: Vec<String>,
    no_relation: String,
    architecture: Architecture,
    theta: Vec<f64>,
}

pub fn render_checkpoint(ck: &Checkpoint) -> String {
    let inv = &ck.inventory;
    let wire = Wire {
        format: FORMAT.into(),
        version: VERSION,
        layout: LAYOUT_TAG.into(),
        encoder: ck.encoder,
        labels: inv.names().to_vec(),
        no_relation: inv.name(inv.no_relation()).to_string(),
        architecture: ck.params.architecture(),
        theta: ck.params.as_slice().to_vec(),
    };
    let mut s = serde_json::to_string(&wire).expect("checkpoint serializes");
    s.push('\n');
    s
}

pub fn parse_checkpoint(text: &str) -> Result<Checkpoint> {
    let bad = |m: String| Error::parse(1, m);
    let wire: Wire = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if wire.format != FORMAT || wire.version != VERSION {
        return Err(bad(format!(
            "unsupported checkpoint {} v{}",
            wire.format, wire.version
        )));
    }
    if wire.layout != LAYOUT_TAG {
        return Err(bad(format!("unknown parameter layout `{}`", wire.layout)));
    }
    wire.encoder.validate()?;
    let inventory = LabelInventory::new(wire.labels, &wire.no_relation)?;
    let arch = wire.architecture;
    if arch.num_labels != inventory.len() || arch.input_dim != wire.encoder.output_dim() {
        return Err(Error::ShapeMismatch(format!(
            "architecture {arch:?} does not fit {} labels and encoder width {}",
            inventory.len(),
            wire.encoder.output_dim()
        )));
    }
    // guard the multiplication in param_count against hostile sizes
    let big = arch
        .num_labels
        .checked_mul(arch.input_dim.max(arch.hidden_dim).max(1))
        .is_none();
    if big {
        return Err(Error::ShapeMismatch("architecture too large".into()));
    }
    let params = PolicyParameters::from_flat(arch, wire.theta)?;
    Ok(Checkpoint {
        encoder: wire.encoder,
        inventory,
        params,
    })
}

pub fn write_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_checkpoint(ck)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text).map_err(|e| e.with_path(path))
}
