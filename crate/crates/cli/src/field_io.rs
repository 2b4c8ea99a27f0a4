//! Portable field files: little-endian raw f64 arrays with a JSON
//! sidecar carrying the grid geometry. Round trips are bit exact.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use malab_core::field_core::{BoxGrid, Grid, PeriodicGrid, ScalarField};

#[derive(Serialize, Deserialize)]
struct Sidecar {
    kind: String,
    dim: usize,
    shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    periods: Option<Vec<f64>>,
    spacing: Vec<f64>,
    dtype: String,
    order: String,
}

pub fn write_field(dir: &Path, name: &str, field: &ScalarField<f64>) -> anyhow::Result<PathBuf> {
    let raw_path = dir.join(format!("{name}.raw"));
    let json_path = dir.join(format!("{name}.json"));
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(&raw_path, bytes)?;
    let sidecar = match field.grid().as_ref() {
        Grid::Box(g) => Sidecar {
            kind: "box".into(),
            dim: g.dim(),
            shape: vec![g.nodes_per_axis(); g.dim()],
            half_width: Some(g.half_width()),
            periods: None,
            spacing: vec![g.spacing(); g.dim()],
            dtype: "f64".into(),
            order: "row-major".into(),
        },
        Grid::Periodic(g) => Sidecar {
            kind: "periodic".into(),
            dim: g.dim(),
            shape: g.nodes_per_axis().to_vec(),
            half_width: None,
            periods: Some(g.periods().to_vec()),
            spacing: (0..g.dim()).map(|a| g.spacing(a)).collect(),
            dtype: "f64".into(),
            order: "row-major".into(),
        },
    };
    std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(raw_path)
}

/// Read a field back; `base` may point at the .raw, the .json, or the
/// extension-less stem.
pub fn read_field(base: &Path) -> anyhow::Result<ScalarField<f64>> {
    let stem = base.with_extension("");
    let raw_path = stem.with_extension("raw");
    let json_path = stem.with_extension("json");
    let sidecar: Sidecar = serde_json::from_str(
        &std::fs::read_to_string(&json_path)
            .with_context(|| format!("sidecar {}", json_path.display()))?,
    )?;
    if sidecar.dtype != "f64" || sidecar.order != "row-major" {
        bail!("unsupported field encoding");
    }
    let bytes = std::fs::read(&raw_path)?;
    if bytes.len() % 8 != 0 {
        bail!("raw field length is not a multiple of 8");
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let grid = match sidecar.kind.as_str() {
        "box" => {
            let m = sidecar.shape.first().copied().unwrap_or(0);
            let l = sidecar
                .half_width
                .context("box sidecar without half_width")?;
            Grid::Box(BoxGrid::new(sidecar.dim, l, m)?)
        }
        "periodic" => {
            let periods = sidecar
                .periods
                .context("periodic sidecar without periods")?;
            Grid::Periodic(PeriodicGrid::new(&periods, &sidecar.shape)?)
        }
        other => bail!("unknown grid kind '{other}'"),
    };
    Ok(ScalarField::from_values(Arc::new(grid), values)?)
}
