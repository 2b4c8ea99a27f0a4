pub mod analyze;
pub mod cell;
pub mod experiment;
pub mod radial;
pub mod solve;
pub mod verify;

use std::sync::Arc;

use anyhow::{bail, Context};

use malab_core::cell_corrector::{normalize_periodic, solve_corrector, CorrectorOptions};
use malab_core::field_core::{Grid, GridRef, PeriodicGrid};
use malab_core::{CorrectorField64, DensitySpec64, PeriodicDensitySpec64};

use crate::config::Config;

/// Normalized density plus the corrector that the box stages share.
pub struct PreparedDensity {
    pub spec: DensitySpec64,
    pub scale: f64,
    pub xi: Option<CorrectorField64>,
    pub cell_tol: f64,
}

pub fn periodic_grid_for(fp: &PeriodicDensitySpec64, nodes_per_axis: usize) -> GridRef<f64> {
    let nodes = vec![nodes_per_axis; fp.dim()];
    Arc::new(Grid::Periodic(
        PeriodicGrid::new(fp.periods(), &nodes).expect("validated periods"),
    ))
}

/// True when f_p is constant (only the zero frequency carries amplitude),
/// in which case the corrector vanishes identically.
pub fn is_constant_density(fp: &PeriodicDensitySpec64) -> bool {
    fp.coeffs()
        .iter()
        .all(|t| t.k.iter().all(|&k| k == 0) || (t.cos == 0.0 && t.sin == 0.0))
}

/// Normalize the periodic part, rebuild the density on the normalized
/// base, and solve the corrector when the density actually oscillates.
pub fn prepare_density(cfg: &Config) -> anyhow::Result<PreparedDensity> {
    let spec = cfg
        .density
        .as_ref()
        .context("this command needs a [density] section")?;
    let (fp, scale) = normalize_periodic(spec.base())?;
    let spec = spec.with_base(fp)?;
    let fp = spec.base();
    let mut xi = None;
    let mut cell_tol = 1e-8;
    if !is_constant_density(fp) {
        let cell = cfg
            .cell
            .as_ref()
            .context("a non-constant periodic density needs a [cell] section")?;
        cell_tol = cell.tol;
        let grid = periodic_grid_for(fp, cell.nodes_per_axis);
        let fp_field = fp.sample_fp(grid)?;
        let mut opts = CorrectorOptions::default();
        opts.tol = cell.tol;
        xi = Some(solve_corrector(&fp_field, &opts)?);
    }
    Ok(PreparedDensity {
        spec,
        scale,
        xi,
        cell_tol,
    })
}

/// Lattice vectors for quotient scans: configured coefficients, or one
/// unit step per axis.
pub fn lattice_vectors(
    cfg: &Config,
    fp: &PeriodicDensitySpec64,
) -> anyhow::Result<Vec<malab_core::LatticeVector64>> {
    let dim = fp.dim();
    let coeff_rows: Vec<Vec<i32>> = if cfg.analysis.lattice.is_empty() {
        (0..dim)
            .map(|a| {
                let mut v = vec![0; dim];
                v[a] = 1;
                v
            })
            .collect()
    } else {
        cfg.analysis.lattice.clone()
    };
    let mut out = Vec::with_capacity(coeff_rows.len());
    for row in &coeff_rows {
        if row.len() != dim {
            bail!("lattice vector {row:?} does not match dimension {dim}");
        }
        out.push(malab_core::LatticeVector64::new(row, fp.periods())?);
    }
    Ok(out)
}
