//! `malab analyze`: decomposition fits and diagnostics over solution
//! fields produced by `solve` (or sampled radially).

use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use malab_core::asymptotics::{
    check_det_a, fit_decomposition, green_decay, level_sets, quotient_scan, AnnulusSpec,
    DecompositionFit, LevelSetReport, QuotientStats,
};
use malab_core::cell_corrector::normalize_periodic;
use malab_core::field_core::{Grid, ScalarField};
use malab_core::DensitySpec64;

use crate::commands::lattice_vectors;
use crate::config::Config;
use crate::field_io;
use crate::output::OutDir;

#[derive(Serialize)]
pub struct FieldAnalysis {
    pub field: String,
    pub half_width: f64,
    pub sigma_hat: f64,
    pub sigma_stderr: f64,
    pub det_a_gap: f64,
    pub inner_residual: f64,
    pub fit: DecompositionFit<f64>,
    pub quotients: Vec<QuotientStats<f64>>,
    pub level_sets: LevelSetReport<f64>,
    pub green_slope: Option<f64>,
    pub eig_range: (f64, f64),
}

#[derive(Serialize)]
struct AnalyzeReport {
    config_hash: String,
    fields: Vec<FieldAnalysis>,
}

/// Shared between `analyze` and `experiment`.
pub fn analyze_field(
    cfg: &Config,
    spec: &DensitySpec64,
    name: &str,
    u: &ScalarField<f64>,
    out: &OutDir,
) -> anyhow::Result<FieldAnalysis> {
    let grid = u.grid().clone();
    let g = grid.as_box()?;
    let l = g.half_width();
    let h = g.spacing();
    let dim = g.dim();
    let fp = spec.base();

    let mut annuli = Vec::new();
    for frac in &cfg.analysis.annuli_fractions {
        annuli.push(AnnulusSpec::new(&grid, frac[0] * l, frac[1] * l)?);
    }
    annuli.push(AnnulusSpec::new(
        &grid,
        cfg.analysis.fit_fraction * l,
        l - 4.0 * h,
    )?);
    let fit = fit_decomposition(u, &annuli, fp, cfg.analysis.fourier_order)?;
    let det_gap = check_det_a(&fit, spec)?;
    let rows: Vec<Vec<f64>> = fit
        .annulus_residuals
        .iter()
        .map(|r| vec![r.mean_radius, r.sup_residual])
        .collect();
    out.write_csv(
        &format!("{name}_annuli.csv"),
        "mean_radius,sup_residual",
        &rows,
    )?;

    let lattice = lattice_vectors(cfg, fp)?;
    let mut scan_annuli = Vec::new();
    for frac in &cfg.analysis.quotient_fractions {
        scan_annuli.push(AnnulusSpec::new(&grid, frac[0] * l, frac[1] * l)?);
    }
    let quotients = quotient_scan(u, &lattice, &scan_annuli)?;
    let rows: Vec<Vec<f64>> = quotients
        .iter()
        .map(|q| {
            vec![
                q.mean_radius,
                q.min,
                q.max,
                q.sup_dev_from_one,
                q.skipped as f64,
            ]
        })
        .collect();
    out.write_csv(
        &format!("{name}_quotients.csv"),
        "mean_radius,min,max,sup_dev_from_one,skipped",
        &rows,
    )?;

    // level sets of the affine-normalized solution
    let mut vals = u.values().to_vec();
    for fi in 0..grid.node_count() {
        let x = grid.coords(&grid.unflat(fi));
        let mut shift = fit.c;
        for a in 0..dim {
            shift += fit.b[a] * x[a];
        }
        vals[fi] -= shift;
    }
    let normalized = ScalarField::from_values(grid.clone(), vals)?;
    let levels = level_sets(&normalized, &cfg.analysis.level_values)?;
    let rows: Vec<Vec<f64>> = levels
        .entries
        .iter()
        .map(|e| {
            vec![
                e.level,
                e.volume,
                e.radius_ratio,
                if e.truncated { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    out.write_csv(
        &format!("{name}_levelsets.csv"),
        "level,volume,radius_ratio,truncated",
        &rows,
    )?;

    let green_slope = if dim == 3 && cfg.analysis.green {
        let m = g.nodes_per_axis();
        let src = [m / 2, m / 2, m / 2];
        Some(green_decay(u, &src)?.slope)
    } else {
        None
    };

    let eig_range = malab_core::asymptotics::hessian_eig_range(u, 0.5 * l)?;
    let inner_residual = fit.annulus_residuals[0].sup_residual;
    Ok(FieldAnalysis {
        field: name.to_string(),
        half_width: l,
        sigma_hat: fit.sigma_hat,
        sigma_stderr: fit.sigma_stderr,
        det_a_gap: det_gap,
        inner_residual,
        fit,
        quotients,
        level_sets: levels,
        green_slope,
        eig_range,
    })
}

pub fn run(cfg: &Config, out: &OutDir, fields: &[String]) -> anyhow::Result<()> {
    let spec = cfg
        .density
        .as_ref()
        .context("analyze needs a [density] section")?;
    let (fp, _scale) = normalize_periodic(spec.base())?;
    let spec = spec.with_base(fp)?;
    if fields.is_empty() {
        anyhow::bail!("analyze needs at least one solution field path");
    }
    let mut results = Vec::new();
    for path in fields {
        let field = field_io::read_field(Path::new(path))?;
        match field.grid().as_ref() {
            Grid::Box(_) => {}
            Grid::Periodic(_) => anyhow::bail!("analyze expects box-grid fields"),
        }
        let name = Path::new(path)
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "field".into());
        results.push(analyze_field(cfg, &spec, &name, &field, out)?);
    }
    out.write_json(
        "analyze_report.json",
        &AnalyzeReport {
            config_hash: out.config_hash.clone(),
            fields: results,
        },
    )?;
    Ok(())
}
