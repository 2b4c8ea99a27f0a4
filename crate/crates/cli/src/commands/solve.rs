//! `malab solve`: Dirichlet solves on one or more boxes, or the
//! manufactured-solution convergence study.

use std::sync::Arc;

use anyhow::Context;
use serde::Serialize;

use malab_core::field_core::{BoxGrid, Grid, GridRef, ScalarField};
use malab_core::ma_dirichlet::{
    boundary_from_profile, manufactured, newton_solve, BoundaryData, Provenance, QuadraticProfile,
};
use malab_core::SolveReport64;

use crate::commands::prepare_density;
use crate::config::Config;
use crate::field_io;
use crate::output::OutDir;

#[derive(Serialize)]
struct ManufacturedReport {
    config_hash: String,
    nodes: Vec<usize>,
    sup_errors: Vec<f64>,
    ratios: Vec<f64>,
    newton_iterations: Vec<usize>,
}

#[derive(Serialize)]
struct SolveSummary {
    config_hash: String,
    scale: f64,
    corrector_residual: Option<f64>,
    half_widths: Vec<f64>,
    reports: Vec<SolveReport64>,
}

fn box_grid(dim: usize, l: f64, m: usize) -> anyhow::Result<GridRef<f64>> {
    Ok(Arc::new(Grid::Box(BoxGrid::new(dim, l, m)?)))
}

pub fn run(cfg: &Config, out: &OutDir) -> anyhow::Result<()> {
    if let Some(man) = &cfg.manufactured {
        return run_manufactured(cfg, man, out);
    }
    let grid_cfg = cfg
        .grid
        .as_ref()
        .context("solve command needs a [grid] section")?;
    let prep = prepare_density(cfg)?;
    let opts = cfg.solver.options();
    let mut reports = Vec::new();
    for &l in &grid_cfg.half_widths {
        let g = box_grid(grid_cfg.dim, l, grid_cfg.nodes_per_axis)?;
        let f = prep.spec.sample(g.clone())?;
        let profile = QuadraticProfile::isotropic(grid_cfg.dim, 1.0)?;
        let bd = boundary_from_profile(g.clone(), &profile, prep.xi.as_ref().map(|c| &c.xi))?;
        let (u, report) = newton_solve(&f, &bd, None, &opts)?;
        field_io::write_field(&out.path, &format!("u_L{l}"), &u)?;
        out.write_json(&format!("solve_report_L{l}.json"), &report)?;
        reports.push(report);
    }
    out.write_json(
        "solve_summary.json",
        &SolveSummary {
            config_hash: out.config_hash.clone(),
            scale: prep.scale,
            corrector_residual: prep.xi.as_ref().map(|c| c.residual),
            half_widths: grid_cfg.half_widths.clone(),
            reports,
        },
    )?;
    Ok(())
}

fn run_manufactured(
    cfg: &Config,
    man: &crate::config::ManufacturedConfig,
    out: &OutDir,
) -> anyhow::Result<()> {
    let opts = cfg.solver.options();
    let ustar = manufactured::solution(man.amplitude);
    let density = manufactured::density(man.amplitude);
    let mut sup_errors = Vec::new();
    let mut iters = Vec::new();
    let mut rows = Vec::new();
    for &m in &man.nodes {
        let g = box_grid(2, man.half_width, m)?;
        let f = ScalarField::from_fn(g.clone(), density)?;
        let bd = BoundaryData::from_fn(g.clone(), Provenance::Custom, ustar)?;
        let (u, report) = newton_solve(&f, &bd, None, &opts)?;
        let mut worst: f64 = 0.0;
        for fi in 0..g.node_count() {
            let x = g.coords(&g.unflat(fi));
            worst = worst.max((u.values()[fi] - ustar(&x[..2])).abs());
        }
        field_io::write_field(&out.path, &format!("u_m{m}"), &u)?;
        let h = g.as_box().unwrap().spacing();
        rows.push(vec![m as f64, h, worst]);
        sup_errors.push(worst);
        iters.push(report.newton_iterations);
    }
    out.write_csv("error_vs_h.csv", "m,h,sup_error", &rows)?;
    let ratios = sup_errors.windows(2).map(|w| w[0] / w[1]).collect();
    out.write_json(
        "manufactured_report.json",
        &ManufacturedReport {
            config_hash: out.config_hash.clone(),
            nodes: man.nodes.clone(),
            sup_errors,
            ratios,
            newton_iterations: iters,
        },
    )?;
    Ok(())
}
