//! `malab radial`: deviation series, fitted decay slope, and the
//! log-growth table for the counterexample regime.

use anyhow::Context;
use serde::Serialize;

use malab_core::density::RadialDensitySpec;
use malab_core::radial_oracle::{parabola_deviation, radial_sigma, theorem_sigma};

use crate::config::Config;
use crate::output::OutDir;

#[derive(Serialize)]
struct RadialEntry {
    n: usize,
    beta: f64,
    slope: f64,
    slope_stderr: f64,
    c_star: f64,
    sigma_richardson: f64,
    /// min(beta - 2, n - 2): the quadrature-oracle prediction (n >= 3,
    /// beta > 2 only).
    oracle_sigma: Option<f64>,
    /// min(beta, n - 2): the classification-theorem exponent, reported
    /// for comparison.
    theorem_sigma: Option<f64>,
    /// Relative drift of deviation / log r between the first and last
    /// radius, meaningful in the log-growth regime.
    log_ratio_drift: f64,
}

#[derive(Serialize)]
struct RadialReport {
    config_hash: String,
    entries: Vec<RadialEntry>,
}

pub fn run(cfg: &Config, out: &OutDir) -> anyhow::Result<()> {
    let r = cfg
        .radial
        .as_ref()
        .context("radial command needs a [radial] section")?;
    let spec = RadialDensitySpec::new(r.amp_d, r.beta)?;
    let mut entries = Vec::new();
    for &n in &r.dims {
        let dev = parabola_deviation(&spec, n, &r.radii)?;
        let (slope, stderr) = dev.log_log_slope(3);
        // deviation CSV: r, deviation, local slope between neighbors
        let mut rows = Vec::new();
        for (i, &(radius, d)) in dev.series.iter().enumerate() {
            let local = if i > 0 {
                let (r0, d0) = dev.series[i - 1];
                if d.abs() > 1e-15 && d0.abs() > 1e-15 {
                    (d.abs().ln() - d0.abs().ln()) / (radius.ln() - r0.ln())
                } else {
                    0.0
                }
            } else {
                0.0
            };
            rows.push(vec![radius, d, local]);
        }
        out.write_csv(
            &format!("radial_n{n}.csv"),
            "r,deviation,local_slope",
            &rows,
        )?;

        // log-growth table (deviation / log r)
        let log_rows: Vec<Vec<f64>> = dev
            .series
            .iter()
            .map(|&(radius, d)| vec![radius, d / radius.ln()])
            .collect();
        out.write_csv(
            &format!("logratio_n{n}.csv"),
            "r,deviation_over_log_r",
            &log_rows,
        )?;
        let first = log_rows.first().map(|v| v[1]).unwrap_or(0.0);
        let last = log_rows.last().map(|v| v[1]).unwrap_or(0.0);
        let drift = if last.abs() > 1e-15 {
            ((first - last) / last).abs()
        } else {
            0.0
        };

        entries.push(RadialEntry {
            n,
            beta: r.beta,
            slope,
            slope_stderr: stderr,
            c_star: dev.c_star,
            sigma_richardson: dev.sigma_est,
            oracle_sigma: radial_sigma::<f64>(n, r.beta).ok(),
            theorem_sigma: if n >= 3 {
                Some(theorem_sigma::<f64>(n, r.beta))
            } else {
                None
            },
            log_ratio_drift: drift,
        });
    }
    out.write_json(
        "radial_report.json",
        &RadialReport {
            config_hash: out.config_hash.clone(),
            entries,
        },
    )?;
    Ok(())
}
