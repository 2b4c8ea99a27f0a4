//! `malab verify-assumptions`: density hypothesis report.

use anyhow::Context;

use malab_core::density::verify_assumptions;

use crate::config::Config;
use crate::output::OutDir;

pub fn run(cfg: &Config, out: &OutDir) -> anyhow::Result<()> {
    let spec = cfg
        .density
        .as_ref()
        .context("verify-assumptions needs a [density] section")?;
    let report = verify_assumptions(spec, cfg.output.sample_count)?;
    out.write_json("assumption_report.json", &report)?;
    if !report.pass {
        return Err(malab_core::Error::InvalidSpec(
            "density violates the decay/bounds hypotheses".into(),
        )
        .into());
    }
    Ok(())
}
