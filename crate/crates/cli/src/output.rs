//! Output-directory conventions: every command writes the fully resolved
//! configuration next to its artifacts, and nothing outside `--out`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::config::{self, Config};

pub struct OutDir {
    pub path: PathBuf,
    pub config_hash: String,
}

pub fn prepare(out: &Path, cfg: &Config) -> anyhow::Result<OutDir> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let resolved = config::resolved_toml(cfg)?;
    let hash = config::config_hash(&resolved);
    std::fs::write(out.join("resolved_config.toml"), &resolved)?;
    Ok(OutDir {
        path: out.to_path_buf(),
        config_hash: hash,
    })
}

impl OutDir {
    pub fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(self.path.join(name), text)?;
        Ok(())
    }

    pub fn write_csv(&self, name: &str, header: &str, rows: &[Vec<f64>]) -> anyhow::Result<()> {
        let mut text = String::new();
        writeln!(text, "{header}").unwrap();
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(text, "{}", line.join(",")).unwrap();
        }
        std::fs::write(self.path.join(name), text)?;
        Ok(())
    }

    pub fn mark_stage(&self, stage: &str) -> anyhow::Result<()> {
        std::fs::write(self.path.join("stage.txt"), stage)?;
        Ok(())
    }
}
