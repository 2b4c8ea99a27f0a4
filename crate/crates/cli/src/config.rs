//! Experiment configuration: a TOML tree, resolvable from a file path or
//! a named preset shipped with the repository.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use malab_core::ma_dirichlet::SolverOptions;
use malab_core::DensitySpec64;

pub const PRESETS: &[(&str, &str)] = &[
    ("flat", include_str!("../../../presets/flat.toml")),
    (
        "counterexample",
        include_str!("../../../presets/counterexample.toml"),
    ),
    ("beta4-n3", include_str!("../../../presets/beta4-n3.toml")),
    ("thm1-n3", include_str!("../../../presets/thm1-n3.toml")),
    (
        "manufactured-2d",
        include_str!("../../../presets/manufactured-2d.toml"),
    ),
    (
        "separable-cell",
        include_str!("../../../presets/separable-cell.toml"),
    ),
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Config {
    /// Set when the config was resolved from a named preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySpec64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial: Option<RadialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<ManufacturedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialConfig {
    pub dims: Vec<usize>,
    pub amp_d: f64,
    pub beta: f64,
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManufacturedConfig {
    pub amplitude: f64,
    pub nodes: Vec<usize>,
    pub half_width: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub half_widths: Vec<f64>,
    pub nodes_per_axis: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_newton")]
    pub max_newton: usize,
    #[serde(default = "default_max_linear")]
    pub max_linear: usize,
    #[serde(default = "default_damping")]
    pub damping_levels: u32,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_newton() -> usize {
    50
}
fn default_max_linear() -> usize {
    100_000
}
fn default_damping() -> u32 {
    8
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: default_tol(),
            max_newton: default_max_newton(),
            max_linear: default_max_linear(),
            damping_levels: default_damping(),
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions<f64> {
        SolverOptions {
            tol: self.tol,
            max_newton: self.max_newton,
            max_linear: self.max_linear,
            damping_levels: self.damping_levels,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellConfig {
    pub nodes_per_axis: usize,
    #[serde(default = "default_cell_tol")]
    pub tol: f64,
    /// Rescale f_p to unit cell average before solving (the default).
    /// Disabling it exposes the incompatible-average error path.
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_cell_tol() -> f64 {
    1e-8
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Annuli as fractions of the box half-width, innermost first.
    #[serde(default = "default_annuli")]
    pub annuli_fractions: Vec<[f64; 2]>,
    /// The fitting annulus spans [fit_fraction * L, L - 4h].
    #[serde(default = "default_fit_fraction")]
    pub fit_fraction: f64,
    /// Lattice vectors for the second-quotient scans.
    #[serde(default)]
    pub lattice: Vec<Vec<i32>>,
    #[serde(default = "default_order")]
    pub fourier_order: usize,
    #[serde(default = "default_levels")]
    pub level_values: Vec<f64>,
    #[serde(default = "default_quotient_annuli")]
    pub quotient_fractions: Vec<[f64; 2]>,
    /// Run the Green-decay diagnostic (3-D only).
    #[serde(default = "default_true")]
    pub green: bool,
}

fn default_annuli() -> Vec<[f64; 2]> {
    vec![[0.20, 0.30], [0.30, 0.45], [0.45, 0.65]]
}
fn default_fit_fraction() -> f64 {
    0.75
}
fn default_order() -> usize {
    2
}
fn default_levels() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0]
}
fn default_quotient_annuli() -> Vec<[f64; 2]> {
    vec![[0.10, 0.25], [0.25, 0.375], [0.375, 0.50]]
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            annuli_fractions: default_annuli(),
            fit_fraction: default_fit_fraction(),
            lattice: Vec::new(),
            fourier_order: default_order(),
            level_values: default_levels(),
            quotient_fractions: default_quotient_annuli(),
            green: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub sample_count: usize,
}

fn default_samples() -> usize {
    4096
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            seed: 0,
            sample_count: default_samples(),
        }
    }
}

/// Resolve a `--config` argument: an existing file path, or the name of a
/// shipped preset.
pub fn load(arg: &str) -> anyhow::Result<Config> {
    let text = if Path::new(arg).exists() {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
    } else if let Some((name, body)) = PRESETS.iter().find(|(n, _)| *n == arg) {
        let mut cfg: Config = toml::from_str(body).with_context(|| format!("preset {name}"))?;
        cfg.preset = Some(name.to_string());
        validate(&cfg)?;
        return Ok(cfg);
    } else {
        bail!("config '{arg}' is neither a file nor a known preset");
    };
    let cfg: Config = toml::from_str(&text).with_context(|| format!("parsing {arg}"))?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn validate(cfg: &Config) -> anyhow::Result<()> {
    if let Some(d) = &cfg.density {
        d.validate().map_err(|e| anyhow::anyhow!("density: {e}"))?;
    }
    if let Some(r) = &cfg.radial {
        if r.dims.is_empty() || r.radii.len() < 3 {
            bail!("radial section needs dims and at least 3 radii");
        }
        if r.radii.windows(2).any(|w| w[1] <= w[0]) {
            bail!("radial radii must increase");
        }
    }
    if let Some(g) = &cfg.grid {
        if g.half_widths.is_empty() {
            bail!("grid.half_widths must not be empty");
        }
    }
    for a in &cfg.analysis.annuli_fractions {
        if !(0.0 < a[0] && a[0] < a[1] && a[1] <= 1.0) {
            bail!("annuli fractions must satisfy 0 < lo < hi <= 1");
        }
    }
    Ok(())
}

/// Serialized form of the fully resolved configuration, written into every
/// output directory; its SHA-256 is the run identity.
pub fn resolved_toml(cfg: &Config) -> anyhow::Result<String> {
    Ok(toml::to_string_pretty(cfg)?)
}

pub fn config_hash(resolved: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(resolved.as_bytes());
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
