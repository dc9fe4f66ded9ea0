//! Run configuration: TOML file with one section per scenario, flat
//! key-value entries, CLI/environment overrides for the output directory and
//! worker count.

use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::Deserialize;

use bsa_core::detection::DetectorModel;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Approx,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumericMode {
    Float,
    ExactRational,
}

fn default_models() -> Vec<String> {
    vec!["pnrd".into(), "bd".into(), "slow-pnrd".into(), "slow-bd".into()]
}

pub fn parse_model(name: &str) -> anyhow::Result<DetectorModel> {
    Ok(match name {
        "pnrd" => DetectorModel::Pnrd,
        "bd" => DetectorModel::Bd,
        "slow-pnrd" => DetectorModel::SlowPnrd,
        "slow-bd" => DetectorModel::SlowBd,
        other => bail!("unknown detector model '{other}'"),
    })
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "SweepSection::default_eta_d_min")]
    pub eta_d_min: f64,
    #[serde(default = "SweepSection::default_eta_d_max")]
    pub eta_d_max: f64,
    #[serde(default = "SweepSection::default_eta_d_steps")]
    pub eta_d_steps: usize,
    #[serde(default = "SweepSection::default_eta_a")]
    pub eta_a: Vec<f64>,
    #[serde(default = "default_eta_i")]
    pub eta_i: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
}

fn default_eta_i() -> f64 {
    0.01
}

fn default_xi() -> f64 {
    1e-5
}

impl SweepSection {
    fn default_eta_d_min() -> f64 {
        0.5
    }
    fn default_eta_d_max() -> f64 {
        1.0
    }
    fn default_eta_d_steps() -> usize {
        26
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            eta_d_min: Self::default_eta_d_min(),
            eta_d_max: Self::default_eta_d_max(),
            eta_d_steps: Self::default_eta_d_steps(),
            eta_a: Self::default_eta_a(),
            eta_i: default_eta_i(),
            xi: default_xi(),
            models: default_models(),
        }
    }
}

impl SweepSection {
    fn default_eta_a() -> Vec<f64> {
        vec![1.0]
    }

    pub fn eta_d_grid(&self) -> Vec<f64> {
        grid(self.eta_d_min, self.eta_d_max, self.eta_d_steps)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraysSection {
    #[serde(default = "ArraysSection::default_n_values")]
    pub n_values: Vec<u64>,
    #[serde(default = "ArraysSection::default_exact_max_enhanced")]
    pub exact_max_enhanced: u64,
    #[serde(default = "ArraysSection::default_exact_max_standard")]
    pub exact_max_standard: u64,
    #[serde(default = "default_eta_i")]
    pub eta_i: f64,
    #[serde(default = "ArraysSection::default_eta_d")]
    pub eta_d: f64,
    #[serde(default = "ArraysSection::default_eta_a")]
    pub eta_a: f64,
    #[serde(default = "ArraysSection::default_xi")]
    pub xi: Vec<f64>,
    #[serde(default = "ArraysSection::default_models")]
    pub models: Vec<String>,
}

impl ArraysSection {
    fn default_n_values() -> Vec<u64> {
        vec![1, 2, 3, 4, 5, 6, 8, 12, 16, 24, 32]
    }
    fn default_exact_max_enhanced() -> u64 {
        4
    }
    fn default_exact_max_standard() -> u64 {
        16
    }
    fn default_eta_d() -> f64 {
        1.0
    }
    fn default_eta_a() -> f64 {
        1.0
    }
    fn default_xi() -> Vec<f64> {
        vec![1e-5, 1e-6]
    }
    fn default_models() -> Vec<String> {
        vec!["bd".into(), "slow-bd".into()]
    }
}

impl Default for ArraysSection {
    fn default() -> Self {
        ArraysSection {
            n_values: Self::default_n_values(),
            exact_max_enhanced: Self::default_exact_max_enhanced(),
            exact_max_standard: Self::default_exact_max_standard(),
            eta_i: default_eta_i(),
            eta_d: Self::default_eta_d(),
            eta_a: Self::default_eta_a(),
            xi: Self::default_xi(),
            models: Self::default_models(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdcSection {
    #[serde(default = "SpdcSection::default_n_max")]
    pub n_max: u32,
    #[serde(default = "SpdcSection::default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "SpdcSection::default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "SpdcSection::default_tau_steps")]
    pub tau_steps: usize,
    /// Reference interaction parameter for the per-pair-number table.
    #[serde(default = "SpdcSection::default_tau_ref")]
    pub tau_ref: f64,
    #[serde(default = "SpdcSection::default_allow_truncation")]
    pub allow_truncation: bool,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
}

impl SpdcSection {
    fn default_n_max() -> u32 {
        6
    }
    fn default_tau_min() -> f64 {
        0.0
    }
    fn default_tau_max() -> f64 {
        1.2
    }
    fn default_tau_steps() -> usize {
        61
    }
    fn default_tau_ref() -> f64 {
        0.67
    }
    fn default_allow_truncation() -> bool {
        true
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        grid(self.tau_min, self.tau_max, self.tau_steps)
    }
}

impl Default for SpdcSection {
    fn default() -> Self {
        SpdcSection {
            n_max: Self::default_n_max(),
            tau_min: Self::default_tau_min(),
            tau_max: Self::default_tau_max(),
            tau_steps: Self::default_tau_steps(),
            tau_ref: Self::default_tau_ref(),
            allow_truncation: Self::default_allow_truncation(),
            models: default_models(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default = "ValidateSection::default_eta_d")]
    pub eta_d: Vec<f64>,
    #[serde(default = "ValidateSection::default_eta_a")]
    pub eta_a: Vec<f64>,
    #[serde(default = "default_eta_i")]
    pub eta_i: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
}

impl ValidateSection {
    fn default_eta_d() -> Vec<f64> {
        vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    }
    fn default_eta_a() -> Vec<f64> {
        vec![0.8, 1.0]
    }
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            eta_d: Self::default_eta_d(),
            eta_a: Self::default_eta_a(),
            eta_i: default_eta_i(),
            xi: default_xi(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output: Option<OutputSection>,
    #[serde(default)]
    pub numeric_mode: Option<NumericMode>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub arrays: Option<ArraysSection>,
    #[serde(default)]
    pub spdc: Option<SpdcSection>,
    #[serde(default)]
    pub validate: Option<ValidateSection>,
}

impl RunConfig {
    pub fn load(path: Option<&PathBuf>) -> anyhow::Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate_values()?;
        Ok(cfg)
    }

    pub fn validate_values(&self) -> anyhow::Result<()> {
        if let Some(s) = &self.sweep {
            validate_grid("sweep.eta_d", &s.eta_d_grid())?;
            validate_unit("sweep.eta_i", s.eta_i)?;
            for &a in &s.eta_a {
                validate_unit("sweep.eta_a", a)?;
            }
            for m in &s.models {
                parse_model(m)?;
            }
        }
        if let Some(a) = &self.arrays {
            if a.n_values.is_empty() {
                bail!("arrays.n_values must be non-empty");
            }
            if !a.n_values.windows(2).all(|w| w[0] < w[1]) {
                bail!("arrays.n_values must be strictly increasing");
            }
            for m in &a.models {
                parse_model(m)?;
            }
        }
        if let Some(s) = &self.spdc {
            validate_grid("spdc.tau", &s.tau_grid())?;
            for m in &s.models {
                parse_model(m)?;
            }
        }
        if let Some(v) = &self.validate {
            validate_grid("validate.eta_d", &v.eta_d)?;
            for &a in &v.eta_a {
                validate_unit("validate.eta_a", a)?;
            }
        }
        if self.numeric_mode == Some(NumericMode::ExactRational) {
            // Exact rationals exist only at ideal parameters; the sole
            // scenario guaranteed ideal is the maximum-rate table.
            let non_ideal = self.sweep.is_some() || self.validate.is_some();
            if non_ideal {
                bail!("numeric_mode = \"exact-rational\" only applies to ideal-parameter runs (table1, ideal arrays)");
            }
        }
        Ok(())
    }
}

fn validate_unit(name: &str, v: f64) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&v) {
        bail!("{name} = {v} outside [0, 1]");
    }
    Ok(())
}

fn validate_grid(name: &str, grid: &[f64]) -> anyhow::Result<()> {
    if grid.is_empty() {
        bail!("{name} grid is empty");
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) && grid.len() > 1 {
        bail!("{name} grid must be strictly increasing");
    }
    Ok(())
}

/// Evenly spaced grid with deterministic endpoints.
pub fn grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![min];
    }
    (0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
        .collect()
}
