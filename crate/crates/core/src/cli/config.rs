use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chern::DEFAULT_FRACTIONS;
use crate::deform::{ContinuumSpec, TrackingOptions};
use crate::error::{Error, Result};
use crate::frames::{DichotomyOptions, SeedProfile};
use crate::model::ModelSpec;
use crate::operators::AtomicPotential;
use crate::spectral::Backend;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub model: ModelSpec,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default)]
    pub spectral: SpectralSpec,
    #[serde(default)]
    pub frames: FramesSpec,
    #[serde(default)]
    pub chern: ChernSpec,
    #[serde(default)]
    pub deform: DeformSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// Edge length of the cube `[0, size]^d`.
    pub size: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { size: 24.0 }
    }
}

/// Choice of `Delta`: an explicit interval, or everything below a gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSpec {
    #[serde(default)]
    pub gap_index: usize,
    #[serde(default = "half")]
    pub min_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default = "eigensum")]
    pub backend: Backend,
}

fn half() -> f64 {
    0.5
}

fn eigensum() -> Backend {
    Backend::EigenSum
}

impl Default for SpectralSpec {
    fn default() -> Self {
        Self { gap_index: 0, min_gap: 0.5, interval: None, backend: Backend::EigenSum }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesSpec {
    /// Seed of the Parseval frame, translated to every point.
    #[serde(default = "frame_seed")]
    pub seed: SeedProfile,
    /// Seeds per translate centre; by default the smallest count covering the rank.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds_per_cell: Option<usize>,
    #[serde(default = "basis_seed")]
    pub basis_seed: SeedProfile,
    /// Coarse grid of the Wannier-basis centres.
    #[serde(default = "basis_cell")]
    pub basis_cell: Vec<f64>,
    #[serde(default)]
    pub orbital: usize,
    #[serde(default = "windows")]
    pub windows: Vec<f64>,
    #[serde(default = "probes")]
    pub probes: usize,
    #[serde(default = "eps")]
    pub loewdin_eps: f64,
}

fn frame_seed() -> SeedProfile {
    SeedProfile::Gaussian { width: 0.3 }
}

fn basis_seed() -> SeedProfile {
    SeedProfile::Gaussian { width: 0.5 }
}

fn basis_cell() -> Vec<f64> {
    vec![1.0, 1.0]
}

fn windows() -> Vec<f64> {
    vec![12.0, 24.0]
}

fn probes() -> usize {
    100
}

fn eps() -> f64 {
    1e-10
}

impl Default for FramesSpec {
    fn default() -> Self {
        Self {
            seed: frame_seed(),
            seeds_per_cell: None,
            basis_seed: basis_seed(),
            basis_cell: basis_cell(),
            orbital: 0,
            windows: windows(),
            probes: probes(),
            loewdin_eps: eps(),
        }
    }
}

impl FramesSpec {
    pub fn dichotomy_options(&self, spectral: &SpectralSpec, chern: &ChernSpec) -> DichotomyOptions {
        DichotomyOptions {
            windows: self.windows.clone(),
            gap_index: spectral.gap_index,
            min_gap: spectral.min_gap,
            frame_seed: self.seed,
            basis_seed: self.basis_seed,
            basis_cell: self.basis_cell.clone(),
            orbital: self.orbital,
            loewdin_eps: self.loewdin_eps,
            fractions: chern.fractions.clone(),
            chern_tolerance: chern.tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChernSpec {
    #[serde(default = "fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "tolerance")]
    pub tolerance: f64,
    /// Momentum grid of the Bloch oracle.
    #[serde(default = "oracle_grid")]
    pub oracle_grid: usize,
}

fn fractions() -> Vec<f64> {
    DEFAULT_FRACTIONS.to_vec()
}

fn tolerance() -> f64 {
    0.05
}

fn oracle_grid() -> usize {
    24
}

impl Default for ChernSpec {
    fn default() -> Self {
        Self { fractions: fractions(), tolerance: tolerance(), oracle_grid: oracle_grid() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeformMode {
    Lattice,
    Field,
    Resolvent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformSpec {
    #[serde(default = "lattice")]
    pub mode: DeformMode,
    #[serde(default = "samples")]
    pub samples: usize,
    /// Radius of the jitter ball at the end of a lattice path.
    #[serde(default = "jitter")]
    pub jitter: f64,
    /// Field path `flux_k = (start + k step) / denominator`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_path: Option<FluxPath>,
    #[serde(default)]
    pub tracking: TrackingOptions,
    #[serde(default = "continuum")]
    pub continuum: ContinuumSpec,
    /// Spectral parameter of the continuum resolvent sweep.
    #[serde(default = "sweep_z")]
    pub sweep_z: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxPath {
    pub start: i64,
    pub step: i64,
    pub denominator: i64,
}

fn lattice() -> DeformMode {
    DeformMode::Lattice
}

fn samples() -> usize {
    11
}

fn jitter() -> f64 {
    0.05
}

fn continuum() -> ContinuumSpec {
    ContinuumSpec { potential: AtomicPotential::Bump { amplitude: 2.0, radius: 0.6 }, pitch: 0.2, flux: 0.05 }
}

fn sweep_z() -> [f64; 2] {
    [0.5, 0.5]
}

impl Default for DeformSpec {
    fn default() -> Self {
        Self {
            mode: lattice(),
            samples: samples(),
            jitter: jitter(),
            flux_path: None,
            tracking: TrackingOptions::default(),
            continuum: continuum(),
            sweep_z: sweep_z(),
        }
    }
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.into(), message: message.into() }
}

/// Parses a scalar written on the command line as a TOML value, falling back
/// to a plain string.
fn parse_value(text: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {text}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

/// Applies `key.path=value` to a TOML table, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment.split_once('=').ok_or_else(|| config_error(assignment, "override must look like key.path=value"))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_error(key, "empty path segment"));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| config_error(key, format!("`{part}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let key = e.span().map(|s| key_at(text, s.start)).unwrap_or_default();
            config_error(&key, e.message())
        })?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let key = e.path().to_string();
            config_error(&key, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error("", e.to_string()))
    }

    /// Module preconditions that can be checked before any computation.
    pub fn validate(&self) -> Result<()> {
        if !(self.window.size > 0.0) {
            return Err(config_error("window.size", "must be positive"));
        }
        if self.model.dim == 0 {
            return Err(config_error("model.dim", "must be positive"));
        }
        let c = self.model.cocycle()?;
        if self.model.periodic {
            for (key, size) in std::iter::once(("window.size", self.window.size)).chain(self.frames.windows.iter().map(|w| ("frames.windows", *w))) {
                c.check_torus(&vec![size; self.model.dim])
                    .map_err(|e| config_error(key, format!("torus of edge {size}: {e}")))?;
            }
        }
        if !(self.spectral.min_gap > 0.0) {
            return Err(config_error("spectral.min_gap", "must be positive"));
        }
        if let Some([lo, hi]) = self.spectral.interval {
            if !(lo < hi) {
                return Err(config_error("spectral.interval", "need lo < hi"));
            }
        }
        if self.chern.fractions.is_empty() || self.chern.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(config_error("chern.fractions", "fractions must lie in (0, 1]"));
        }
        if !(self.chern.tolerance > 0.0) {
            return Err(config_error("chern.tolerance", "must be positive"));
        }
        if self.frames.windows.is_empty() || self.frames.windows.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_error("frames.windows", "need a non-empty increasing list"));
        }
        for (key, s) in [("frames.seed", self.frames.seed), ("frames.basis_seed", self.frames.basis_seed)] {
            if !(s.width() > 0.0) {
                return Err(config_error(key, "width must be positive"));
            }
        }
        if self.frames.basis_cell.len() != self.model.dim || self.frames.basis_cell.iter().any(|c| !(*c > 0.0)) {
            return Err(config_error("frames.basis_cell", "need one positive spacing per dimension"));
        }
        if self.frames.orbital >= self.model.hopping.orbitals() {
            return Err(config_error("frames.orbital", "orbital index out of range"));
        }
        if self.frames.seeds_per_cell == Some(0) {
            return Err(config_error("frames.seeds_per_cell", "must be at least 1"));
        }
        if self.deform.samples < 2 {
            return Err(config_error("deform.samples", "a path needs at least two samples"));
        }
        if !(self.deform.jitter >= 0.0) {
            return Err(config_error("deform.jitter", "must be non-negative"));
        }
        if let Some(f) = self.deform.flux_path {
            if f.denominator <= 0 {
                return Err(config_error("deform.flux_path.denominator", "must be positive"));
            }
        }
        if self.deform.sweep_z[1] == 0.0 {
            return Err(config_error("deform.sweep_z", "imaginary part must be non-zero"));
        }
        if let Some([_, im]) = self.deform.tracking.resolvent_z {
            if im == 0.0 {
                return Err(config_error("deform.tracking.resolvent_z", "imaginary part must be non-zero"));
            }
        }
        Ok(())
    }
}

/// Dotted key of the innermost table header or assignment before `offset`.
fn key_at(text: &str, offset: usize) -> String {
    let mut section = String::new();
    let mut key = String::new();
    let mut pos = 0;
    for line in text.lines() {
        if pos > offset {
            break;
        }
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            section = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().to_string();
        }
        pos += line.len() + 1;
    }
    match (section.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => section,
        (false, false) => format!("{section}.{key}"),
    }
}
