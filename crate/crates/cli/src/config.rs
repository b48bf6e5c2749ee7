//! Experiment configuration files.

use std::path::{Path, PathBuf};

use qrlcs_core::metrology::{Granularity, PriorSpec, DEFAULT_DELTA};
use qrlcs_core::spin_model::{critical_field, MXY_DEFAULT_J_INTER};
use qrlcs_core::statevector::Basis;
use qrlcs_core::{ModelKind, ModelSpec, NoiseConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// XY anisotropy used when a config leaves it out.
pub const DEFAULT_XY_GAMMA: f64 = 0.05;
/// Field of the off-critical comparison probe.
pub const NONCRITICAL_FIELD: f64 = 1.5;

/// A chain without a length. Unset fields take per-model defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Control field; defaults to the critical field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_intra: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_inter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_field: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Ising,
            gamma: None,
            field: None,
            j_intra: None,
            j_inter: None,
            critical_field: None,
        }
    }
}

impl ModelConfig {
    /// The chain at length `l`, sitting at its control field.
    pub fn spec(&self, l: usize) -> ModelSpec {
        let gamma = self.gamma.unwrap_or(match self.kind {
            ModelKind::Ising => 1.0,
            ModelKind::Xy | ModelKind::Mxy => DEFAULT_XY_GAMMA,
        });
        let (j_intra, j_inter) = match self.kind {
            ModelKind::Mxy => (
                self.j_intra.unwrap_or(1.0),
                self.j_inter.unwrap_or(MXY_DEFAULT_J_INTER),
            ),
            _ => (1.0, 1.0),
        };
        let mut spec = match self.kind {
            ModelKind::Ising => ModelSpec::ising(l, 0.0),
            ModelKind::Xy => ModelSpec::xy(l, gamma, 0.0),
            ModelKind::Mxy => ModelSpec::mxy(l, gamma, 0.0, j_intra, j_inter),
        };
        spec.critical_field = self.critical_field;
        let field = self.field.unwrap_or_else(|| critical_field(&spec));
        spec.with_field(field)
    }

    pub fn critical_field(&self) -> f64 {
        critical_field(&self.spec(2))
    }
}

/// Measurement used for classical Fisher information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    #[serde(default = "default_basis")]
    pub basis: Basis,
    #[serde(default)]
    pub granularity: Granularity,
}

fn default_basis() -> Basis {
    Basis::X
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self { basis: Basis::X, granularity: Granularity::Bitstring }
    }
}

/// Grid for the noise sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSweepConfig {
    pub sigmas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub shots: usize,
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        Self {
            sigmas: vec![0.0, 0.025, 0.05, 0.1],
            lambdas: vec![0.0, 0.01],
            shots: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sweep: Option<NoiseSweepConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    pub measurement: MeasurementConfig,
    pub l_grid: Vec<usize>,
    pub delta: f64,
    pub tau_m: f64,
    pub total_time: f64,
    pub output_dir: PathBuf,
    /// Master seed; overrides the seeds of the training and noise sections.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            noise: None,
            noise_sweep: None,
            prior: None,
            measurement: MeasurementConfig::default(),
            l_grid: (4..=12).collect(),
            delta: DEFAULT_DELTA,
            tau_m: 1.0,
            total_time: 1e4,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies the master seed to every seeded section.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        if let Some(n) = self.noise.as_mut() {
            n.seed = seed;
        }
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.l_grid.is_empty() {
            return Err(CliError::Validation("l_grid must not be empty".into()));
        }
        if self.l_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Validation(
                "l_grid must be strictly ascending".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(CliError::Validation(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.tau_m > 0.0 && self.total_time > 0.0) {
            return Err(CliError::Validation(
                "tau_m and total_time must be positive".into(),
            ));
        }
        for &l in &self.l_grid {
            self.model.spec(l).validate()?;
        }
        self.model.spec(self.train.l_train).validate()?;
        self.train.validate()?;
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if let Some(p) = &self.prior {
            p.validate()?;
        }
        if let Some(s) = &self.noise_sweep {
            if s.shots == 0 || s.sigmas.is_empty() || s.lambdas.is_empty() {
                return Err(CliError::Validation(
                    "noise_sweep needs shots > 0 and non-empty sigma/lambda grids".into(),
                ));
            }
            if s.sigmas.iter().chain(&s.lambdas).any(|x| !(*x >= 0.0)) {
                return Err(CliError::Validation(
                    "noise_sweep levels must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
