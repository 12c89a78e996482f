//! TOML scenario configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scheme::Scheme;
use crate::datasets::PhaseMode;
use crate::error::{Error, Result};
use crate::geometry::RelaySite;
use crate::modem::Constellation;
use crate::neural::{Activation, TrainConfig};

/// One relay: distance from the source, angle at the relay and surface size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaySpec {
    pub d_sr: f64,
    #[serde(default = "default_theta_deg")]
    pub theta_deg: f64,
    pub n_reflectors: usize,
}

fn default_theta_deg() -> f64 {
    90.0
}

/// How relay-network inputs are preprocessed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelayInput {
    /// Features as drawn.
    Raw,
    /// Each channel coefficient rescaled to unit modulus.
    Unit,
}

/// How destination-network inputs are preprocessed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DestinationInput {
    /// Features as received.
    Raw,
    /// Features multiplied by the inverse RMS amplitude of the training set.
    Scale,
    /// The received value rescaled to unit modulus.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub relay_samples: usize,
    pub relay_hidden: Vec<usize>,
    pub relay_activation: Activation,
    pub relay_input: RelayInput,
    pub relay: TrainConfig,
    pub destination_samples: usize,
    pub destination_hidden: Vec<usize>,
    pub destination_activation: Activation,
    pub destination_input: DestinationInput,
    /// Train the destination network at this SNR only, instead of across the grid.
    pub destination_snr_db: Option<f64>,
    pub destination_phase_mode: PhaseMode,
    pub destination: TrainConfig,
    /// Operating point of the destination confusion matrix; defaults to the top of the grid.
    pub confusion_snr_db: Option<f64>,
    pub confusion_samples: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            relay_samples: 100_000,
            relay_hidden: vec![256; 4],
            relay_activation: Activation::Relu,
            relay_input: RelayInput::Unit,
            relay: TrainConfig {
                iterations: 300,
                ..TrainConfig::default()
            },
            destination_samples: 45_000,
            destination_hidden: vec![256; 4],
            destination_activation: Activation::Relu,
            destination_input: DestinationInput::Unit,
            destination_snr_db: None,
            destination_phase_mode: PhaseMode::Dnn,
            destination: TrainConfig {
                iterations: 150,
                ..TrainConfig::default()
            },
            confusion_snr_db: None,
            confusion_samples: 10_000,
        }
    }
}

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Modulation order.
    pub m: usize,
    /// Path-loss exponent.
    pub c: f64,
    pub relays: Vec<RelaySpec>,
    pub snr_grid_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_min_bit_errors")]
    pub min_bit_errors: u64,
    #[serde(default = "default_max_bits")]
    pub max_bits: u64,
    #[serde(default)]
    pub training: TrainingConfig,
}

fn default_name() -> String {
    "scenario".to_string()
}

fn default_seed() -> u64 {
    1
}

fn default_min_bit_errors() -> u64 {
    200
}

fn default_max_bits() -> u64 {
    10_000_000
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        Constellation::new(self.m).map_err(|e| Error::Config(e.to_string()))?;
        if self.relays.is_empty() {
            return Err(Error::Config("at least one relay is required".into()));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("the SNR grid is empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| s.is_nan()) || self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("the SNR grid must be strictly increasing".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if self.min_bit_errors == 0 || self.max_bits == 0 {
            return Err(Error::Config("min_bit_errors and max_bits must be positive".into()));
        }
        self.relay_sites()?;
        let t = &self.training;
        if t.relay_samples < 2 || t.destination_samples < 2 || t.confusion_samples == 0 {
            return Err(Error::Config("training sample counts are too small".into()));
        }
        if t.relay_hidden.contains(&0) || t.destination_hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        if t.relay_activation == Activation::Softmax || t.destination_activation == Activation::Softmax {
            return Err(Error::Config("softmax cannot be a hidden activation".into()));
        }
        t.relay.validate().map_err(|e| Error::Config(format!("relay training: {e}")))?;
        t.destination
            .validate()
            .map_err(|e| Error::Config(format!("destination training: {e}")))?;
        Ok(())
    }

    pub fn relay_sites(&self) -> Result<Vec<RelaySite>> {
        self.relays
            .iter()
            .enumerate()
            .map(|(i, r)| {
                RelaySite::new(r.d_sr, r.theta_deg.to_radians(), self.c, r.n_reflectors)
                    .map_err(|e| Error::Config(format!("relay {}: {e}", i + 1)))
            })
            .collect()
    }

    /// Whether any selected scheme uses relay-network phases.
    pub fn needs_relay_models(&self) -> bool {
        self.schemes.iter().any(|s| s.phase_mode() == PhaseMode::Dnn)
            || (self.training.destination_phase_mode == PhaseMode::Dnn
                && self.schemes.iter().any(|s| s.destination_model().is_some()))
    }
}
