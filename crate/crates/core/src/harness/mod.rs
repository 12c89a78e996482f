//! Scenario configuration, model training and BER simulation.

pub mod config;
pub mod engine;
pub mod figures;
pub mod models;
pub mod scheme;

pub use config::{DestinationInput, RelayInput, RelaySpec, ScenarioConfig, TrainingConfig};
pub use figures::{default_output_dir, position_sweep, prepare_models, reproduce, Figure, PositionRow, ReproduceOptions};
pub use engine::{
    build_pool, curve, run_ber_point, run_sweep, save_ber_csv, simulate, snr_at_ber, write_ber_csv, BerRow, EngineOptions,
    SimulationSetup, BER_CSV_HEADER,
};
pub use models::{
    mode_name, train_destination_model, train_models, train_relay_model, write_confusion_csv, DestinationReport,
    ModelSet, TrainingReport,
};
pub use scheme::{DetectorMode, Scheme};
