//! Training and persistence of the relay and destination networks.

use std::path::{Path, PathBuf};

use ndarray::Axis;
use rayon::prelude::*;

use super::config::{DestinationInput, RelayInput, ScenarioConfig};
use crate::channel::{Purpose, RngStream};
use crate::datasets::{
    build_destination_dataset, build_relay_dataset, CombiningMode, DestinationScenario, RELAY_FEATURES,
    RELAY_TARGETS,
};
use crate::error::{Error, Result};
use crate::modem::Constellation;
use crate::neural::{
    load_model, save_model, train, Architecture, ConfusionMatrix, DenseNetwork, Head, History, InputTransform,
    TrainConfig,
};

/// Trained networks for one scenario.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelSet {
    /// One phase network per relay, in relay order.
    pub relay: Vec<DenseNetwork>,
    pub destination_branch: Option<DenseNetwork>,
    pub destination_mrc: Option<DenseNetwork>,
}

impl ModelSet {
    pub fn destination(&self, mode: CombiningMode) -> Option<&DenseNetwork> {
        match mode {
            CombiningMode::Branch => self.destination_branch.as_ref(),
            CombiningMode::Mrc => self.destination_mrc.as_ref(),
        }
    }

    pub fn relay_file(dir: &Path, relay: usize) -> PathBuf {
        dir.join(format!("relay_{}.json", relay + 1))
    }

    pub fn destination_file(dir: &Path, mode: CombiningMode) -> PathBuf {
        dir.join(format!("destination_{}.json", mode_name(mode)))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (r, net) in self.relay.iter().enumerate() {
            save_model(net, &Self::relay_file(dir, r))?;
        }
        for mode in [CombiningMode::Branch, CombiningMode::Mrc] {
            if let Some(net) = self.destination(mode) {
                save_model(net, &Self::destination_file(dir, mode))?;
            }
        }
        Ok(())
    }

    /// Loads whatever models for `relays` relays exist in `dir`.
    pub fn load(dir: &Path, relays: usize) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::MissingModel(format!("model directory {} not found", dir.display())));
        }
        let mut set = ModelSet::default();
        for r in 0..relays {
            let p = Self::relay_file(dir, r);
            if p.exists() {
                set.relay.push(load_model(&p)?);
            }
        }
        if !set.relay.is_empty() && set.relay.len() != relays {
            return Err(Error::MissingModel(format!(
                "found {} of {relays} relay models in {}",
                set.relay.len(),
                dir.display()
            )));
        }
        let load_opt = |mode| {
            let p = Self::destination_file(dir, mode);
            if p.exists() {
                load_model(&p).map(Some)
            } else {
                Ok(None)
            }
        };
        set.destination_branch = load_opt(CombiningMode::Branch)?;
        set.destination_mrc = load_opt(CombiningMode::Mrc)?;
        Ok(set)
    }
}

pub fn mode_name(mode: CombiningMode) -> &'static str {
    match mode {
        CombiningMode::Branch => "branch",
        CombiningMode::Mrc => "mrc",
    }
}

/// Outcome of training one destination network.
#[derive(Debug, Clone, PartialEq)]
pub struct DestinationReport {
    pub mode: CombiningMode,
    pub history: History,
    pub confusion_snr_db: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub models: ModelSet,
    pub relay_histories: Vec<History>,
    pub destinations: Vec<DestinationReport>,
}

impl TrainingReport {
    /// Writes models, training histories and confusion matrices under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        self.models.save(dir)?;
        for (r, h) in self.relay_histories.iter().enumerate() {
            h.save_csv(&dir.join(format!("relay_{}_history.csv", r + 1)))?;
        }
        for d in &self.destinations {
            let name = mode_name(d.mode);
            d.history.save_csv(&dir.join(format!("destination_{name}_history.csv")))?;
            write_confusion_csv(&d.confusion, &dir.join(format!("destination_{name}_confusion.csv")))?;
        }
        Ok(())
    }
}

/// Confusion matrix as CSV: one row per target class, one percentage column
/// per predicted class, then the overall accuracy in percent.
pub fn write_confusion_csv(cm: &ConfusionMatrix, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    let k = cm.classes();
    let mut header = vec!["target".to_string()];
    header.extend((0..k).map(|c| format!("pred_{c}")));
    w.write_record(&header)?;
    for (t, row) in cm.percentages().iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    let mut last = vec!["accuracy".to_string(), (100.0 * cm.accuracy()).to_string()];
    last.resize(k + 1, String::new());
    w.write_record(&last)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn sub_seed(seed: u64, tag: u64, index: u64) -> u64 {
    RngStream::derive(seed, Purpose::Misc, &[tag, index]).stream_id
}

const TAG_RELAY_DATA: u64 = 1;
const TAG_RELAY_TRAIN: u64 = 2;
const TAG_DEST_DATA: u64 = 3;
const TAG_DEST_TRAIN: u64 = 4;
const TAG_DEST_CONFUSION: u64 = 5;

/// Trains the phase network of relay `relay`.
pub fn train_relay_model(cfg: &ScenarioConfig, relay: usize) -> Result<(DenseNetwork, History)> {
    let t = &cfg.training;
    let data = build_relay_dataset(t.relay_samples, relay, sub_seed(cfg.seed, TAG_RELAY_DATA, relay as u64))?;
    let arch = Architecture {
        hidden: t.relay_hidden.clone(),
        activation: t.relay_activation,
    };
    let mut init = RngStream::derive(cfg.seed, Purpose::Init, &[relay as u64]).rng();
    let transform = match t.relay_input {
        RelayInput::Raw => InputTransform::Identity,
        RelayInput::Unit => InputTransform::UnitComplexPairs,
    };
    let mut net = DenseNetwork::new(RELAY_FEATURES, &arch, RELAY_TARGETS, Head::Regression, &mut init)?
        .with_input_transform(transform);
    let tc = TrainConfig {
        seed: sub_seed(cfg.seed, TAG_RELAY_TRAIN, relay as u64),
        ..t.relay
    };
    let history = train(&mut net, &data, &tc)?;
    Ok((net, history))
}

fn destination_scenario(cfg: &ScenarioConfig, mode: CombiningMode, snr_db: Vec<f64>) -> Result<DestinationScenario> {
    Ok(DestinationScenario {
        m: cfg.m,
        relays: cfg.relay_sites()?,
        snr_db,
        phase_mode: cfg.training.destination_phase_mode,
        combining: mode,
    })
}

/// Trains the destination classifier for `mode`, using `relay` networks when
/// the destination data is generated with network phases.
pub fn train_destination_model(
    cfg: &ScenarioConfig,
    mode: CombiningMode,
    relay: &[DenseNetwork],
) -> Result<(DestinationReport, DenseNetwork)> {
    let t = &cfg.training;
    let tag = match mode {
        CombiningMode::Branch => 0,
        CombiningMode::Mrc => 1,
    };
    let snrs = match t.destination_snr_db {
        Some(s) => vec![s],
        None => cfg.snr_grid_db.clone(),
    };
    let scenario = destination_scenario(cfg, mode, snrs)?;
    let data = build_destination_dataset(
        t.destination_samples,
        &scenario,
        relay,
        sub_seed(cfg.seed, TAG_DEST_DATA, tag),
    )?;
    let transform = match t.destination_input {
        DestinationInput::Raw => InputTransform::Identity,
        DestinationInput::Unit => InputTransform::UnitComplexPairs,
        DestinationInput::Scale => {
            let ms = data.features.mapv(|v| v * v).sum_axis(Axis(1)).mean().unwrap_or(1.0);
            InputTransform::Scale {
                factor: if ms > 0.0 { ms.sqrt().recip() } else { 1.0 },
            }
        }
    };
    let arch = Architecture {
        hidden: t.destination_hidden.clone(),
        activation: t.destination_activation,
    };
    let mut init = RngStream::derive(cfg.seed, Purpose::Init, &[1000 + tag]).rng();
    let classes = Constellation::new(cfg.m)?.class_count();
    let mut net =
        DenseNetwork::new(2, &arch, classes, Head::Classification, &mut init)?.with_input_transform(transform);
    let tc = TrainConfig {
        seed: sub_seed(cfg.seed, TAG_DEST_TRAIN, tag),
        ..t.destination
    };
    let history = train(&mut net, &data, &tc)?;

    let confusion_snr_db = t
        .confusion_snr_db
        .unwrap_or_else(|| *cfg.snr_grid_db.last().expect("validated grid"));
    let eval = build_destination_dataset(
        t.confusion_samples,
        &destination_scenario(cfg, mode, vec![confusion_snr_db])?,
        relay,
        sub_seed(cfg.seed, TAG_DEST_CONFUSION, tag),
    )?;
    let predicted = net.predict_classes(eval.features.view())?;
    let confusion = ConfusionMatrix::from_labels(classes, &predicted, &eval.labels())?;
    let report = DestinationReport {
        mode,
        history,
        confusion_snr_db,
        confusion,
    };
    Ok((report, net))
}

/// Trains every network the configured schemes need. Relay networks train
/// concurrently on `pool`, each on its own deterministic stream.
pub fn train_models(cfg: &ScenarioConfig, pool: &rayon::ThreadPool) -> Result<TrainingReport> {
    cfg.validate()?;
    let l = cfg.relays.len();
    let relay_results: Vec<Result<(DenseNetwork, History)>> = if cfg.needs_relay_models() {
        pool.install(|| (0..l).into_par_iter().map(|r| train_relay_model(cfg, r)).collect())
    } else {
        Vec::new()
    };
    let mut models = ModelSet::default();
    let mut relay_histories = Vec::new();
    for r in relay_results {
        let (net, h) = r?;
        models.relay.push(net);
        relay_histories.push(h);
    }

    let mut modes: Vec<CombiningMode> = cfg.schemes.iter().filter_map(|s| s.destination_model()).collect();
    modes.sort_by_key(|m| mode_name(*m));
    modes.dedup();
    let mut destinations = Vec::new();
    for mode in modes {
        let (report, net) = train_destination_model(cfg, mode, &models.relay)?;
        match mode {
            CombiningMode::Branch => models.destination_branch = Some(net),
            CombiningMode::Mrc => models.destination_mrc = Some(net),
        }
        destinations.push(report);
    }
    Ok(TrainingReport {
        models,
        relay_histories,
        destinations,
    })
}
