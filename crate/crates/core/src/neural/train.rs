//! Mini-batch training with a held-out validation split.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::backprop::{batch_loss, forward_backward};
use super::metrics::{accuracy, rmse};
use super::network::{argmax, DenseNetwork, Head};
use crate::channel::{Purpose, RngStream};
use crate::error::{check_len, Error, Result};

/// Feature rows paired with target rows (one-hot rows for classification).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub targets: Array2<f64>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, targets: Array2<f64>) -> Result<Self> {
        check_len(features.nrows(), targets.nrows())?;
        Ok(Dataset { features, targets })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            targets: self.targets.select(Axis(0), rows),
        }
    }

    /// Class index of each one-hot target row.
    pub fn labels(&self) -> Vec<usize> {
        self.targets
            .axis_iter(Axis(0))
            .map(|r| argmax(r.as_slice().expect("row")))
            .collect()
    }

    /// Shuffled disjoint split into `(train, validation)` with
    /// `round(fraction * len)` validation rows.
    pub fn split<R: Rng + ?Sized>(&self, fraction: f64, rng: &mut R) -> Result<(Dataset, Dataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(format!("validation fraction {fraction} not in (0, 1)")));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(rng);
        let n_val = (fraction * self.len() as f64).round() as usize;
        let (val, train) = idx.split_at(n_val);
        Ok((self.select(train), self.select(val)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub validation_split: f64,
    pub validation_frequency: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            learning_rate: adam.learning_rate,
            batch_size: 256,
            iterations: 300,
            validation_split: 0.1,
            validation_frequency: 10,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(self.validation_split > 0.0 && self.validation_split < 1.0) {
            return Err(Error::invalid("validation split must lie in (0, 1)"));
        }
        if self.validation_frequency == 0 {
            return Err(Error::invalid("validation frequency must be at least 1"));
        }
        Ok(())
    }
}

/// Metrics after one mini-batch update. Losses are averaged per sample;
/// the metric is RMSE for regression and accuracy for classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub loss: f64,
    pub metric: f64,
    pub validation_loss: Option<f64>,
    pub validation_metric: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub head: Head,
    pub records: Vec<HistoryRecord>,
}

impl History {
    /// Last recorded validation metric.
    pub fn final_validation_metric(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.validation_metric)
    }

    pub fn final_metric(&self) -> Option<f64> {
        self.records.last().map(|r| r.metric)
    }

    pub fn metric_name(&self) -> &'static str {
        match self.head {
            Head::Regression => "rmse",
            Head::Classification => "accuracy",
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let m = self.metric_name();
        out.write_record([
            "iteration".to_string(),
            "loss".to_string(),
            m.to_string(),
            "validation_loss".to_string(),
            format!("validation_{m}"),
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            out.write_record([
                r.iteration.to_string(),
                r.loss.to_string(),
                r.metric.to_string(),
                opt(r.validation_loss),
                opt(r.validation_metric),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<history>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

fn per_sample_loss(head: Head, loss: f64, n: usize) -> f64 {
    match head {
        Head::Regression => loss / n as f64,
        Head::Classification => loss,
    }
}

fn metric(head: Head, out: &Array2<f64>, targets: ArrayView2<f64>) -> Result<f64> {
    match head {
        Head::Regression => rmse(out, &targets.to_owned()),
        Head::Classification => {
            let pred: Vec<usize> = out.axis_iter(Axis(0)).map(|r| argmax(r.as_slice().expect("row"))).collect();
            let tgt: Vec<usize> = targets.axis_iter(Axis(0)).map(|r| argmax(&r.to_vec())).collect();
            accuracy(&pred, &tgt)
        }
    }
}

/// Per-sample loss and metric of `net` on a whole dataset.
pub fn evaluate(net: &DenseNetwork, data: &Dataset) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty dataset"));
    }
    let out = net.forward_batch(data.features.view())?;
    let loss = batch_loss(net, data.features.view(), data.targets.view())?;
    Ok((
        per_sample_loss(net.head(), loss, data.len()),
        metric(net.head(), &out, data.targets.view())?,
    ))
}

/// Trains `net` in place for `config.iterations` mini-batch steps.
///
/// A `validation_split` fraction of the data is held out; validation metrics
/// are recorded every `validation_frequency` iterations and after the last.
/// Batches are drawn without replacement from a fresh shuffle each epoch.
pub fn train(net: &mut DenseNetwork, data: &Dataset, config: &TrainConfig) -> Result<History> {
    config.validate()?;
    if data.len() < 2 {
        return Err(Error::invalid("training needs at least two samples"));
    }
    check_len(net.input_dim(), data.features.ncols())?;
    check_len(net.output_dim(), data.targets.ncols())?;

    let mut split_rng = RngStream::derive(config.seed, Purpose::Split, &[]).rng();
    let (train_set, val_set) = data.split(config.validation_split, &mut split_rng)?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::invalid("dataset too small for the validation split"));
    }

    let adam = config.adam();
    let mut state = AdamState::new(net);
    let head = net.head();
    let batch = config.batch_size.min(train_set.len());
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    let mut epoch = 0u64;
    let mut records = Vec::with_capacity(config.iterations);

    for iteration in 1..=config.iterations {
        if cursor + batch > order.len() {
            order = (0..train_set.len()).collect();
            order.shuffle(&mut RngStream::derive(config.seed, Purpose::Shuffle, &[epoch]).rng());
            epoch += 1;
            cursor = 0;
        }
        let mb = train_set.select(&order[cursor..cursor + batch]);
        cursor += batch;

        let (loss, grads, out) = forward_backward(net, mb.features.view(), mb.targets.view())?;
        if !loss.is_finite() || !grads.norm().is_finite() {
            return Err(Error::Diverged { iteration, loss });
        }
        let m = metric(head, &out, mb.targets.view())?;
        adam_step(net, &grads, &mut state, &adam)?;

        let (validation_loss, validation_metric) =
            if iteration % config.validation_frequency == 0 || iteration == config.iterations {
                let (l, m) = evaluate(net, &val_set)?;
                if !l.is_finite() {
                    return Err(Error::Diverged { iteration, loss: l });
                }
                (Some(l), Some(m))
            } else {
                (None, None)
            };
        records.push(HistoryRecord {
            iteration,
            loss: per_sample_loss(head, loss, batch),
            metric: m,
            validation_loss,
            validation_metric,
        });
    }
    Ok(History { head, records })
}
