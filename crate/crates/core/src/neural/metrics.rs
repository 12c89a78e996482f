use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Root mean squared error over every element.
pub fn rmse(predictions: &Array2<f64>, targets: &Array2<f64>) -> Result<f64> {
    check_len(targets.nrows(), predictions.nrows())?;
    check_len(targets.ncols(), predictions.ncols())?;
    if targets.is_empty() {
        return Err(Error::invalid("RMSE of an empty set"));
    }
    let sq: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / targets.len() as f64).sqrt())
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[usize], targets: &[usize]) -> Result<f64> {
    check_len(targets.len(), predicted.len())?;
    if targets.is_empty() {
        return Err(Error::invalid("accuracy of an empty set"));
    }
    let hits = predicted.iter().zip(targets).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / targets.len() as f64)
}

/// Counts indexed `[target][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_labels(classes: usize, predicted: &[usize], targets: &[usize]) -> Result<Self> {
        check_len(targets.len(), predicted.len())?;
        let mut cm = Self::new(classes);
        for (&p, &t) in predicted.iter().zip(targets) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, target: usize, predicted: usize) -> Result<()> {
        let k = self.classes();
        if target >= k || predicted >= k {
            return Err(Error::invalid(format!("label out of range for {k} classes")));
        }
        self.counts[target][predicted] += 1;
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Entries as a percentage of all recorded samples.
    pub fn percentages(&self) -> Vec<Vec<f64>> {
        let total = self.total().max(1) as f64;
        self.counts
            .iter()
            .map(|row| row.iter().map(|&c| 100.0 * c as f64 / total).collect())
            .collect()
    }

    pub fn accuracy(&self) -> f64 {
        let diag: u64 = (0..self.classes()).map(|i| self.counts[i][i]).sum();
        diag as f64 / self.total().max(1) as f64
    }
}
