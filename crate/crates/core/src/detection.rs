//! Destination-side combining and symbol decisions.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::modem::Constellation;
use crate::rislink::BranchObservation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Combining {
    /// Single relay branch.
    RelaySelection,
    /// Maximum ratio combining followed by a minimum-distance decision.
    Mrc,
    /// Joint minimum-distance decision over the vector of branches.
    MlVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionResult {
    pub symbol_index: usize,
    pub bits: Vec<u8>,
    pub scheme: Combining,
}

impl DetectionResult {
    fn new(symbol_index: usize, constellation: &Constellation, scheme: Combining) -> Self {
        DetectionResult {
            symbol_index,
            bits: constellation
                .demap(symbol_index)
                .expect("detector returns in-range indices"),
            scheme,
        }
    }
}

/// Index minimizing `metric(v)`; the lowest index wins ties.
fn argmin_by(m: usize, mut metric: impl FnMut(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_metric = f64::INFINITY;
    for v in 0..m {
        let d = metric(v);
        if d < best_metric {
            best_metric = d;
            best = v;
        }
    }
    best
}

/// Minimum-distance decision for `y ~ coef * x`.
pub fn nearest_symbol(y: Complex64, coef: Complex64, constellation: &Constellation) -> usize {
    let pts = constellation.points();
    argmin_by(pts.len(), |v| (y - coef * pts[v]).norm_sqr())
}

/// Joint ML decision over `L` branch observations with known effective gains.
pub fn ml_detect(
    y: &[Complex64],
    effective_gains: &[Complex64],
    constellation: &Constellation,
) -> Result<DetectionResult> {
    if y.is_empty() {
        return Err(Error::invalid("ML detection needs at least one branch"));
    }
    check_len(y.len(), effective_gains.len())?;
    let pts = constellation.points();
    let v = argmin_by(pts.len(), |v| {
        y.iter()
            .zip(effective_gains)
            .map(|(&yl, &gl)| (yl - gl * pts[v]).norm_sqr())
            .sum()
    });
    let scheme = if y.len() == 1 {
        Combining::RelaySelection
    } else {
        Combining::MlVector
    };
    Ok(DetectionResult::new(v, constellation, scheme))
}

/// `sum_l conj(g_l) * y_l`, each branch weighted by the conjugate of its
/// effective (path-loss inclusive) gain.
pub fn mrc_combine(observations: &[BranchObservation]) -> Result<Complex64> {
    if observations.is_empty() {
        return Err(Error::invalid("MRC needs at least one branch"));
    }
    Ok(observations
        .iter()
        .map(|o| o.effective_gain.conj() * o.y)
        .sum())
}

/// Gain seen by the transmitted symbol after [`mrc_combine`]: `sum_l |g_l|^2`.
pub fn mrc_coefficient(observations: &[BranchObservation]) -> Complex64 {
    observations
        .iter()
        .map(|o| o.effective_gain.conj() * o.effective_gain)
        .sum()
}

pub fn mrc_detect(
    y_mrc: Complex64,
    observations: &[BranchObservation],
    constellation: &Constellation,
) -> Result<DetectionResult> {
    if observations.is_empty() {
        return Err(Error::invalid("MRC needs at least one branch"));
    }
    let coef = mrc_coefficient(observations);
    Ok(DetectionResult::new(
        nearest_symbol(y_mrc, coef, constellation),
        constellation,
        Combining::Mrc,
    ))
}

/// Index of the relay with the lowest BER estimate; the lowest index wins ties.
pub fn select_best_relay(per_relay_ber: &[f64]) -> Result<usize> {
    if per_relay_ber.is_empty() {
        return Err(Error::invalid("relay selection needs at least one relay"));
    }
    if let Some(bad) = per_relay_ber.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(Error::invalid(format!("BER estimate out of range: {bad}")));
    }
    Ok(argmin_by(per_relay_ber.len(), |l| per_relay_ber[l]))
}
