use ndarray::{Array2, Axis};

use crate::error::{check_len, Error, Result};

/// Log arguments are clamped here so a zero probability gives a large finite loss.
pub const LOG_CLAMP: f64 = 1e-12;

fn check_shapes(a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    check_len(a.nrows(), b.nrows())?;
    check_len(a.ncols(), b.ncols())
}

/// `1/2 * sum_i ||t_i - o_i||^2` over the batch.
pub fn loss_regression(targets: &Array2<f64>, outputs: &Array2<f64>) -> Result<f64> {
    check_shapes(targets, outputs)?;
    Ok(0.5 * targets.iter().zip(outputs).map(|(t, o)| (t - o) * (t - o)).sum::<f64>())
}

/// Mean cross-entropy `-(1/s) sum_i sum_v t_iv ln(p_iv)`.
pub fn loss_crossentropy(one_hot: &Array2<f64>, probabilities: &Array2<f64>) -> Result<f64> {
    check_shapes(one_hot, probabilities)?;
    if probabilities.nrows() == 0 {
        return Err(Error::invalid("empty batch"));
    }
    for row in probabilities.axis_iter(Axis(0)) {
        let sum: f64 = row.sum();
        if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("cross-entropy needs probability rows summing to 1"));
        }
    }
    let s = probabilities.nrows() as f64;
    let total: f64 = one_hot
        .iter()
        .zip(probabilities)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, p)| t * p.max(LOG_CLAMP).ln())
        .sum();
    Ok(-total / s)
}
