use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
            Activation::Softmax => "softmax",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "linear" => Some(Activation::Linear),
            "softmax" => Some(Activation::Softmax),
            _ => None,
        }
    }

    /// Applies the activation to a batch of pre-activations (one sample per row), in place.
    pub fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(relu),
            Activation::Tanh => z.mapv_inplace(tanh_act),
            Activation::Linear => {}
            Activation::Softmax => {
                for mut row in z.axis_iter_mut(Axis(0)) {
                    let p = softmax(row.view());
                    row.assign(&ArrayView1::from(&p));
                }
            }
        }
    }

    /// Multiplies `grad` by the elementwise derivative, given the activation
    /// output `a` (and pre-activation `z` for ReLU). Not defined for softmax,
    /// whose gradient is folded into the cross-entropy loss.
    pub(crate) fn backprop_inplace(self, grad: &mut Array2<f64>, z: &Array2<f64>, a: &Array2<f64>) {
        match self {
            Activation::Relu => {
                ndarray::Zip::from(grad).and(z).for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0
                    }
                });
            }
            Activation::Tanh => {
                ndarray::Zip::from(grad).and(a).for_each(|g, &a| *g *= 1.0 - a * a);
            }
            Activation::Linear => {}
            Activation::Softmax => unreachable!("softmax is only used as the classification output"),
        }
    }
}

pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

pub fn tanh_act(z: f64) -> f64 {
    z.tanh()
}

/// Numerically stable softmax of one vector.
pub fn softmax(z: ArrayView1<f64>) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
