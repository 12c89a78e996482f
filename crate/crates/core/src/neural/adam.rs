//! Adam optimizer without bias correction.

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::backprop::Gradients;
use super::network::DenseNetwork;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.003,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam decay rates must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// First and second moment estimates for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
    steps: u64,
}

impl AdamState {
    pub fn new(net: &DenseNetwork) -> Self {
        let w: Vec<_> = net.layers().iter().map(|l| Array2::zeros(l.weights.dim())).collect();
        let b: Vec<_> = net.layers().iter().map(|l| Array1::zeros(l.bias.len())).collect();
        AdamState {
            m_w: w.clone(),
            v_w: w,
            m_b: b.clone(),
            v_b: b,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

fn update<D: ndarray::Dimension>(
    param: &mut ndarray::Array<f64, D>,
    grad: &ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    cfg: &AdamConfig,
) {
    Zip::from(param).and(grad).and(m).and(v).for_each(|p, &g, m, v| {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        *p -= cfg.learning_rate * *m / (*v + cfg.epsilon).sqrt();
    });
}

/// One Adam update of every weight and bias in place:
/// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`, `p <- p - lr m / sqrt(v + eps)`.
pub fn adam_step(net: &mut DenseNetwork, grads: &Gradients, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    check_len(net.layers().len(), grads.weights.len())?;
    check_len(net.layers().len(), grads.biases.len())?;
    check_len(net.layers().len(), state.m_w.len())?;
    for (i, layer) in net.layers_mut().iter_mut().enumerate() {
        if layer.weights.dim() != grads.weights[i].dim() || layer.weights.dim() != state.m_w[i].dim() {
            return Err(Error::DimensionMismatch {
                expected: layer.weights.len(),
                actual: grads.weights[i].len(),
            });
        }
        check_len(layer.bias.len(), grads.biases[i].len())?;
        update(&mut layer.weights, &grads.weights[i], &mut state.m_w[i], &mut state.v_w[i], cfg);
        update(&mut layer.bias, &grads.biases[i], &mut state.m_b[i], &mut state.v_b[i], cfg);
    }
    state.steps += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::activation::Activation;
    use crate::neural::network::{DenseLayer, Head, InputTransform};
    use ndarray::array;

    fn scalar_net(w: f64) -> DenseNetwork {
        let layers = vec![DenseLayer {
            weights: array![[w]],
            bias: array![0.0],
            activation: Activation::Linear,
        }];
        DenseNetwork::from_layers(layers, Head::Regression, InputTransform::Identity).unwrap()
    }

    fn grads(gw: f64, gb: f64) -> Gradients {
        Gradients {
            weights: vec![array![[gw]]],
            biases: vec![array![gb]],
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = scalar_net(1.5);
        let mut st = AdamState::new(&net);
        let cfg = AdamConfig::default();
        for _ in 0..10 {
            adam_step(&mut net, &grads(0.0, 0.0), &mut st, &cfg).unwrap();
        }
        assert_eq!(net.layers()[0].weights[[0, 0]], 1.5);
        assert_eq!(st.steps(), 10);
    }

    #[test]
    fn first_step_matches_hand_computation() {
        let cfg = AdamConfig::default();
        let mut net = scalar_net(1.0);
        let mut st = AdamState::new(&net);
        let g = 2.0;
        adam_step(&mut net, &grads(g, 0.0), &mut st, &cfg).unwrap();
        let m = 0.1 * g;
        let v = 0.001 * g * g;
        let expect = 1.0 - 0.003 * m / (v + 1e-8f64).sqrt();
        assert!((net.layers()[0].weights[[0, 0]] - expect).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_step_approaches_learning_rate() {
        let cfg = AdamConfig::default();
        let mut net = scalar_net(0.0);
        let mut st = AdamState::new(&net);
        let mut prev = 0.0;
        let mut last_step = 0.0;
        for _ in 0..20000 {
            adam_step(&mut net, &grads(1.0, 0.0), &mut st, &cfg).unwrap();
            let w = net.layers()[0].weights[[0, 0]];
            last_step = prev - w;
            prev = w;
        }
        assert!((last_step - cfg.learning_rate).abs() < 1e-6, "{last_step}");
    }

    #[test]
    fn rejects_mismatched_gradients_and_bad_config() {
        let mut net = scalar_net(0.0);
        let mut st = AdamState::new(&net);
        let bad = Gradients { weights: vec![array![[1.0, 2.0]]], biases: vec![array![0.0]] };
        assert!(adam_step(&mut net, &bad, &mut st, &AdamConfig::default()).is_err());
        assert!(AdamConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(AdamConfig { beta1: 1.0, ..Default::default() }.validate().is_err());
        assert!(AdamConfig::default().validate().is_ok());
    }
}
