//! Fully-connected feedforward network.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Regression,
    Classification,
}

/// Fixed preprocessing applied to raw features before the first layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputTransform {
    #[default]
    Identity,
    /// Multiply every feature by `factor`.
    Scale { factor: f64 },
    /// Treat features as consecutive `(re, im)` pairs and rescale each pair to
    /// unit modulus. Pairs that are exactly zero stay zero.
    UnitComplexPairs,
}

impl InputTransform {
    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        match *self {
            InputTransform::Identity => {}
            InputTransform::Scale { factor } => out.mapv_inplace(|v| v * factor),
            InputTransform::UnitComplexPairs => {
                for mut row in out.axis_iter_mut(Axis(0)) {
                    let row = row.as_slice_mut().expect("standard layout");
                    for pair in row.chunks_exact_mut(2) {
                        let r = pair[0].hypot(pair[1]);
                        if r > 0.0 {
                            pair[0] /= r;
                            pair[1] /= r;
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `outputs x inputs`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    /// Pre-activations for a batch laid out one sample per row.
    pub(crate) fn affine(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t());
        z += &self.bias;
        z
    }
}

/// Hidden-layer layout of a network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    /// Four hidden layers of 256 ReLU units.
    pub fn default_deep() -> Self {
        Architecture {
            hidden: vec![256; 4],
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork {
    layers: Vec<DenseLayer>,
    head: Head,
    input_transform: InputTransform,
}

impl DenseNetwork {
    /// Assembles a network from explicit layers, checking that dimensions
    /// chain and that the output activation matches the head.
    pub fn from_layers(layers: Vec<DenseLayer>, head: Head, input_transform: InputTransform) -> Result<Self> {
        let last = layers
            .last()
            .ok_or_else(|| Error::invalid("a network needs at least one layer"))?;
        match (head, last.activation) {
            (Head::Regression, Activation::Linear) | (Head::Classification, Activation::Softmax) => {}
            (h, a) => {
                return Err(Error::invalid(format!(
                    "{h:?} head cannot end in a {} layer",
                    a.name()
                )))
            }
        }
        for (k, layer) in layers.iter().enumerate() {
            check_len(layer.outputs(), layer.bias.len())?;
            if k + 1 < layers.len() && layer.activation == Activation::Softmax {
                return Err(Error::invalid("softmax is only allowed on the output layer"));
            }
            if k > 0 {
                check_len(layers[k - 1].outputs(), layer.inputs())?;
            }
        }
        Ok(DenseNetwork {
            layers,
            head,
            input_transform,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(
        inputs: usize,
        architecture: &Architecture,
        outputs: usize,
        head: Head,
        rng: &mut R,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 || architecture.hidden.contains(&0) {
            return Err(Error::invalid("layer sizes must be positive"));
        }
        if architecture.activation == Activation::Softmax {
            return Err(Error::invalid("softmax cannot be a hidden activation"));
        }
        let mut sizes = vec![inputs];
        sizes.extend(&architecture.hidden);
        sizes.push(outputs);
        let out_act = match head {
            Head::Regression => Activation::Linear,
            Head::Classification => Activation::Softmax,
        };
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || rng.random_range(-r..=r));
                DenseLayer {
                    weights,
                    bias: Array1::zeros(fan_out),
                    activation: if k + 2 == sizes.len() { out_act } else { architecture.activation },
                }
            })
            .collect();
        Self::from_layers(layers, head, InputTransform::Identity)
    }

    pub fn with_input_transform(mut self, t: InputTransform) -> Self {
        self.input_transform = t;
        self
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_transform(&self) -> InputTransform {
        self.input_transform
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.outputs()).unwrap_or(0)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Forward pass for a batch, one sample per row.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_len(self.input_dim(), x.ncols())?;
        let mut a = self.input_transform.apply(x);
        for layer in &self.layers {
            let mut z = layer.affine(&a.view());
            layer.activation.apply(&mut z);
            a = z;
        }
        Ok(a)
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Most probable class per row (classification head).
    pub fn predict_classes(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        let p = self.forward_batch(x)?;
        Ok(p.axis_iter(Axis(0)).map(|row| argmax(row.as_slice().expect("row"))).collect())
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
