//! Reverse-mode gradients of the training losses.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::activation::Activation;
use super::loss::{loss_crossentropy, loss_regression};
use super::network::{DenseNetwork, Head};
use crate::error::{check_len, Result};

/// Per-layer parameter gradients, shaped like the layers they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    /// Euclidean norm over every parameter.
    pub fn norm(&self) -> f64 {
        let w: f64 = self.weights.iter().flat_map(|w| w.iter()).map(|g| g * g).sum();
        let b: f64 = self.biases.iter().flat_map(|b| b.iter()).map(|g| g * g).sum();
        (w + b).sqrt()
    }

    /// All gradient entries, layer by layer, weights (row-major) before biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

/// Loss of the network on a batch under its head's training loss.
pub fn batch_loss(net: &DenseNetwork, x: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<f64> {
    let out = net.forward_batch(x)?;
    let t = targets.to_owned();
    match net.head() {
        Head::Regression => loss_regression(&t, &out),
        Head::Classification => loss_crossentropy(&t, &out),
    }
}

/// Loss and its gradient with respect to every weight and bias.
///
/// Regression uses `1/2 sum ||t - o||^2`, classification the mean
/// cross-entropy over softmax outputs.
pub fn loss_and_gradients(
    net: &DenseNetwork,
    x: ArrayView2<f64>,
    targets: ArrayView2<f64>,
) -> Result<(f64, Gradients)> {
    forward_backward(net, x, targets).map(|(loss, g, _)| (loss, g))
}

/// As [`loss_and_gradients`], also returning the network outputs.
pub(crate) fn forward_backward(
    net: &DenseNetwork,
    x: ArrayView2<f64>,
    targets: ArrayView2<f64>,
) -> Result<(f64, Gradients, Array2<f64>)> {
    check_len(net.input_dim(), x.ncols())?;
    check_len(x.nrows(), targets.nrows())?;
    check_len(net.output_dim(), targets.ncols())?;

    let layers = net.layers();
    let input = net.input_transform().apply(x);
    let mut pre = Vec::with_capacity(layers.len());
    let mut post: Vec<Array2<f64>> = Vec::with_capacity(layers.len() + 1);
    post.push(input);
    for layer in layers {
        let z = layer.affine(&post.last().expect("input").view());
        let mut a = z.clone();
        layer.activation.apply(&mut a);
        pre.push(z);
        post.push(a);
    }

    let out = post.last().expect("output").clone();
    let t = targets.to_owned();
    let s = x.nrows() as f64;
    let (loss, mut delta) = match net.head() {
        Head::Regression => (loss_regression(&t, &out)?, &out - &t),
        Head::Classification => (loss_crossentropy(&t, &out)?, (&out - &t) / s),
    };

    let k = layers.len();
    let mut weights = vec![Array2::zeros((0, 0)); k];
    let mut biases = vec![Array1::zeros(0); k];
    for i in (0..k).rev() {
        weights[i] = delta.t().dot(&post[i]);
        biases[i] = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut next = delta.dot(&layers[i].weights);
            let act = layers[i - 1].activation;
            debug_assert_ne!(act, Activation::Softmax);
            act.backprop_inplace(&mut next, &pre[i - 1], &post[i]);
            delta = next;
        }
    }
    Ok((loss, Gradients { weights, biases }, out))
}
