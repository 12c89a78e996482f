//! JSON model files.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::network::{DenseLayer, DenseNetwork, Head, InputTransform};
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    /// Row-major `outputs x inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    head: Head,
    input_transform: InputTransform,
    layers: Vec<LayerFile>,
}

pub fn model_to_json(net: &DenseNetwork) -> String {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        head: net.head(),
        input_transform: net.input_transform(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerFile {
                inputs: l.inputs(),
                outputs: l.outputs(),
                activation: l.activation,
                weights: l.weights.iter().copied().collect(),
                bias: l.bias.to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<DenseNetwork> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: "<model>".into(),
        message: e.to_string(),
    })?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::invalid(format!(
            "unsupported model schema version {}",
            file.schema_version
        )));
    }
    let layers = file
        .layers
        .into_iter()
        .map(|l| {
            let weights = Array2::from_shape_vec((l.outputs, l.inputs), l.weights)
                .map_err(|e| Error::invalid(format!("bad weight matrix: {e}")))?;
            Ok(DenseLayer {
                weights,
                bias: Array1::from(l.bias),
                activation: l.activation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DenseNetwork::from_layers(layers, file.head, file.input_transform)
}

pub fn save_model(net: &DenseNetwork, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(net)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<DenseNetwork> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}
