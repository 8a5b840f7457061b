//! Model persistence: a small versioned JSON document.
//!
//! Weights are stored as plain `f64` arrays, so an `f64` model survives a
//! save/load round trip bit for bit. The document also carries the
//! standardization statistics and, optionally, the configuration that
//! produced the model, making a saved file sufficient to score new data.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{DenseLayer, MlpModel};
use crate::scalar::{real, Scalar};
use crate::standardize::StandardizerStats;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major, length `in_dim * out_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerDocument {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub input_dim: usize,
    pub hidden: (usize, usize),
    pub dropout_rate: f64,
    pub layers: Vec<LayerDocument>,
    pub standardizer: Option<StandardizerDocument>,
    /// Free-form provenance, typically the resolved run configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

pub fn to_document<F: Scalar>(model: &MlpModel<F>, config: Option<Value>) -> ModelDocument {
    let as_f64 = |v: F| v.to_f64().unwrap();
    ModelDocument {
        version: MODEL_FORMAT_VERSION,
        input_dim: model.input_dim(),
        hidden: model.hidden_dims(),
        dropout_rate: as_f64(model.dropout_rate()),
        layers: model
            .layers()
            .iter()
            .map(|l| LayerDocument {
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                weights: l.weights().as_slice().iter().map(|&w| as_f64(w)).collect(),
                bias: l.bias().iter().map(|&b| as_f64(b)).collect(),
            })
            .collect(),
        standardizer: model.standardizer().map(|s| StandardizerDocument {
            mean: s.mean.iter().map(|&m| as_f64(m)).collect(),
            std: s.std.iter().map(|&d| as_f64(d)).collect(),
        }),
        config,
    }
}

pub fn from_document<F: Scalar>(doc: &ModelDocument) -> Result<MlpModel<F>> {
    if doc.version != MODEL_FORMAT_VERSION {
        return Err(Error::State(format!(
            "unsupported model format version {} (this build reads {})",
            doc.version, MODEL_FORMAT_VERSION
        )));
    }
    let layers = doc
        .layers
        .iter()
        .map(|l| {
            let weights =
                Matrix::from_vec(l.in_dim, l.out_dim, l.weights.iter().map(|&w| real::<F>(w)).collect())?;
            DenseLayer::new(weights, l.bias.iter().map(|&b| real::<F>(b)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let standardizer = doc
        .standardizer
        .as_ref()
        .map(|s| StandardizerStats {
            mean: s.mean.iter().map(|&m| real::<F>(m)).collect(),
            std: s.std.iter().map(|&d| real::<F>(d)).collect(),
        });
    let model = MlpModel::from_parts(layers, real::<F>(doc.dropout_rate), standardizer)?;
    if (model.input_dim(), model.hidden_dims()) != (doc.input_dim, doc.hidden) {
        return Err(Error::State("document header dimensions disagree with its layers".into()));
    }
    Ok(model)
}

pub fn save<F: Scalar>(model: &MlpModel<F>, path: &Path, config: Option<Value>) -> Result<()> {
    let doc = to_document(model, config);
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, &doc)?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Load a model and whatever configuration was stored with it.
pub fn load<F: Scalar>(path: &Path) -> Result<(MlpModel<F>, Option<Value>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut doc: ModelDocument = serde_json::from_reader(std::io::BufReader::new(file))?;
    let config = doc.config.take();
    Ok((from_document(&doc)?, config))
}
