//! Self-describing model files.
//!
//! Models are stored as JSON text with an explicit `format_version`. Reals
//! are written in shortest round-trip form, so a save/load cycle reproduces
//! every stored value bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OckError, Result};
use crate::kernels::KernelSpec;
use crate::learner::{ModelWeights, OckModel, Standardizer};
use crate::scalar::Real;

pub const MODEL_FORMAT: &str = "ock-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ModelFile<T> {
    format: String,
    format_version: u32,
    kernel: KernelSpec<T>,
    lambda: T,
    dimension: usize,
    #[serde(default)]
    standardizer: Option<Standardizer<T>>,
    #[serde(flatten)]
    weights: ModelWeights<T>,
}

pub fn model_to_json<T: Real>(model: &OckModel<T>) -> String {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        format_version: MODEL_FORMAT_VERSION,
        kernel: *model.kernel_spec(),
        lambda: model.lambda(),
        dimension: crate::inference::VectorField::dim(model),
        standardizer: model.standardizer().cloned(),
        weights: model.weights().clone(),
    };
    serde_json::to_string(&file).expect("model serializes")
}

pub fn model_from_json<T: Real>(text: &str) -> Result<OckModel<T>> {
    let file: ModelFile<T> = serde_json::from_str(text).map_err(|e| OckError::Format(e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(OckError::Format(format!("not a model file: format '{}'", file.format)));
    }
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(OckError::Format(format!(
            "unsupported model format version {}",
            file.format_version
        )));
    }
    OckModel::from_parts(file.kernel, file.lambda, file.dimension, file.weights, file.standardizer)
}

pub fn save_model<T: Real>(path: &Path, model: &OckModel<T>) -> Result<()> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn load_model<T: Real>(path: &Path) -> Result<OckModel<T>> {
    model_from_json(&std::fs::read_to_string(path)?)
}
