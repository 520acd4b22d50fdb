//! Model file serialization: a versioned JSON document that loads back to a
//! model with bit-identical predictions.
//!
//! serde_json prints floats in shortest round-trip form, so every stored
//! number parses back to the exact bits that were serialized. Files are
//! written atomically (temp file plus rename). A file with an unknown
//! `format_version` is rejected before anything else is interpreted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coding::CodingConstants;
use crate::dataset::NormalizationParams;
use crate::error::{Error, Result};
use crate::float::Float;
use crate::rng::RNG_ID;
use crate::trainer::{Floors, ModelMetadata, StableBall, TrainedModel};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile<T> {
    format_version: u64,
    unit: String,
    seed: u64,
    rng: String,
    normalization: NormalizationParams<T>,
    labels: Vec<String>,
    priors: Vec<T>,
    constants: CodingConstants<T>,
    floors: Floors<T>,
    classes: Vec<ClassRecord<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClassRecord<T> {
    label: String,
    balls: Vec<StableBall<T>>,
}

#[derive(Debug, Deserialize)]
struct VersionProbe {
    format_version: u64,
}

/// Serialize a model to its JSON document.
pub fn model_to_json<T: Float>(model: &TrainedModel<T>) -> String {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        unit: model.metadata.unit.to_string(),
        seed: model.metadata.seed,
        rng: model.metadata.rng.to_string(),
        normalization: model.normalization.clone(),
        labels: model.label_names.clone(),
        priors: model.priors.clone(),
        constants: model.constants,
        floors: model.floors.clone(),
        classes: model
            .label_names
            .iter()
            .zip(model.classes.iter())
            .map(|(label, balls)| ClassRecord {
                label: label.clone(),
                balls: balls.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

/// Parse and validate a model JSON document.
pub fn model_from_json<T: Float>(text: &str) -> Result<TrainedModel<T>> {
    let probe: VersionProbe = serde_json::from_str(text)
        .map_err(|e| Error::ModelFormat(format!("cannot read format_version: {e}")))?;
    if probe.format_version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(probe.format_version));
    }
    let file: ModelFile<T> =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let model = TrainedModel {
        normalization: file.normalization,
        label_names: file.labels,
        priors: file.priors,
        classes: file.classes.into_iter().map(|c| c.balls).collect(),
        floors: file.floors,
        constants: file.constants,
        metadata: ModelMetadata {
            seed: file.seed,
            unit: "nats",
            format_version: file.format_version,
            rng: RNG_ID,
            train_seconds: None,
        },
    };
    validate(&model)?;
    Ok(model)
}

/// Structural validation of a loaded (possibly hand-edited) model.
pub fn validate<T: Float>(model: &TrainedModel<T>) -> Result<()> {
    let d = model.d();
    let c = model.label_names.len();
    if c == 0 {
        return Err(Error::ModelFormat("no classes".into()));
    }
    if model.priors.len() != c || model.classes.len() != c {
        return Err(Error::ModelFormat(
            "labels, priors, and classes disagree on class count".into(),
        ));
    }
    if model.normalization.maxs.len() != d || model.floors.eta.len() != d {
        return Err(Error::ModelFormat("normalization and floors disagree on dimension".into()));
    }
    for (j, (&lo, &hi)) in model
        .normalization
        .mins
        .iter()
        .zip(model.normalization.maxs.iter())
        .enumerate()
    {
        if lo > hi {
            return Err(Error::ModelFormat(format!("min exceeds max for feature {j}")));
        }
    }

    let tol = T::epsilon().sqrt();
    let prior_sum: T = model.priors.iter().copied().sum();
    if (prior_sum - T::one()).abs() > tol {
        return Err(Error::ModelFormat(format!("priors sum to {prior_sum}, expected 1")));
    }
    for (class_id, balls) in model.classes.iter().enumerate() {
        if balls.is_empty() {
            return Err(Error::ModelFormat(format!("class {class_id} has no balls")));
        }
        let mut weight_sum = T::zero();
        for (k, ball) in balls.iter().enumerate() {
            if ball.center.len() != d || ball.variance.len() != d {
                return Err(Error::ModelFormat(format!(
                    "ball {k} of class {class_id} has wrong dimension"
                )));
            }
            if ball.n == 0
                || ball.radius < T::zero()
                || ball.weight <= T::zero()
                || ball.variance.iter().any(|&v| v < T::zero())
                || !(T::zero()..=T::one()).contains(&ball.avg_boundary_risk)
            {
                return Err(Error::ModelFormat(format!(
                    "ball {k} of class {class_id} has invalid fields"
                )));
            }
            weight_sum = weight_sum + ball.weight;
        }
        if (weight_sum - T::one()).abs() > tol {
            return Err(Error::ModelFormat(format!(
                "weights of class {class_id} sum to {weight_sum}, expected 1"
            )));
        }
    }
    Ok(())
}

/// Write bytes atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    );
    let tmp = match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => dir.join(&name),
        None => std::path::PathBuf::from(&name),
    };
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Save a model to disk.
pub fn save_model<T: Float>(model: &TrainedModel<T>, path: &Path) -> Result<()> {
    write_atomic(path, model_to_json(model).as_bytes())
}

/// Load a model from disk.
pub fn load_model<T: Float>(path: &Path) -> Result<TrainedModel<T>> {
    let text = std::fs::read_to_string(path)?;
    model_from_json(&text)
}
