//! Self-describing JSON document for a trained model.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::models::linear::LinearModel;
use crate::models::neural::{NeuralModel, NnParams};
use crate::models::tree::{TreeModel, TreeParams};
use crate::TOOL_VERSION;

/// Candidate families, ordered by champion tie-break priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    Regression,
    Neural,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Tree, ModelKind::Regression, ModelKind::Neural];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Regression => "regression",
            ModelKind::Neural => "neural",
        }
    }

    /// Report label.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Tree => "Decision Tree",
            ModelKind::Regression => "Regression",
            ModelKind::Neural => "Neural Network",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tree" | "decision_tree" => Ok(ModelKind::Tree),
            "regression" | "ols" => Ok(ModelKind::Regression),
            "neural" | "nn" | "neural_network" => Ok(ModelKind::Neural),
            _ => Err(Error::InvalidParam(format!("unknown model kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainedModel {
    Tree(TreeModel),
    Regression(LinearModel),
    Neural(NeuralModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Tree(_) => ModelKind::Tree,
            TrainedModel::Regression(_) => ModelKind::Regression,
            TrainedModel::Neural(_) => ModelKind::Neural,
        }
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Tree(m) => m.predict(data),
            TrainedModel::Regression(m) => m.predict(data),
            TrainedModel::Neural(m) => m.predict(data),
        }
    }

    pub fn target(&self) -> &str {
        match self {
            TrainedModel::Tree(m) => &m.target,
            TrainedModel::Regression(m) => &m.transformer.target,
            TrainedModel::Neural(m) => &m.transformer.target,
        }
    }

    pub fn fingerprint(&self) -> String {
        match self {
            TrainedModel::Tree(m) => m.fingerprint(),
            TrainedModel::Regression(m) => m.transformer.fingerprint(),
            TrainedModel::Neural(m) => m.transformer.fingerprint(),
        }
    }
}

/// Every learner knob used in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingParams {
    pub train_fraction: f64,
    pub tree: TreeParams,
    pub nn: NnParams,
}

impl Default for TrainingParams {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            tree: TreeParams::default(),
            nn: NnParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub tool_version: String,
    pub model_kind: ModelKind,
    pub target: String,
    pub schema_fingerprint: String,
    pub seed: u64,
    pub training_params: TrainingParams,
    pub train_ase: f64,
    pub validation_ase: Option<f64>,
    pub model: TrainedModel,
}

impl ModelArtifact {
    pub fn new(
        model: TrainedModel,
        seed: u64,
        training_params: TrainingParams,
        train_ase: f64,
        validation_ase: Option<f64>,
    ) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            model_kind: model.kind(),
            target: model.target().to_string(),
            schema_fingerprint: model.fingerprint(),
            seed,
            training_params,
            train_ase,
            validation_ase,
            model,
        }
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.model.predict(data)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: ModelArtifact = serde_json::from_str(text)?;
        if artifact.model.kind() != artifact.model_kind {
            return Err(Error::InvalidParam(format!(
                "artifact declares {} but holds a {} model",
                artifact.model_kind,
                artifact.model.kind()
            )));
        }
        Ok(artifact)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
