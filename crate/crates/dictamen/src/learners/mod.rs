//! Binary linear classifiers over the feature space: logistic regression
//! (the primary learner), a linear SVM with a logistic link fitted on its
//! training margins, and multinomial naive Bayes.
//!
//! All three produce a [`LinearModel`] whose posterior is `sigmoid(w·x + b)`;
//! for the SVM the Platt link is folded into the weights, for naive Bayes
//! the weights are the log-likelihood ratios, so a single prediction path
//! serves every learner.

mod logistic;
mod mnb;
mod svm;

pub use logistic::{logistic_gradient, logistic_objective, train_logistic_regression};
pub use mnb::train_multinomial_nb;
pub use svm::train_linear_svm;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("training needs at least one positive and one negative example")]
    SingleClass,
    #[error("vector dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: u32, got: u32 },
    #[error(
        "multinomial naive Bayes requires non-negative features, got {value} at column {column}"
    )]
    NegativeFeature { column: u32, value: f64 },
    #[error("unknown learner name {0:?} (expected lr, svm or mnb)")]
    UnknownLearner(String),
    #[error("model dump format {0} is not supported")]
    UnsupportedFormat(u32),
    #[error("model I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("model dump is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Learner {
    #[serde(rename = "lr")]
    LogisticRegression,
    #[serde(rename = "svm")]
    LinearSvm,
    #[serde(rename = "mnb")]
    MultinomialNb,
}

impl Learner {
    pub fn parse(name: &str) -> Result<Self, LearnerError> {
        match name.to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(Learner::LogisticRegression),
            "svm" => Ok(Learner::LinearSvm),
            "mnb" | "nb" => Ok(Learner::MultinomialNb),
            other => Err(LearnerError::UnknownLearner(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Learner::LogisticRegression => "lr",
            Learner::LinearSvm => "svm",
            Learner::MultinomialNb => "mnb",
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Training knobs shared by the learners.
///
/// `c_or_alpha` is the inverse regularization strength C for LR and SVM and
/// the smoothing parameter alpha for naive Bayes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learner: Learner,
    pub c_or_alpha: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(learner: Learner, c_or_alpha: f64) -> Self {
        TrainConfig {
            learner,
            c_or_alpha,
            max_iterations: 1000,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

/// Statistics of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
    /// Accepted objective value per outer iteration (empty for naive Bayes,
    /// whose fit is closed-form).
    pub objective_trace: Vec<f64>,
}

/// A trained binary verifier: dense weights over the feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub learner: Learner,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: TrainConfig,
    pub meta: TrainingMeta,
}

impl LinearModel {
    pub fn dimension(&self) -> u32 {
        self.weights.len() as u32
    }

    pub fn decision_value(&self, x: &FeatureVector) -> Result<f64, LearnerError> {
        if x.dimension != self.dimension() {
            return Err(LearnerError::DimensionMismatch {
                expected: self.dimension(),
                got: x.dimension,
            });
        }
        Ok(x.dot(&self.weights) + self.bias)
    }
}

/// Train with the learner named in the config.
pub fn train<V: AsRef<FeatureVector>>(
    x: &[V],
    y: &[bool],
    config: &TrainConfig,
) -> Result<LinearModel, LearnerError> {
    match config.learner {
        Learner::LogisticRegression => train_logistic_regression(x, y, config),
        Learner::LinearSvm => train_linear_svm(x, y, config),
        Learner::MultinomialNb => train_multinomial_nb(x, y, config.c_or_alpha, config),
    }
}

/// Posterior probability that `x` belongs to the positive class.
pub fn predict_posterior(model: &LinearModel, x: &FeatureVector) -> Result<f64, LearnerError> {
    Ok(sigmoid(model.decision_value(x)?))
}

/// Binary verdict from a calibrated posterior; `Yes` on the boundary.
pub fn decide(posterior: f64, threshold: f64) -> bool {
    posterior >= threshold
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn check_two_classes(y: &[bool]) -> Result<(), LearnerError> {
    if y.iter().any(|&v| v) && y.iter().any(|&v| !v) {
        Ok(())
    } else {
        Err(LearnerError::SingleClass)
    }
}

/// Versioned on-disk form of a model, for reuse in the disputed-document
/// workflow.
#[derive(Debug, Serialize, Deserialize)]
struct ModelDump {
    format_version: u32,
    model: LinearModel,
}

const MODEL_DUMP_VERSION: u32 = 1;

pub fn save_model(model: &LinearModel, path: &Path) -> Result<(), LearnerError> {
    let dump = ModelDump {
        format_version: MODEL_DUMP_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string(&dump)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<LinearModel, LearnerError> {
    let json = std::fs::read_to_string(path)?;
    let dump: ModelDump = serde_json::from_str(&json)?;
    if dump.format_version != MODEL_DUMP_VERSION {
        return Err(LearnerError::UnsupportedFormat(dump.format_version));
    }
    Ok(dump.model)
}
