//! Multinomial naive Bayes on fractional feature mass.
//!
//! Weighted features are non-negative, so they act as fractional event
//! counts. The fitted class-conditional log-likelihood ratio is linear in
//! the features, which lets the model live in the same [`LinearModel`] shape
//! as the other learners: weights are per-feature log ratios and the bias is
//! the log prior ratio, making the sigmoid of the decision value exactly the
//! normalized two-class likelihood.

use super::{check_two_classes, Learner, LearnerError, LinearModel, TrainConfig, TrainingMeta};
use crate::features::FeatureVector;

pub fn train_multinomial_nb<V: AsRef<FeatureVector>>(
    x: &[V],
    y: &[bool],
    alpha: f64,
    config: &TrainConfig,
) -> Result<LinearModel, LearnerError> {
    check_two_classes(y)?;
    let x: Vec<&FeatureVector> = x.iter().map(AsRef::as_ref).collect();
    let dim = x.first().map(|v| v.dimension as usize).unwrap_or(0);

    let mut mass_pos = vec![0.0; dim];
    let mut mass_neg = vec![0.0; dim];
    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    for (&xi, &label) in x.iter().zip(y) {
        for &(col, value) in &xi.entries {
            if value < 0.0 {
                return Err(LearnerError::NegativeFeature { column: col, value });
            }
            if label {
                mass_pos[col as usize] += value;
            } else {
                mass_neg[col as usize] += value;
            }
        }
        if label {
            n_pos += 1;
        } else {
            n_neg += 1;
        }
    }

    let total_pos: f64 = mass_pos.iter().sum::<f64>() + alpha * dim as f64;
    let total_neg: f64 = mass_neg.iter().sum::<f64>() + alpha * dim as f64;
    let weights: Vec<f64> = mass_pos
        .iter()
        .zip(&mass_neg)
        .map(|(&mp, &mn)| ((mp + alpha) / total_pos).ln() - ((mn + alpha) / total_neg).ln())
        .collect();
    let bias = (n_pos as f64 / n_neg as f64).ln();

    Ok(LinearModel {
        learner: Learner::MultinomialNb,
        weights,
        bias,
        config: *config,
        meta: TrainingMeta {
            iterations: 0,
            converged: true,
            final_objective: 0.0,
            objective_trace: Vec::new(),
        },
    })
}
