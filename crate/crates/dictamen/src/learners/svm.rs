//! Linear SVM via deterministic full-batch subgradient descent.
//!
//! Objective: sum_i max(0, 1 - y_i (w·x_i + b)) + (1/(2C)) ||w||^2, bias
//! unregularized. Each outer iteration takes a backtracking step along the
//! negative subgradient and only ever accepts a decrease, so the objective
//! trace is monotone and the whole procedure is reproducible.
//!
//! Margins are not probabilities; a one-dimensional logistic link is fitted
//! on the training decision values afterwards and folded into the returned
//! weights, so the model's sigmoid output is a calibrated posterior.

use super::logistic::{lbfgs, Objective};
use super::{
    check_two_classes, sigmoid, softplus, Learner, LearnerError, LinearModel, TrainConfig,
    TrainingMeta,
};
use crate::features::FeatureVector;

pub fn train_linear_svm<V: AsRef<FeatureVector>>(
    x: &[V],
    y: &[bool],
    config: &TrainConfig,
) -> Result<LinearModel, LearnerError> {
    check_two_classes(y)?;
    let x: Vec<&FeatureVector> = x.iter().map(AsRef::as_ref).collect();
    let dim = x.first().map(|v| v.dimension as usize).unwrap_or(0);
    let signs: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
    let inv_c = 1.0 / config.c_or_alpha;

    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut objective = svm_objective(&x, &signs, &weights, bias, inv_c);
    let mut trace = vec![objective];
    let mut iterations = 0;
    let mut converged = false;

    let mut grad_w = vec![0.0; dim];
    let mut cand_w = vec![0.0; dim];
    while iterations < config.max_iterations {
        iterations += 1;
        let grad_b = svm_subgradient(&x, &signs, &weights, bias, inv_c, &mut grad_w);
        let grad_norm_sq: f64 = grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b;
        if grad_norm_sq.sqrt() <= config.tolerance {
            converged = true;
            break;
        }

        // Halve the step until the objective actually drops.
        let mut step = 1.0 / (1.0 + inv_c);
        let mut accepted = false;
        for _ in 0..50 {
            for (c, (w, g)) in cand_w.iter_mut().zip(weights.iter().zip(&grad_w)) {
                *c = w - step * g;
            }
            let cand_b = bias - step * grad_b;
            let value = svm_objective(&x, &signs, &cand_w, cand_b, inv_c);
            if value < objective - 1e-12 * (1.0 + objective.abs()) {
                weights.copy_from_slice(&cand_w);
                bias = cand_b;
                objective = value;
                trace.push(objective);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent step exists at float precision: we are at (or next
            // to) the minimizer of this piecewise-linear objective.
            converged = true;
            break;
        }
    }

    // Platt link on the training margins, folded into the linear form.
    let margins: Vec<f64> = x.iter().map(|xi| xi.dot(&weights) + bias).collect();
    let (scale, offset) = fit_logistic_link(&margins, &signs);
    for w in weights.iter_mut() {
        *w *= scale;
    }
    let bias = bias * scale + offset;

    Ok(LinearModel {
        learner: Learner::LinearSvm,
        weights,
        bias,
        config: *config,
        meta: TrainingMeta {
            iterations,
            converged,
            final_objective: objective,
            objective_trace: trace,
        },
    })
}

fn svm_objective(
    x: &[&FeatureVector],
    signs: &[f64],
    weights: &[f64],
    bias: f64,
    inv_c: f64,
) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(signs)
        .map(|(xi, &s)| (1.0 - s * (xi.dot(weights) + bias)).max(0.0))
        .sum();
    hinge + 0.5 * inv_c * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Subgradient of the objective; margin-boundary points (hinge exactly 0)
/// contribute nothing, which fixes one deterministic choice among the valid
/// subgradients. Returns the bias component.
fn svm_subgradient(
    x: &[&FeatureVector],
    signs: &[f64],
    weights: &[f64],
    bias: f64,
    inv_c: f64,
    grad_w: &mut [f64],
) -> f64 {
    for (g, &w) in grad_w.iter_mut().zip(weights) {
        *g = inv_c * w;
    }
    let mut grad_b = 0.0;
    for (xi, &s) in x.iter().zip(signs) {
        if s * (xi.dot(weights) + bias) < 1.0 {
            for &(col, value) in &xi.entries {
                grad_w[col as usize] -= s * value;
            }
            grad_b -= s;
        }
    }
    grad_b
}

/// Fit `sigmoid(scale * margin + offset)` to the training labels by
/// regularized log-loss; a tiny ridge keeps the two parameters finite on
/// separable data.
fn fit_logistic_link(margins: &[f64], signs: &[f64]) -> (f64, f64) {
    struct Link<'a> {
        margins: &'a [f64],
        signs: &'a [f64],
    }
    impl Objective for Link<'_> {
        fn evaluate(&self, theta: &[f64], gradient: &mut [f64]) -> f64 {
            let (a, b) = (theta[0], theta[1]);
            gradient.fill(0.0);
            let mut loss = 0.0;
            for (&m, &s) in self.margins.iter().zip(self.signs) {
                let z = a * m + b;
                loss += softplus(-s * z);
                let g = -s * sigmoid(-s * z);
                gradient[0] += g * m;
                gradient[1] += g;
            }
            const RIDGE: f64 = 1e-6;
            gradient[0] += RIDGE * a;
            gradient[1] += RIDGE * b;
            loss + 0.5 * RIDGE * (a * a + b * b)
        }
    }
    let problem = Link { margins, signs };
    let result = lbfgs(&problem, vec![1.0, 0.0], 200, 1e-8);
    (result.theta[0], result.theta[1])
}
