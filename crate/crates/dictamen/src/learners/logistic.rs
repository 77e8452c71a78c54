//! Logistic regression trained by a deterministic full-batch L-BFGS.
//!
//! Objective: sum_i ln(1 + exp(-y_i (w·x_i + b))) + (1/(2C)) ||w||^2, with
//! the bias left out of the regularizer. Starting from zero weights and
//! using no randomness anywhere, the same data and config always produce the
//! same model bit for bit.

use super::{
    check_two_classes, sigmoid, softplus, Learner, LearnerError, LinearModel, TrainConfig,
    TrainingMeta,
};
use crate::features::FeatureVector;

pub fn train_logistic_regression<V: AsRef<FeatureVector>>(
    x: &[V],
    y: &[bool],
    config: &TrainConfig,
) -> Result<LinearModel, LearnerError> {
    check_two_classes(y)?;
    let x: Vec<&FeatureVector> = x.iter().map(AsRef::as_ref).collect();
    let dim = x.first().map(|v| v.dimension as usize).unwrap_or(0);
    let signs: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
    let inv_c = 1.0 / config.c_or_alpha;

    // theta = [w_0 .. w_{dim-1}, b]; the bias is the unregularized tail.
    let problem = LogLossProblem {
        x: &x,
        signs: &signs,
        dim,
        inv_c,
    };
    let result = lbfgs(
        &problem,
        vec![0.0; dim + 1],
        config.max_iterations,
        config.tolerance,
    );

    let mut weights = result.theta;
    let bias = weights.pop().unwrap_or(0.0);
    Ok(LinearModel {
        learner: Learner::LogisticRegression,
        weights,
        bias,
        config: *config,
        meta: TrainingMeta {
            iterations: result.iterations,
            converged: result.converged,
            final_objective: result.objective,
            objective_trace: result.trace,
        },
    })
}

/// Regularized log-loss of a weight vector on a dataset.
///
/// This is the quantity [`train_logistic_regression`] minimizes; it is
/// exposed so the gradient can be validated externally against finite
/// differences of the objective.
pub fn logistic_objective(
    x: &[FeatureVector],
    y: &[bool],
    c: f64,
    weights: &[f64],
    bias: f64,
) -> f64 {
    let x: Vec<&FeatureVector> = x.iter().collect();
    let signs: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
    let problem = LogLossProblem {
        x: &x,
        signs: &signs,
        dim: weights.len(),
        inv_c: 1.0 / c,
    };
    let mut theta = weights.to_vec();
    theta.push(bias);
    let mut scratch = vec![0.0; theta.len()];
    problem.evaluate(&theta, &mut scratch)
}

/// Analytic gradient of [`logistic_objective`]: (weight part, bias part).
pub fn logistic_gradient(
    x: &[FeatureVector],
    y: &[bool],
    c: f64,
    weights: &[f64],
    bias: f64,
) -> (Vec<f64>, f64) {
    let x: Vec<&FeatureVector> = x.iter().collect();
    let signs: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
    let problem = LogLossProblem {
        x: &x,
        signs: &signs,
        dim: weights.len(),
        inv_c: 1.0 / c,
    };
    let mut theta = weights.to_vec();
    theta.push(bias);
    let mut gradient = vec![0.0; theta.len()];
    problem.evaluate(&theta, &mut gradient);
    let grad_bias = gradient.pop().unwrap_or(0.0);
    (gradient, grad_bias)
}

struct LogLossProblem<'a> {
    x: &'a [&'a FeatureVector],
    signs: &'a [f64],
    dim: usize,
    inv_c: f64,
}

impl Objective for LogLossProblem<'_> {
    fn evaluate(&self, theta: &[f64], gradient: &mut [f64]) -> f64 {
        let (w, b) = (&theta[..self.dim], theta[self.dim]);
        gradient.fill(0.0);
        let mut loss = 0.0;
        for (&xi, &sign) in self.x.iter().zip(self.signs) {
            let z = xi.dot(w) + b;
            loss += softplus(-sign * z);
            let g = -sign * sigmoid(-sign * z);
            for &(col, value) in &xi.entries {
                gradient[col as usize] += g * value;
            }
            gradient[self.dim] += g;
        }
        let mut reg = 0.0;
        for (g, &wj) in gradient[..self.dim].iter_mut().zip(w) {
            reg += wj * wj;
            *g += self.inv_c * wj;
        }
        loss + 0.5 * self.inv_c * reg
    }
}

/// A smooth objective with analytic gradient.
pub(crate) trait Objective {
    /// Write the gradient into `gradient` and return the objective value.
    fn evaluate(&self, theta: &[f64], gradient: &mut [f64]) -> f64;
}

pub(crate) struct OptimResult {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// Limited-memory BFGS with Armijo backtracking.
///
/// Convergence is declared when the gradient sup-norm drops to `tolerance`.
/// Hitting `max_iterations` first is reported, not an error: the caller gets
/// the best point found.
pub(crate) fn lbfgs(
    problem: &impl Objective,
    theta0: Vec<f64>,
    max_iterations: usize,
    tolerance: f64,
) -> OptimResult {
    const MEMORY: usize = 10;
    const ARMIJO_C1: f64 = 1e-4;

    let n = theta0.len();
    let mut theta = theta0;
    let mut gradient = vec![0.0; n];
    let mut objective = problem.evaluate(&theta, &mut gradient);
    let mut trace = vec![objective];

    let mut s_history: Vec<Vec<f64>> = Vec::new();
    let mut y_history: Vec<Vec<f64>> = Vec::new();
    let mut rho_history: Vec<f64> = Vec::new();

    let mut iterations = 0;
    let mut converged = sup_norm(&gradient) <= tolerance;

    while !converged && iterations < max_iterations {
        iterations += 1;

        let mut direction = two_loop(&gradient, &s_history, &y_history, &rho_history);
        let mut descent: f64 = direction.iter().zip(&gradient).map(|(d, g)| d * g).sum();
        if descent >= 0.0 {
            // Curvature information went stale; fall back to steepest descent.
            for (d, g) in direction.iter_mut().zip(&gradient) {
                *d = -g;
            }
            descent = -gradient.iter().map(|g| g * g).sum::<f64>();
            s_history.clear();
            y_history.clear();
            rho_history.clear();
        }

        // Backtracking line search on the Armijo condition.
        let mut step = 1.0;
        let mut candidate = vec![0.0; n];
        let mut candidate_grad = vec![0.0; n];
        let mut accepted = false;
        for _ in 0..60 {
            for ((c, t), d) in candidate.iter_mut().zip(&theta).zip(&direction) {
                *c = t + step * d;
            }
            let value = problem.evaluate(&candidate, &mut candidate_grad);
            if value <= objective + ARMIJO_C1 * step * descent {
                accepted = true;
                let s: Vec<f64> = candidate.iter().zip(&theta).map(|(c, t)| c - t).collect();
                let yv: Vec<f64> = candidate_grad
                    .iter()
                    .zip(&gradient)
                    .map(|(cg, g)| cg - g)
                    .collect();
                let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
                if sy > 1e-12 {
                    if s_history.len() == MEMORY {
                        s_history.remove(0);
                        y_history.remove(0);
                        rho_history.remove(0);
                    }
                    s_history.push(s);
                    y_history.push(yv);
                    rho_history.push(1.0 / sy);
                }
                theta.copy_from_slice(&candidate);
                gradient.copy_from_slice(&candidate_grad);
                objective = value;
                break;
            }
            step *= 0.5;
        }
        trace.push(objective);
        if !accepted {
            break; // no progress possible at float precision
        }
        converged = sup_norm(&gradient) <= tolerance;
    }

    OptimResult {
        theta,
        objective,
        iterations,
        converged,
        trace,
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

fn two_loop(
    gradient: &[f64],
    s_history: &[Vec<f64>],
    y_history: &[Vec<f64>],
    rho_history: &[f64],
) -> Vec<f64> {
    let mut q: Vec<f64> = gradient.to_vec();
    let k = s_history.len();
    let mut alpha = vec![0.0; k];
    for i in (0..k).rev() {
        alpha[i] = rho_history[i]
            * s_history[i]
                .iter()
                .zip(&q)
                .map(|(s, qv)| s * qv)
                .sum::<f64>();
        for (qv, yv) in q.iter_mut().zip(&y_history[i]) {
            *qv -= alpha[i] * yv;
        }
    }
    if k > 0 {
        let last = k - 1;
        let sy = 1.0 / rho_history[last];
        let yy: f64 = y_history[last].iter().map(|y| y * y).sum();
        if yy > 0.0 {
            let scale = sy / yy;
            for qv in q.iter_mut() {
                *qv *= scale;
            }
        }
    }
    for i in 0..k {
        let beta = rho_history[i]
            * y_history[i]
                .iter()
                .zip(&q)
                .map(|(y, qv)| y * qv)
                .sum::<f64>();
        for (qv, sv) in q.iter_mut().zip(&s_history[i]) {
            *qv += (alpha[i] - beta) * sv;
        }
    }
    for qv in q.iter_mut() {
        *qv = -*qv;
    }
    q
}
