//! Cost-weighted logistic regression via damped Newton (IRLS) steps.

use nalgebra::{DMatrix, DVector};

use super::costs::CostVector;
use super::model::{LearnerConfig, LinearScorer, Model};
use super::surrogate::{sigmoid, softplus};
use crate::data::{Label, WeightedDataset};
use crate::error::{Error, Result};

const STEP_TOLERANCE: f64 = 1e-10;
const MAX_HALVINGS: usize = 40;

/// Smallest value whose cumulative weight reaches half the total.
fn weighted_median(mut pairs: Vec<(f64, f64)>) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if total <= 0.0 {
        return Some(pairs[pairs.len() / 2].0);
    }
    let mut acc = 0.0;
    for (v, w) in &pairs {
        acc += w;
        if acc >= 0.5 * total {
            return Some(*v);
        }
    }
    pairs.last().map(|p| p.0)
}

pub(crate) fn fit_logistic(
    dataset: &WeightedDataset,
    costs: &CostVector,
    config: &LearnerConfig,
) -> Result<Model> {
    let n = dataset.len();
    let d = dataset.n_features();
    let cost = costs.normalized();
    let total_cost: f64 = cost.iter().sum();

    let mut impute = Vec::with_capacity(d);
    let mut center = Vec::with_capacity(d);
    let mut scale = Vec::with_capacity(d);
    let mut z = DMatrix::<f64>::zeros(n, d + 1);
    for j in 0..d {
        let present: Vec<(f64, f64)> = (0..n)
            .filter(|&i| !dataset.value(i, j).is_nan())
            .map(|i| (dataset.value(i, j), cost[i]))
            .collect();
        let fill = weighted_median(present).unwrap_or(0.0);
        let column: Vec<f64> = (0..n)
            .map(|i| {
                let v = dataset.value(i, j);
                if v.is_nan() {
                    fill
                } else {
                    v
                }
            })
            .collect();
        let mean = column.iter().zip(&cost).map(|(v, c)| v * c).sum::<f64>() / total_cost;
        let var = column
            .iter()
            .zip(&cost)
            .map(|(v, c)| c * (v - mean).powi(2))
            .sum::<f64>()
            / total_cost;
        let sd = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        for (i, v) in column.iter().enumerate() {
            z[(i, j + 1)] = (v - mean) / sd;
        }
        impute.push(fill);
        center.push(mean);
        scale.push(sd);
    }
    for i in 0..n {
        z[(i, 0)] = 1.0;
    }

    let signs: Vec<f64> = dataset.labels().iter().map(|l| l.sign()).collect();
    let objective = |theta: &DVector<f64>| -> f64 {
        let scores = &z * theta;
        let data: f64 = (0..n).map(|i| cost[i] * softplus(-signs[i] * scores[i])).sum();
        let penalty: f64 = theta.iter().skip(1).map(|b| b * b).sum::<f64>();
        data + 0.5 * config.l2 * penalty
    };

    let (pos, neg) = dataset
        .labels()
        .iter()
        .zip(&cost)
        .fold((0.0, 0.0), |(p, q), (l, c)| match l {
            Label::Signal => (p + c, q),
            Label::Background => (p, q + c),
        });
    if pos <= 0.0 || neg <= 0.0 {
        return Err(Error::Training("costs vanish on one class".into()));
    }
    let mut theta = DVector::<f64>::zeros(d + 1);
    theta[0] = (pos / neg).ln();
    let mut current = objective(&theta);

    for _ in 0..config.rounds {
        let scores = &z * &theta;
        let mut grad = DVector::<f64>::zeros(d + 1);
        let mut hess = DMatrix::<f64>::zeros(d + 1, d + 1);
        for i in 0..n {
            let g = -cost[i] * signs[i] * sigmoid(-signs[i] * scores[i]);
            let h = cost[i] * sigmoid(scores[i]) * sigmoid(-scores[i]);
            let row = z.row(i);
            grad.axpy(g, &row.transpose(), 1.0);
            hess.ger(h, &row.transpose(), &row.transpose(), 1.0);
        }
        for j in 1..=d {
            grad[j] += config.l2 * theta[j];
            hess[(j, j)] += config.l2;
        }
        for j in 0..=d {
            hess[(j, j)] += 1e-12;
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -&grad,
        };

        let mut rate = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let candidate = &theta + rate * &step;
            let value = objective(&candidate);
            if value <= current {
                theta = candidate;
                current = value;
                accepted = true;
                break;
            }
            rate *= 0.5;
        }
        if !accepted || rate * step.amax() < STEP_TOLERANCE {
            break;
        }
    }

    let scorer = LinearScorer {
        coefficients: theta.iter().skip(1).copied().collect(),
        center,
        scale,
        impute,
    };
    Ok(Model::linear(d, theta[0], scorer))
}
