//! Cost-weighted logistic loss `Σ cᵢ·ln(1 + exp(-yᵢ·Fᵢ))` and its derivatives.

use crate::data::Label;

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn surrogate_loss(scores: &[f64], labels: &[Label], costs: &[f64]) -> f64 {
    scores
        .iter()
        .zip(labels)
        .zip(costs)
        .map(|((f, y), c)| c * softplus(-y.sign() * f))
        .sum()
}

/// `∂L/∂Fᵢ = -cᵢ·yᵢ·σ(-yᵢ·Fᵢ)`.
pub fn surrogate_gradient(scores: &[f64], labels: &[Label], costs: &[f64]) -> Vec<f64> {
    scores
        .iter()
        .zip(labels)
        .zip(costs)
        .map(|((f, y), c)| {
            let y = y.sign();
            -c * y * sigmoid(-y * f)
        })
        .collect()
}

/// `∂²L/∂Fᵢ² = cᵢ·σ(Fᵢ)·σ(-Fᵢ)`.
pub fn surrogate_hessian(scores: &[f64], costs: &[f64]) -> Vec<f64> {
    scores
        .iter()
        .zip(costs)
        .map(|(f, c)| c * sigmoid(*f) * sigmoid(-f))
        .collect()
}
