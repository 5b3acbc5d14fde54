use crate::data::{Label, WeightedDataset};
use crate::error::{Error, Result};
use crate::significance::{SignificanceMeasure, U_MIN};

/// Per-example misclassification costs for one cascade round.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector {
    costs: Vec<f64>,
    round_dual: f64,
}

impl CostVector {
    /// Wraps arbitrary costs; all must be finite and nonnegative with at
    /// least one positive.
    pub fn from_raw(costs: Vec<f64>, round_dual: f64) -> Result<Self> {
        if costs.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::Input("costs must be finite and nonnegative".into()));
        }
        if !costs.iter().any(|c| *c > 0.0) {
            return Err(Error::Input("at least one cost must be positive".into()));
        }
        Ok(CostVector { costs, round_dual })
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn round_dual(&self) -> f64 {
        self.round_dual
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// Costs rescaled to mean one. Split choice and the sign of the fitted
    /// scores do not depend on the overall cost scale.
    pub(crate) fn normalized(&self) -> Vec<f64> {
        let total: f64 = self.costs.iter().sum();
        let factor = self.costs.len() as f64 / total;
        self.costs.iter().map(|c| c * factor).collect()
    }
}

/// Background examples cost `w·f*(u)`, signal examples cost `w·u`, so the
/// summed cost of a labelling's mistakes is `b·f*(u) + s̃·u`.
pub fn make_cost_vector(
    dataset: &WeightedDataset,
    u: f64,
    measure: &SignificanceMeasure,
) -> Result<CostVector> {
    if !(u >= U_MIN && u.is_finite()) {
        return Err(Error::Input(format!(
            "dual weight {u} is below the floor {U_MIN} or not finite"
        )));
    }
    if !measure.dual_domain().contains(u) {
        return Err(Error::Input(format!(
            "dual weight {u} outside the domain of {}",
            measure.name()
        )));
    }
    let background_cost = measure.conjugate(u);
    let costs = dataset
        .labels()
        .iter()
        .zip(dataset.weights())
        .map(|(label, w)| match label {
            Label::Signal => w * u,
            Label::Background => w * background_cost,
        })
        .collect();
    CostVector::from_raw(costs, u)
}

/// Summed cost of the examples `predictions` gets wrong.
pub fn weighted_error(
    dataset: &WeightedDataset,
    costs: &CostVector,
    predictions: &[Label],
) -> Result<f64> {
    if predictions.len() != dataset.len() || costs.len() != dataset.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} examples, {} costs, {} predictions",
            dataset.len(),
            costs.len(),
            predictions.len()
        )));
    }
    Ok(dataset
        .labels()
        .iter()
        .zip(predictions)
        .zip(costs.costs())
        .filter(|((y, pred), _)| y != pred)
        .map(|(_, c)| c)
        .sum())
}
