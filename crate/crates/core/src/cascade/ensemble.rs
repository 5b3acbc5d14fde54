use crate::data::{Label, WeightedDataset};
use crate::error::{Error, Result};
use crate::learner::{predict_scores, Model};
use crate::significance::SignificanceMeasure;

use super::threshold::select_threshold;

/// How an ensemble turns mixed scores into labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    /// Select events whose mixed score exceeds this value.
    Fixed(f64),
    /// Pick the significance-maximizing cut on the dataset being labelled.
    MaxSignificance,
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<Model>,
    weights: Vec<f64>,
    pub policy: ThresholdPolicy,
}

impl Ensemble {
    pub fn members(&self) -> &[Model] {
        &self.members
    }

    /// Mixing weights, summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Builds an ensemble; `weights` are rescaled to sum to one.
pub fn ensemble_average(models: Vec<Model>, weights: &[f64]) -> Result<Ensemble> {
    if models.is_empty() {
        return Err(Error::Input("an ensemble needs at least one model".into()));
    }
    if weights.len() != models.len() {
        return Err(Error::Input(format!(
            "{} weights for {} models",
            weights.len(),
            models.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::Input("mixing weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::Input("mixing weights sum to zero".into()));
    }
    let d = models[0].n_features();
    if let Some(m) = models.iter().find(|m| m.n_features() != d) {
        return Err(Error::Input(format!(
            "ensemble members disagree on dimension ({d} vs {})",
            m.n_features()
        )));
    }
    Ok(Ensemble {
        members: models,
        weights: weights.iter().map(|w| w / total).collect(),
        policy: ThresholdPolicy::Fixed(0.5),
    })
}

/// Maps scores to `[0, 1]` by rank; tied scores share their average rank.
/// A single score maps to 0.5.
pub fn rank_normalize(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    if n <= 1 {
        return vec![0.5; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; n];
    let denom = (n - 1) as f64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let rank = (start + end - 1) as f64 / 2.0 / denom;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Weighted mean of the members' rank-normalized scores on `dataset`.
pub fn ensemble_scores(ensemble: &Ensemble, dataset: &WeightedDataset) -> Result<Vec<f64>> {
    let mut mixed = vec![0.0; dataset.len()];
    for (model, &w) in ensemble.members.iter().zip(&ensemble.weights) {
        let ranks = rank_normalize(&predict_scores(model, dataset)?);
        for (m, r) in mixed.iter_mut().zip(ranks) {
            *m += w * r;
        }
    }
    Ok(mixed)
}

/// Labels `dataset` under the ensemble's threshold policy.
pub fn ensemble_classify(
    ensemble: &Ensemble,
    dataset: &WeightedDataset,
    measure: &SignificanceMeasure,
    b_reg: f64,
) -> Result<Vec<Label>> {
    let scores = ensemble_scores(ensemble, dataset)?;
    let threshold = match ensemble.policy {
        ThresholdPolicy::Fixed(t) => t,
        ThresholdPolicy::MaxSignificance => {
            select_threshold(&scores, dataset, measure, b_reg)?.threshold
        }
    };
    Ok(scores
        .iter()
        .map(|&s| if s > threshold { Label::Signal } else { Label::Background })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize, SynthConfig};
    use crate::learner::{make_cost_vector, train, LearnerConfig};

    fn model(seed: u64, data: &WeightedDataset) -> Model {
        let costs = make_cost_vector(data, 0.5, &SignificanceMeasure::Ams2).unwrap();
        let cfg = LearnerConfig { rounds: 5, subsample: 0.7, seed, ..LearnerConfig::default() };
        train(data, &costs, &cfg).unwrap()
    }

    fn data() -> WeightedDataset {
        synthesize(&SynthConfig { n_signal: 200, n_background: 200, ..SynthConfig::default() }).unwrap()
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(rank_normalize(&[3.0, 1.0, 3.0, 2.0]), vec![5.0 / 6.0, 0.0, 5.0 / 6.0, 1.0 / 3.0]);
        assert_eq!(rank_normalize(&[7.0]), vec![0.5]);
        assert!(rank_normalize(&[]).is_empty());
    }

    #[test]
    fn single_member_is_identity() {
        let d = data();
        let m = model(1, &d);
        let e = ensemble_average(vec![m.clone()], &[3.0]).unwrap();
        assert_eq!(e.weights(), &[1.0]);
        let expected = rank_normalize(&predict_scores(&m, &d).unwrap());
        assert_eq!(ensemble_scores(&e, &d).unwrap(), expected);
    }

    #[test]
    fn duplicate_members_are_idempotent() {
        let d = data();
        let m = model(2, &d);
        let one = ensemble_average(vec![m.clone()], &[1.0]).unwrap();
        let two = ensemble_average(vec![m.clone(), m], &[1.0, 1.0]).unwrap();
        assert_eq!(ensemble_scores(&one, &d).unwrap(), ensemble_scores(&two, &d).unwrap());
    }

    #[test]
    fn weights_normalize() {
        let d = data();
        let e = ensemble_average(vec![model(1, &d), model(2, &d), model(3, &d)], &[0.1, 0.2, 0.7])
            .unwrap();
        assert!((e.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = data();
        assert!(ensemble_average(vec![], &[]).is_err());
        assert!(ensemble_average(vec![model(1, &d)], &[0.0]).is_err());
        assert!(ensemble_average(vec![model(1, &d)], &[-1.0]).is_err());
        assert!(ensemble_average(vec![model(1, &d)], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn max_significance_policy_labels() {
        let d = data();
        let mut e = ensemble_average(vec![model(1, &d), model(2, &d)], &[1.0, 1.0]).unwrap();
        e.policy = ThresholdPolicy::MaxSignificance;
        let labels = ensemble_classify(&e, &d, &SignificanceMeasure::Ams2, 10.0).unwrap();
        assert!(labels.contains(&Label::Signal));
    }
}
