use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::costs::CostVector;
use super::logistic::fit_logistic;
use super::model::{predict_scores, LearnerConfig, LearnerKind, Model};
use super::surrogate::{surrogate_gradient, surrogate_hessian};
use super::tree::{fit_tree, FeatureIndex, RowStats, TreeParams};
use crate::data::{Label, WeightedDataset};
use crate::error::{Error, Result};

pub(crate) fn check_training_inputs(dataset: &WeightedDataset, costs: &CostVector) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::Training("empty dataset".into()));
    }
    if costs.len() != dataset.len() {
        return Err(Error::Input(format!(
            "{} costs for {} examples",
            costs.len(),
            dataset.len()
        )));
    }
    let (signal, background) = dataset.class_counts();
    if signal == 0 || background == 0 {
        return Err(Error::Training(
            "both classes must be present to train".into(),
        ));
    }
    Ok(())
}

/// Cost-weighted log-odds `ln(Σ_signal c / Σ_background c)`.
fn cost_log_odds(dataset: &WeightedDataset, costs: &[f64]) -> Result<f64> {
    let (mut pos, mut neg) = (0.0, 0.0);
    for (label, c) in dataset.labels().iter().zip(costs) {
        match label {
            Label::Signal => pos += c,
            Label::Background => neg += c,
        }
    }
    if pos <= 0.0 || neg <= 0.0 {
        return Err(Error::Training(
            "costs vanish on one class; the weighted problem is trivial".into(),
        ));
    }
    Ok((pos / neg).ln())
}

/// Zero-tree model whose base score is the cost-weighted log-odds.
pub fn initial_model(
    dataset: &WeightedDataset,
    costs: &CostVector,
    config: &LearnerConfig,
) -> Result<Model> {
    config.validate_common()?;
    if !config.kind.supports_boosting() {
        return Err(Error::Input(format!("{} has no boosting base", config.kind)));
    }
    check_training_inputs(dataset, costs)?;
    let base = cost_log_odds(dataset, &costs.normalized())?;
    Ok(Model::boosted(config.kind, dataset.n_features(), base))
}

/// Fits a model to the cost-weighted logistic surrogate.
pub fn train(dataset: &WeightedDataset, costs: &CostVector, config: &LearnerConfig) -> Result<Model> {
    config.validate()?;
    check_training_inputs(dataset, costs)?;
    match config.kind {
        LearnerKind::Logistic => fit_logistic(dataset, costs, config),
        LearnerKind::StumpBoost | LearnerKind::TreeBoost => {
            let mut model = initial_model(dataset, costs, config)?;
            let mut booster = Booster::new(dataset, &model)?;
            for _ in 0..config.rounds {
                booster.step(&mut model, dataset, costs, config);
            }
            Ok(model)
        }
    }
}

/// Returns `model` with exactly one more tree, fitted to the surrogate's
/// gradient at the model's current scores.
pub fn boost_one_round(
    model: &Model,
    dataset: &WeightedDataset,
    costs: &CostVector,
    config: &LearnerConfig,
) -> Result<Model> {
    if model.kind() != config.kind {
        return Err(Error::Input(format!(
            "model kind {} does not match learner kind {}",
            model.kind(),
            config.kind
        )));
    }
    if !model.kind().supports_boosting() {
        return Err(Error::Input(format!("{} models cannot be boosted", model.kind())));
    }
    if !(0.0..=1.0).contains(&config.learning_rate) {
        return Err(Error::Config(format!(
            "learning_rate {} not in [0, 1]",
            config.learning_rate
        )));
    }
    config.validate_common()?;
    check_training_inputs(dataset, costs)?;
    let mut next = model.clone();
    let mut booster = Booster::new(dataset, model)?;
    booster.step(&mut next, dataset, costs, config);
    Ok(next)
}

/// Mixes the learner seed with a tree's position so tree `k` draws the
/// same subsample whether it was grown by `train` or by warm starting.
fn tree_seed(seed: u64, tree_index: usize) -> u64 {
    let mut z = seed ^ (tree_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Training-side cache: feature orderings and the running scores of the
/// model being grown.
pub(crate) struct Booster {
    index: FeatureIndex,
    scores: Vec<f64>,
}

impl Booster {
    pub(crate) fn new(dataset: &WeightedDataset, model: &Model) -> Result<Self> {
        Ok(Booster {
            index: FeatureIndex::new(dataset),
            scores: predict_scores(model, dataset)?,
        })
    }

    pub(crate) fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub(crate) fn step(
        &mut self,
        model: &mut Model,
        dataset: &WeightedDataset,
        costs: &CostVector,
        config: &LearnerConfig,
    ) {
        let cost = costs.normalized();
        let grad = surrogate_gradient(&self.scores, dataset.labels(), &cost);
        let hess = surrogate_hessian(&self.scores, &cost);
        let in_sample: Vec<bool> = if config.subsample < 1.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(config.seed, model.trees().len()));
            (0..dataset.len())
                .map(|_| rng.random::<f64>() < config.subsample)
                .collect()
        } else {
            vec![true; dataset.len()]
        };
        let params = TreeParams {
            max_depth: config.tree_depth(),
            min_child_weight: config.min_child_weight,
            l2: config.l2,
            learning_rate: config.learning_rate,
        };
        let rows = RowStats {
            grad: &grad,
            hess: &hess,
            cost: &cost,
        };
        let tree = fit_tree(dataset, &self.index, &in_sample, &rows, &params);
        for (i, s) in self.scores.iter_mut().enumerate() {
            *s += tree.predict_row(dataset.row(i));
        }
        model.push_tree(tree);
    }
}
