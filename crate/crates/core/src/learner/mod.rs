//! Cost-sensitive base learners for the weighted classification step.

mod boost;
mod costs;
mod logistic;
mod model;
mod surrogate;
mod tree;

pub(crate) use boost::Booster;
pub use boost::{boost_one_round, initial_model, train};
pub use costs::{make_cost_vector, weighted_error, CostVector};
pub use model::{classify, predict_scores, LearnerConfig, LearnerKind, LinearScorer, Model};
pub(crate) use model::labels_for_threshold;
pub use surrogate::{sigmoid, softplus, surrogate_gradient, surrogate_hessian, surrogate_loss};
pub use tree::{Node, RegressionTree};
