//! The alternating loop between weighted classification and the closed-form
//! dual update, plus the pieces around it.

mod audit;
mod config;
mod engine;
mod ensemble;
mod threshold;
mod trace;

pub use audit::{monotonicity_audit, AuditPair, AuditReport, DEFECT_SLACK, STRICT_DECREASE_MARGIN};
pub use config::{CascadeConfig, DualSource, Variant, HIGGS_B_REG};
pub use engine::{
    default_u0, derive_seed, run_cascade, run_cascade_fresh, run_cascade_repeated,
    run_cascade_warmstart, CascadeOutcome,
};
pub use ensemble::{
    ensemble_average, ensemble_classify, ensemble_scores, rank_normalize, Ensemble,
    ThresholdPolicy,
};
pub use threshold::{select_threshold, ThresholdChoice};
pub use trace::{CascadeTrace, RoundRecord, TRACE_HEADER};
