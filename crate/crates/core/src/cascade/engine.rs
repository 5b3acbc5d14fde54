use std::cmp::Ordering;

use super::config::{CascadeConfig, DualSource, Variant};
use super::trace::{CascadeTrace, RoundRecord};
use crate::data::{Label, WeightedDataset};
use crate::error::{Error, Result};
use crate::learner::{
    classify, initial_model, labels_for_threshold, make_cost_vector, predict_scores, train,
    weighted_error, Booster, LearnerConfig, Model,
};
use crate::significance::{
    confusion_summary, optimal_u, significance, ConfusionSummary, SignificanceMeasure, U_MAX,
};

/// Model returned by a cascade plus the record of how it got there.
#[derive(Debug, Clone)]
pub struct CascadeOutcome {
    pub model: Model,
    pub trace: CascadeTrace,
    /// Seed the run actually used; differs from the config seed for reruns.
    pub seed: u64,
}

impl CascadeOutcome {
    /// Validation significance of the returned model.
    pub fn validation_significance(&self) -> f64 {
        self.trace.chosen().map_or(f64::NEG_INFINITY, |r| r.val_sig)
    }
}

/// `f'(p / (bg_total + b_reg))` on `train`: the dual weight of the
/// classifier that selects everything.
pub fn default_u0(
    train: &WeightedDataset,
    measure: &SignificanceMeasure,
    b_reg: f64,
) -> Result<f64> {
    let (p, bg) = train.class_totals();
    let summary = ConfusionSummary::new(p, bg, p, b_reg)?;
    dual_update(&summary, measure)
}

/// Closed-form dual step; zero background maps to the ceiling.
fn dual_update(summary: &ConfusionSummary, measure: &SignificanceMeasure) -> Result<f64> {
    if summary.background() <= 0.0 {
        return Ok(U_MAX.min(measure.dual_domain().hi));
    }
    Ok(optimal_u(summary, measure)?.value())
}

/// Significance, or `+inf` when selected signal meets zero background.
fn significance_or_inf(summary: &ConfusionSummary, measure: &SignificanceMeasure) -> Result<f64> {
    match significance(summary, measure) {
        Ok(v) => Ok(v),
        Err(Error::Degenerate(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn check_dataset(name: &str, data: &WeightedDataset) -> Result<()> {
    let (sig, bg) = data.class_counts();
    if sig == 0 || bg == 0 {
        return Err(Error::Input(format!(
            "{name} set needs both classes ({sig} signal, {bg} background)"
        )));
    }
    Ok(())
}

fn prepare(
    train_set: &WeightedDataset,
    validation: &WeightedDataset,
    config: &CascadeConfig,
    variant: Variant,
) -> Result<f64> {
    config.validate()?;
    if config.variant != variant {
        return Err(Error::Config(format!(
            "config asks for the {} variant",
            config.variant
        )));
    }
    check_dataset("training", train_set)?;
    check_dataset("validation", validation)?;
    if train_set.n_features() != validation.n_features() {
        return Err(Error::Input(format!(
            "training has {} features, validation {}",
            train_set.n_features(),
            validation.n_features()
        )));
    }
    match config.u0 {
        Some(u0) => Ok(u0),
        None => default_u0(train_set, &config.measure, config.b_reg),
    }
}

struct RoundInputs<'a> {
    round: usize,
    u_prev: f64,
    train_pred: &'a [Label],
    val_pred: &'a [Label],
    weighted_error: f64,
}

fn record_round(
    train_set: &WeightedDataset,
    validation: &WeightedDataset,
    config: &CascadeConfig,
    inputs: RoundInputs<'_>,
) -> Result<RoundRecord> {
    let train_summary = confusion_summary(train_set, inputs.train_pred, config.b_reg)?;
    let val_summary = confusion_summary(validation, inputs.val_pred, config.b_reg)?;
    let eval = match config.dual_source() {
        DualSource::Validation => &val_summary,
        DualSource::Training => &train_summary,
    };
    let degenerate = eval.s == 0.0 || eval.background() <= 0.0;
    let u_next = if config.freeze_dual {
        inputs.u_prev
    } else {
        dual_update(eval, &config.measure)?
    };
    Ok(RoundRecord {
        round: inputs.round,
        u_prev: inputs.u_prev,
        weighted_error: inputs.weighted_error,
        train_sig: significance_or_inf(&train_summary, &config.measure)?,
        val_sig: significance_or_inf(&val_summary, &config.measure)?,
        train_summary,
        val_summary,
        u_next,
        degenerate,
    })
}

/// Derives the seed for slot `index` (a round or a rerun) from `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains a new classifier each round and returns the one with the best
/// validation significance. Stops `extra_rounds_after_stall` rounds after
/// validation significance first fails to increase.
pub fn run_cascade_fresh(
    train_set: &WeightedDataset,
    validation: &WeightedDataset,
    config: &CascadeConfig,
) -> Result<CascadeOutcome> {
    let u0 = prepare(train_set, validation, config, Variant::Fresh)?;
    let mut u_prev = u0;
    let mut records = Vec::new();
    let mut best: Option<(usize, f64, Model)> = None;
    let mut stall_at: Option<usize> = None;

    for round in 1..=config.max_rounds {
        if stall_at.is_some_and(|s| round > s + config.extra_rounds_after_stall) {
            break;
        }
        let costs = make_cost_vector(train_set, u_prev, &config.measure)?;
        let learner = LearnerConfig {
            seed: derive_seed(config.seed, round as u64),
            ..config.learner.clone()
        };
        let model = train(train_set, &costs, &learner)?;
        let train_pred = classify(&model, train_set)?;
        let val_pred = classify(&model, validation)?;
        let record = record_round(
            train_set,
            validation,
            config,
            RoundInputs {
                round,
                u_prev,
                weighted_error: weighted_error(train_set, &costs, &train_pred)?,
                train_pred: &train_pred,
                val_pred: &val_pred,
            },
        )?;

        if stall_at.is_none() {
            if let Some(prev) = records.last() {
                let prev: &RoundRecord = prev;
                if record.val_sig <= prev.val_sig {
                    stall_at = Some(round);
                }
            }
        }
        if !record.degenerate && best.as_ref().is_none_or(|(_, sig, _)| record.val_sig > *sig) {
            best = Some((round, record.val_sig, model));
        }
        u_prev = record.u_next;
        records.push(record);
    }

    let (chosen_round, _, model) = best.ok_or_else(|| {
        Error::Cascade(format!("all {} rounds were degenerate", records.len()))
    })?;
    Ok(CascadeOutcome {
        model,
        trace: CascadeTrace {
            records,
            chosen_round,
        },
        seed: config.seed,
    })
}

/// Grows one boosted model by a single tree per round for the full
/// `max_rounds`, re-deriving the costs from the latest dual weight.
pub fn run_cascade_warmstart(
    train_set: &WeightedDataset,
    validation: &WeightedDataset,
    config: &CascadeConfig,
) -> Result<CascadeOutcome> {
    let u0 = prepare(train_set, validation, config, Variant::Warmstart)?;
    let learner = LearnerConfig {
        seed: config.seed,
        ..config.learner.clone()
    };
    learner.validate()?;
    let mut model = initial_model(
        train_set,
        &make_cost_vector(train_set, u0, &config.measure)?,
        &learner,
    )?;
    let mut booster = Booster::new(train_set, &model)?;
    let mut val_scores = predict_scores(&model, validation)?;
    let mut u_prev = u0;
    let mut records = Vec::with_capacity(config.max_rounds);

    for round in 1..=config.max_rounds {
        let costs = make_cost_vector(train_set, u_prev, &config.measure)?;
        booster.step(&mut model, train_set, &costs, &learner);
        let tree = model.trees().last().expect("a tree was just added");
        for (i, score) in val_scores.iter_mut().enumerate() {
            *score += tree.predict_row(validation.row(i));
        }
        let threshold = model.threshold();
        let train_pred: Vec<Label> = booster
            .scores()
            .iter()
            .map(|&s| labels_for_threshold(s, threshold))
            .collect();
        let val_pred: Vec<Label> = val_scores
            .iter()
            .map(|&s| labels_for_threshold(s, threshold))
            .collect();
        let record = record_round(
            train_set,
            validation,
            config,
            RoundInputs {
                round,
                u_prev,
                weighted_error: weighted_error(train_set, &costs, &train_pred)?,
                train_pred: &train_pred,
                val_pred: &val_pred,
            },
        )?;
        u_prev = record.u_next;
        records.push(record);
    }

    if records.iter().all(|r| r.degenerate) {
        return Err(Error::Cascade(format!(
            "all {} rounds were degenerate",
            records.len()
        )));
    }
    Ok(CascadeOutcome {
        model,
        trace: CascadeTrace {
            chosen_round: records.len(),
            records,
        },
        seed: config.seed,
    })
}

/// Dispatches on `config.variant`.
pub fn run_cascade(
    train_set: &WeightedDataset,
    validation: &WeightedDataset,
    config: &CascadeConfig,
) -> Result<CascadeOutcome> {
    match config.variant {
        Variant::Fresh => run_cascade_fresh(train_set, validation, config),
        Variant::Warmstart => run_cascade_warmstart(train_set, validation, config),
    }
}

/// Runs `config.repeats` independent cascades (rerun 0 uses the config seed
/// unchanged) and keeps the `keep_top` best by validation significance.
/// Reruns execute on separate threads; the result does not depend on timing.
pub fn run_cascade_repeated(
    train_set: &WeightedDataset,
    validation: &WeightedDataset,
    config: &CascadeConfig,
) -> Result<Vec<CascadeOutcome>> {
    config.validate()?;
    let configs: Vec<CascadeConfig> = (0..config.repeats)
        .map(|i| CascadeConfig {
            seed: if i == 0 {
                config.seed
            } else {
                derive_seed(config.seed ^ 0xA5A5_A5A5_A5A5_A5A5, i as u64)
            },
            ..config.clone()
        })
        .collect();
    let results: Vec<Result<CascadeOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || run_cascade(train_set, validation, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("cascade thread panicked"))
            .collect()
    });
    let mut outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;
    outcomes.sort_by(|a, b| {
        b.validation_significance()
            .partial_cmp(&a.validation_significance())
            .unwrap_or(Ordering::Equal)
    });
    outcomes.truncate(config.keep_top);
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synthesize, SplitSpec, SynthConfig};
    use crate::learner::LearnerKind;
    use crate::significance::{exact_dual, risk, U_MIN};

    fn datasets(seed: u64) -> (WeightedDataset, WeightedDataset) {
        let data = synthesize(&SynthConfig {
            n_signal: 600,
            n_background: 600,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        split(&data, &SplitSpec::new(0.3, seed).unwrap()).unwrap()
    }

    fn small_config() -> CascadeConfig {
        let mut cfg = CascadeConfig::higgs();
        cfg.learner.rounds = 10;
        cfg.max_rounds = 5;
        cfg
    }

    #[test]
    fn single_round_contract() {
        let (tr, va) = datasets(1);
        let cfg = CascadeConfig { max_rounds: 1, ..small_config() };
        let out = run_cascade_fresh(&tr, &va, &cfg).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace.chosen_round, 1);
        let r = &out.trace.records[0];
        let expected = optimal_u(&r.val_summary, &cfg.measure).unwrap().value();
        assert_eq!(r.u_next, expected);
        assert_eq!(r.u_prev, default_u0(&tr, &cfg.measure, cfg.b_reg).unwrap());
    }

    #[test]
    fn default_u0_matches_closed_form() {
        let (tr, _) = datasets(2);
        let (p, bg) = tr.class_totals();
        let u0 = default_u0(&tr, &SignificanceMeasure::Ams2, 10.0).unwrap();
        assert!((u0 - (p / (bg + 10.0)).ln_1p()).abs() < 1e-15);
    }

    #[test]
    fn returned_model_is_best_of_trace() {
        let (tr, va) = datasets(3);
        let cfg = CascadeConfig { u0: Some(1.0), ..small_config() };
        let out = run_cascade_fresh(&tr, &va, &cfg).unwrap();
        let best = out.validation_significance();
        assert!(best >= out.trace.records[0].val_sig);
        for r in &out.trace.records {
            assert!(r.degenerate || r.val_sig <= best);
        }
        let pred = classify(&out.model, &va).unwrap();
        let sig = significance(&confusion_summary(&va, &pred, cfg.b_reg).unwrap(), &cfg.measure).unwrap();
        assert_eq!(sig, best);
    }

    #[test]
    fn dual_updates_follow_evaluation_set() {
        let (tr, va) = datasets(4);
        for variant in [Variant::Fresh, Variant::Warmstart] {
            let cfg = CascadeConfig { variant, max_rounds: 6, ..small_config() };
            let out = run_cascade(&tr, &va, &cfg).unwrap();
            for w in out.trace.records.windows(2) {
                assert_eq!(w[1].u_prev, w[0].u_next);
            }
            for r in &out.trace.records {
                let eval = match cfg.dual_source() {
                    DualSource::Validation => &r.val_summary,
                    DualSource::Training => &r.train_summary,
                };
                let u = optimal_u(eval, &cfg.measure).unwrap().value();
                assert!((r.u_next - u).abs() <= 1e-12 * u.max(1.0));
            }
        }
    }

    #[test]
    fn duality_bound_holds_each_round() {
        let (tr, va) = datasets(5);
        let out = run_cascade_fresh(&tr, &va, &small_config()).unwrap();
        for r in &out.trace.records {
            let floor = -0.5 * r.train_sig * r.train_sig;
            for k in 0..=400 {
                let u = k as f64 * 0.05;
                let value = risk(&r.train_summary, u, &SignificanceMeasure::Ams2).unwrap();
                assert!(floor <= value + 1e-9 * floor.abs().max(1.0), "u={u}");
            }
        }
    }

    #[test]
    fn warmstart_grows_one_tree_per_round() {
        let (tr, va) = datasets(6);
        for t in [1, 7] {
            let cfg = CascadeConfig { variant: Variant::Warmstart, max_rounds: t, ..small_config() };
            let out = run_cascade_warmstart(&tr, &va, &cfg).unwrap();
            assert_eq!(out.model.trees().len(), t);
            assert_eq!(out.trace.len(), t);
            assert_eq!(out.trace.chosen_round, t);
        }
    }

    #[test]
    fn frozen_warmstart_is_plain_boosting() {
        let (tr, va) = datasets(7);
        let mut cfg = CascadeConfig {
            variant: Variant::Warmstart,
            max_rounds: 12,
            u0: Some(0.01),
            freeze_dual: true,
            seed: 99,
            ..small_config()
        };
        cfg.learner.subsample = 0.7;
        let out = run_cascade_warmstart(&tr, &va, &cfg).unwrap();
        let costs = make_cost_vector(&tr, 0.01, &cfg.measure).unwrap();
        let plain = train(
            &tr,
            &costs,
            &LearnerConfig { rounds: 12, seed: 99, ..cfg.learner.clone() },
        )
        .unwrap();
        assert_eq!(out.model.to_text(), plain.to_text());
        let a = predict_scores(&out.model, &va).unwrap();
        let b = predict_scores(&plain, &va).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn warmstart_validation_scores_track_model() {
        let (tr, va) = datasets(8);
        let cfg = CascadeConfig { variant: Variant::Warmstart, max_rounds: 9, ..small_config() };
        let out = run_cascade_warmstart(&tr, &va, &cfg).unwrap();
        let pred = classify(&out.model, &va).unwrap();
        let summary = confusion_summary(&va, &pred, cfg.b_reg).unwrap();
        assert_eq!(summary, out.trace.records.last().unwrap().val_summary);
    }

    #[test]
    fn stall_bounds_round_count() {
        let (tr, va) = datasets(9);
        let cfg = CascadeConfig { max_rounds: 40, extra_rounds_after_stall: 2, ..small_config() };
        let out = run_cascade_fresh(&tr, &va, &cfg).unwrap();
        let recs = &out.trace.records;
        let stall = (1..recs.len()).find(|&i| recs[i].val_sig <= recs[i - 1].val_sig);
        match stall {
            Some(i) => assert_eq!(recs.len(), (i + 1 + 2).min(40)),
            None => assert_eq!(recs.len(), 40),
        }
    }

    #[test]
    fn frozen_fresh_rounds_share_costs() {
        let (tr, va) = datasets(10);
        let cfg = CascadeConfig { freeze_dual: true, u0: Some(0.3), ..small_config() };
        let out = run_cascade_fresh(&tr, &va, &cfg).unwrap();
        assert!(out.trace.records.iter().all(|r| r.u_prev == 0.3 && r.u_next == 0.3));
    }

    #[test]
    fn deterministic_runs() {
        let (tr, va) = datasets(11);
        let mut cfg = small_config();
        cfg.learner.subsample = 0.6;
        let a = run_cascade_fresh(&tr, &va, &cfg).unwrap();
        let b = run_cascade_fresh(&tr, &va, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.model.to_text(), b.model.to_text());
    }

    #[test]
    fn repeated_keeps_best() {
        let (tr, va) = datasets(12);
        let mut cfg = CascadeConfig { repeats: 4, keep_top: 2, ..small_config() };
        cfg.learner.subsample = 0.5;
        let kept = run_cascade_repeated(&tr, &va, &cfg).unwrap();
        assert_eq!(kept.len(), 2);
        assert!(kept[0].validation_significance() >= kept[1].validation_significance());
        let first = run_cascade_fresh(&tr, &va, &cfg).unwrap();
        assert!(kept[1].validation_significance() >= first.validation_significance()
            || kept.iter().any(|o| o.seed == cfg.seed));
        let again = run_cascade_repeated(&tr, &va, &cfg).unwrap();
        assert_eq!(kept[0].trace, again[0].trace);
    }

    #[test]
    fn variant_mismatch_and_bad_learner() {
        let (tr, va) = datasets(13);
        let cfg = small_config();
        assert!(matches!(run_cascade_warmstart(&tr, &va, &cfg), Err(Error::Config(_))));
        let mut cfg = CascadeConfig { variant: Variant::Warmstart, ..small_config() };
        cfg.learner.kind = LearnerKind::Logistic;
        assert!(run_cascade(&tr, &va, &cfg).is_err());
    }

    #[test]
    fn single_class_validation_is_rejected() {
        let (tr, va) = datasets(14);
        let signal_rows: Vec<usize> = (0..va.len())
            .filter(|&i| va.labels()[i] == Label::Signal)
            .collect();
        let only_signal = va.subset(&signal_rows);
        assert!(matches!(
            run_cascade_fresh(&tr, &only_signal, &small_config()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn zero_background_update_hits_ceiling() {
        let summary = ConfusionSummary::new(3.0, 0.0, 5.0, 0.0).unwrap();
        assert_eq!(dual_update(&summary, &SignificanceMeasure::Ams2).unwrap(), U_MAX);
        let nothing = ConfusionSummary::new(0.0, 4.0, 5.0, 0.0).unwrap();
        assert_eq!(dual_update(&nothing, &SignificanceMeasure::Ams2).unwrap(), U_MIN);
        assert!(exact_dual(&summary, &SignificanceMeasure::Ams2).is_none());
    }
}
