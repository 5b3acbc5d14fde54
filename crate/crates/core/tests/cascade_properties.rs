use proptest::prelude::*;
use sigcascade::cascade::{
    ensemble_average, ensemble_scores, monotonicity_audit, rank_normalize, run_cascade,
    run_cascade_fresh, select_threshold, CascadeConfig, DualSource, Variant,
};
use sigcascade::data::{labels_from_ints, split, synthesize, SplitSpec, SynthConfig, WeightedDataset};
use sigcascade::learner::{classify, make_cost_vector, train, LearnerConfig, Model};
use sigcascade::significance::{
    confusion_summary, optimal_u, significance, SignificanceMeasure,
};
use sigcascade::verify::brute_force_threshold;

fn lattice_dataset(labels: &[i64], weights: &[u32]) -> WeightedDataset {
    let n = labels.len();
    WeightedDataset::new(
        vec![0.0; n],
        1,
        labels_from_ints(labels).unwrap(),
        weights.iter().map(|&k| k as f64 / 64.0).collect(),
        (0..n as u64).collect(),
        vec!["x".into()],
    )
    .unwrap()
}

fn synthetic(seed: u64, n: usize) -> (WeightedDataset, WeightedDataset) {
    let data = synthesize(&SynthConfig {
        n_signal: n,
        n_background: n,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    split(&data, &SplitSpec::new(0.3, seed).unwrap()).unwrap()
}

fn measure_strategy() -> impl Strategy<Value = SignificanceMeasure> {
    prop_oneof![Just(SignificanceMeasure::Ams2), Just(SignificanceMeasure::Ams3)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn threshold_scan_matches_brute_force(
        events in prop::collection::vec((any::<bool>(), 1u32..2000, 0i32..12), 1..80),
        measure in measure_strategy(),
        b_reg in prop_oneof![Just(0.0), Just(10.0)],
    ) {
        let labels: Vec<i64> = events.iter().map(|e| if e.0 { 1 } else { -1 }).collect();
        let weights: Vec<u32> = events.iter().map(|e| e.1).collect();
        let scores: Vec<f64> = events.iter().map(|e| e.2 as f64 / 3.0).collect();
        let data = lattice_dataset(&labels, &weights);
        let fast = select_threshold(&scores, &data, &measure, b_reg).unwrap();
        let (t, sig) = brute_force_threshold(&scores, &data, &measure, b_reg).unwrap();
        prop_assert_eq!(fast.threshold.to_bits(), t.to_bits());
        prop_assert_eq!(fast.significance.to_bits(), sig.to_bits());
        let selected = scores.iter().filter(|&&s| s > fast.threshold).count();
        prop_assert_eq!(selected, fast.n_selected);
    }

    #[test]
    fn rank_normalization_is_monotone(scores in prop::collection::vec(-5i32..5, 2..60)) {
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let ranks = rank_normalize(&scores);
        for i in 0..scores.len() {
            prop_assert!((0.0..=1.0).contains(&ranks[i]));
            for j in 0..scores.len() {
                if scores[i] < scores[j] {
                    prop_assert!(ranks[i] < ranks[j]);
                }
                if scores[i] == scores[j] {
                    prop_assert_eq!(ranks[i], ranks[j]);
                }
            }
        }
    }

    #[test]
    fn config_text_round_trips(
        max_rounds in 1usize..600,
        u0 in prop::option::of(1e-6f64..20.0),
        b_reg in 0.0f64..100.0,
        seed in any::<u64>(),
        warm in any::<bool>(),
        subsample in 0.05f64..=1.0,
    ) {
        let mut cfg = CascadeConfig {
            max_rounds,
            u0,
            b_reg,
            seed,
            variant: if warm { Variant::Warmstart } else { Variant::Fresh },
            ..CascadeConfig::default()
        };
        cfg.learner.subsample = subsample;
        let mut back = CascadeConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), cfg.to_text());
        prop_assert_eq!(back.u0, cfg.u0);
        prop_assert_eq!(back.b_reg.to_bits(), cfg.b_reg.to_bits());
    }
}

#[test]
fn every_dual_update_matches_its_summary() {
    let (tr, va) = synthetic(21, 400);
    for (variant, source) in [
        (Variant::Fresh, DualSource::Validation),
        (Variant::Warmstart, DualSource::Training),
        (Variant::Warmstart, DualSource::Validation),
        (Variant::Fresh, DualSource::Training),
    ] {
        let mut cfg = CascadeConfig {
            variant,
            dual_source: Some(source),
            max_rounds: 8,
            ..CascadeConfig::higgs()
        };
        cfg.learner.rounds = 8;
        let out = run_cascade(&tr, &va, &cfg).unwrap();
        assert!(out.trace.len() <= cfg.max_rounds);
        for r in &out.trace.records {
            let eval = match source {
                DualSource::Validation => &r.val_summary,
                DualSource::Training => &r.train_summary,
            };
            let u = optimal_u(eval, &cfg.measure).unwrap().value();
            assert!((r.u_next - u).abs() <= 1e-12, "{variant} {source} round {}", r.round);
        }
    }
}

#[test]
fn audit_is_clean_for_both_variants() {
    for seed in 0..4 {
        let (tr, va) = synthetic(seed, 300);
        for variant in [Variant::Fresh, Variant::Warmstart] {
            let mut cfg = CascadeConfig {
                variant,
                seed,
                max_rounds: 10,
                ..CascadeConfig::higgs()
            };
            cfg.learner.rounds = 10;
            let out = run_cascade(&tr, &va, &cfg).unwrap();
            let report = monotonicity_audit(&out.trace, &cfg.measure);
            assert_eq!(report.pairs.len(), out.trace.len() - 1);
            assert_eq!(report.violations, 0, "seed {seed} {variant}: {report:?}");
        }
    }
}

fn validation_ams(labels_of: &[sigcascade::data::Label], va: &WeightedDataset, b_reg: f64) -> f64 {
    let summary = confusion_summary(va, labels_of, b_reg).unwrap();
    significance(&summary, &SignificanceMeasure::Ams2).unwrap()
}

#[test]
fn ensemble_is_no_worse_than_its_weakest_member() {
    let (tr, va) = synthetic(5, 700);
    let cfg = CascadeConfig::higgs();
    let mut members: Vec<Model> = Vec::new();
    let u0 = sigcascade::cascade::default_u0(&tr, &cfg.measure, cfg.b_reg).unwrap();
    let costs = make_cost_vector(&tr, u0, &cfg.measure).unwrap();
    for seed in 0..5 {
        let learner = LearnerConfig { subsample: 0.8, seed, ..LearnerConfig::default() };
        members.push(train(&tr, &costs, &learner).unwrap());
    }
    for seed in 0..5 {
        let mut c = CascadeConfig { seed, ..cfg.clone() };
        c.learner.subsample = 0.8;
        members.push(run_cascade_fresh(&tr, &va, &c).unwrap().model);
    }
    let member_ams: Vec<f64> = members
        .iter()
        .map(|m| validation_ams(&classify(m, &va).unwrap(), &va, cfg.b_reg))
        .collect();

    let ensemble = ensemble_average(members, &[1.0; 10]).unwrap();
    let train_scores = ensemble_scores(&ensemble, &tr).unwrap();
    let cut = select_threshold(&train_scores, &tr, &cfg.measure, cfg.b_reg).unwrap();
    let val_scores = ensemble_scores(&ensemble, &va).unwrap();
    let labels: Vec<_> = val_scores
        .iter()
        .map(|&s| if s > cut.threshold { sigcascade::data::Label::Signal } else { sigcascade::data::Label::Background })
        .collect();
    let ensemble_ams = validation_ams(&labels, &va, cfg.b_reg);
    let weakest = member_ams.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(ensemble_ams >= weakest, "ensemble {ensemble_ams} vs members {member_ams:?}");
}
