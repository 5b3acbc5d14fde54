use sigcascade::cascade::{run_cascade, CascadeConfig, Variant};
use sigcascade::data::{
    load_csv, read_submission, split, synthesize, write_csv, write_submission, CsvSchema, Label,
    SplitSpec, SynthConfig,
};
use sigcascade::learner::{classify, predict_scores, Model};

#[test]
fn csv_to_submission_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthesize(&SynthConfig {
        n_signal: 300,
        n_background: 500,
        missing_rate: 0.2,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap();
    let csv = dir.path().join("train.csv");
    write_csv(&data, &csv).unwrap();
    let loaded = load_csv(&csv, &CsvSchema::higgs()).unwrap();
    assert_eq!(loaded.len(), data.len());
    assert_eq!(loaded.class_totals(), data.class_totals());

    let (tr, va) = split(&loaded, &SplitSpec::new(0.25, 3).unwrap()).unwrap();
    for variant in [Variant::Fresh, Variant::Warmstart] {
        let mut cfg = CascadeConfig { variant, max_rounds: 6, ..CascadeConfig::higgs() };
        cfg.learner.rounds = 12;
        let out = run_cascade(&tr, &va, &cfg).unwrap();

        let model_path = dir.path().join(format!("{variant}.model"));
        out.model.save(&model_path).unwrap();
        let back = Model::load(&model_path).unwrap();
        let a = predict_scores(&out.model, &loaded).unwrap();
        let b = predict_scores(&back, &loaded).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));

        let labels = classify(&back, &loaded).unwrap();
        let sub = dir.path().join(format!("{variant}.csv"));
        write_submission(&sub, loaded.event_ids(), &b, &labels).unwrap();
        let rows = read_submission(&sub).unwrap();
        assert_eq!(rows.len(), loaded.len());
        let mut ranks: Vec<usize> = rows.iter().map(|r| r.rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (1..=loaded.len()).collect::<Vec<_>>());
        for (row, (&id, label)) in rows.iter().zip(loaded.event_ids().iter().zip(&labels)) {
            assert_eq!(row.event_id, id);
            assert_eq!(row.class, *label);
        }
        assert!(labels.contains(&Label::Signal));
    }
}

#[test]
fn identical_inputs_give_identical_runs() {
    let data = synthesize(&SynthConfig { n_signal: 400, n_background: 400, ..SynthConfig::default() })
        .unwrap();
    let (tr, va) = split(&data, &SplitSpec::new(0.3, 9).unwrap()).unwrap();
    let mut cfg = CascadeConfig { seed: 9, ..CascadeConfig::higgs() };
    cfg.learner.subsample = 0.6;
    cfg.learner.rounds = 15;
    let a = run_cascade(&tr, &va, &cfg).unwrap();
    let b = run_cascade(&tr, &va, &cfg).unwrap();
    assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    assert_eq!(a.model.to_text(), b.model.to_text());

    let other = run_cascade(&tr, &va, &CascadeConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.model.to_text(), other.model.to_text());
}
