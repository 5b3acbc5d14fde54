use std::path::Path;

use sigcascade::cascade::{run_cascade_repeated, CascadeConfig, CascadeOutcome};
use sigcascade::data::{
    read_csv, split, synthesize, write_csv_to, write_submission, CsvSchema, SplitSpec,
    SynthConfig, WeightedDataset,
};
use sigcascade::learner::{classify, predict_scores, Model};
use sigcascade::significance::{confusion_summary, significance, ConfusionSummary, SignificanceMeasure};
use sigcascade::verify::{run_oracle_suite, SuiteOptions};
use sigcascade::Error;

use crate::manifest::{Fingerprint, RunManifest};
use crate::{CascadeArgs, CheckArgs, DataArgs, EvalArgs};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_CASCADE: u8 = 3;
pub const EXIT_CHECK: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl ToString) -> Self {
        CliError {
            code,
            message: message.to_string(),
        }
    }

    /// Config errors keep exit 1 wherever they surface; everything else gets `code`.
    fn from_lib(code: u8, err: Error) -> Self {
        match err {
            Error::Config(_) => CliError::new(EXIT_CONFIG, err),
            other => CliError::new(code, other),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Six significant digits, switching to exponent form outside `[1e-4, 1e6)`.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    // Exponent after rounding to six digits, so 999999.7 goes to scientific.
    let sci = format!("{x:.5e}");
    let magnitude: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..6).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

fn load_data(args: &DataArgs) -> CliResult<(WeightedDataset, Fingerprint)> {
    if let Some(path) = &args.data {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", path.display())))?;
        let data = read_csv(bytes.as_slice(), &CsvSchema::higgs())
            .map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", path.display())))?;
        let print = Fingerprint::new(format!("file:{}", path.display()), &bytes, &data);
        return Ok((data, print));
    }
    let spec = args
        .synth
        .as_deref()
        .ok_or_else(|| CliError::new(EXIT_CONFIG, "one of --data or --synth is required"))?;
    let cfg = SynthConfig::from_spec(spec).map_err(|e| CliError::from_lib(EXIT_DATA, e))?;
    let data = synthesize(&cfg).map_err(|e| CliError::from_lib(EXIT_DATA, e))?;
    let mut bytes = Vec::new();
    write_csv_to(&data, &mut bytes).map_err(|e| CliError::new(EXIT_DATA, e))?;
    let print = Fingerprint::new(format!("synth:{spec}"), &bytes, &data);
    Ok((data, print))
}

fn build_config(args: &CascadeArgs) -> CliResult<CascadeConfig> {
    let config_err = |e: Error| CliError::new(EXIT_CONFIG, e);
    let mut cfg = match &args.config {
        Some(path) => CascadeConfig::from_file(path, CascadeConfig::higgs()).map_err(config_err)?,
        None => CascadeConfig::higgs(),
    };
    let overrides = [
        ("measure", args.measure.clone()),
        ("variant", args.variant.clone()),
        ("max_rounds", args.rounds.map(|v| v.to_string())),
        ("u0", args.u0.map(|v| format!("{v:?}"))),
        ("b_reg", args.b_reg.map(|v| format!("{v:?}"))),
        ("seed", args.seed.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            cfg.set(key, &value).map_err(config_err)?;
        }
    }
    cfg.validate().map_err(config_err)?;
    SplitSpec::new(args.val_frac, cfg.seed).map_err(config_err)?;
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", path.display())))
}

fn write_outcome(dir: &Path, suffix: &str, outcome: &CascadeOutcome) -> CliResult<()> {
    write_file(&dir.join(format!("model{suffix}.txt")), &outcome.model.to_text())?;
    write_file(&dir.join(format!("trace{suffix}.csv")), &outcome.trace.to_csv())
}

fn submission(path: &Path, model: &Model, data: &WeightedDataset) -> CliResult<()> {
    let scores = predict_scores(model, data).map_err(|e| CliError::new(EXIT_DATA, e))?;
    let labels = classify(model, data).map_err(|e| CliError::new(EXIT_DATA, e))?;
    write_submission(path, data.event_ids(), &scores, &labels)
        .map_err(|e| CliError::new(EXIT_DATA, e))
}

pub fn cascade(args: &CascadeArgs) -> CliResult<String> {
    let cfg = build_config(args)?;
    let (data, print) = load_data(&args.data)?;
    let spec = SplitSpec::new(args.val_frac, cfg.seed).map_err(|e| CliError::new(EXIT_CONFIG, e))?;
    let (train, validation) = split(&data, &spec).map_err(|e| CliError::new(EXIT_DATA, e))?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| {
        CliError::new(EXIT_DATA, format!("{}: {e}", args.out_dir.display()))
    })?;
    let mut outputs = vec!["model.txt".to_string(), "trace.csv".to_string()];
    for rank in 2..=cfg.keep_top.min(cfg.repeats) {
        outputs.push(format!("model-{rank}.txt"));
        outputs.push(format!("trace-{rank}.csv"));
    }
    if let Some(path) = &args.submission {
        outputs.push(path.display().to_string());
    }
    let manifest = RunManifest {
        config: &cfg,
        data: &print,
        val_frac: args.val_frac,
        train_rows: train.len(),
        validation_rows: validation.len(),
        outputs,
    };
    let manifest_path = args.out_dir.join("manifest.txt");
    manifest
        .write(&manifest_path)
        .map_err(|e| CliError::new(EXIT_DATA, format!("{}: {e}", manifest_path.display())))?;

    let kept = run_cascade_repeated(&train, &validation, &cfg)
        .map_err(|e| CliError::from_lib(EXIT_CASCADE, e))?;
    for (rank, outcome) in kept.iter().enumerate() {
        let suffix = if rank == 0 { String::new() } else { format!("-{}", rank + 1) };
        write_outcome(&args.out_dir, &suffix, outcome)?;
    }
    let best = &kept[0];
    if let Some(path) = &args.submission {
        submission(path, &best.model, &data)?;
    }

    let chosen = best.trace.chosen().expect("chosen round is in the trace");
    println!(
        "rounds {}  chosen round {}  u {}",
        best.trace.len(),
        chosen.round,
        fmt6(chosen.u_prev)
    );
    println!("train {} = {}", cfg.measure.name(), fmt6(chosen.train_sig));
    println!("validation {} = {}", cfg.measure.name(), fmt6(chosen.val_sig));
    Ok(format!(
        "rounds={} chosen={} train_sig={} val_sig={}",
        best.trace.len(),
        chosen.round,
        fmt6(chosen.train_sig),
        fmt6(chosen.val_sig)
    ))
}

fn report_summary(summary: &ConfusionSummary) -> CliResult<String> {
    let sig = |m: &SignificanceMeasure| {
        significance(summary, m).map_err(|e| CliError::new(EXIT_DATA, e))
    };
    let ams2 = sig(&SignificanceMeasure::Ams2)?;
    let ams3 = sig(&SignificanceMeasure::Ams3)?;
    println!("s = {}", fmt6(summary.s));
    println!("b = {} (+ b_reg {})", fmt6(summary.b), fmt6(summary.b_reg));
    println!("AMS2 = {}", fmt6(ams2));
    println!("AMS3 = {}", fmt6(ams3));
    Ok(format!(
        "s={} b={} b_reg={} ams2={} ams3={}",
        fmt6(summary.s),
        fmt6(summary.b),
        fmt6(summary.b_reg),
        fmt6(ams2),
        fmt6(ams3)
    ))
}

fn parse_summary(text: &str, b_reg: f64) -> CliResult<ConfusionSummary> {
    let bad = || CliError::new(EXIT_CONFIG, format!("--summary expects 's,b', got '{text}'"));
    let (s, b) = text.split_once(',').ok_or_else(bad)?;
    let s: f64 = s.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    ConfusionSummary::new(s, b, s, b_reg).map_err(|e| CliError::new(EXIT_CONFIG, e))
}

pub fn eval(args: &EvalArgs) -> CliResult<String> {
    if let Some(text) = &args.summary {
        return report_summary(&parse_summary(text, args.b_reg)?);
    }
    let path = args
        .model
        .as_ref()
        .ok_or_else(|| CliError::new(EXIT_CONFIG, "--model is required"))?;
    let model = Model::load(path).map_err(|e| CliError::new(EXIT_DATA, e))?;
    let (data, _) = load_data(&args.data)?;
    let labels = classify(&model, &data).map_err(|e| CliError::new(EXIT_DATA, e))?;
    let summary =
        confusion_summary(&data, &labels, args.b_reg).map_err(|e| CliError::from_lib(EXIT_DATA, e))?;
    let line = report_summary(&summary)?;
    if let Some(out) = &args.submission {
        submission(out, &model, &data)?;
    }
    Ok(line)
}

pub fn check(args: &CheckArgs) -> CliResult<String> {
    let options = SuiteOptions {
        seed: args.seed,
        instances: args.instances,
        inject_fault: args.inject_fault,
    };
    let reports = run_oracle_suite(&options).map_err(|e| CliError::new(EXIT_CHECK, e))?;
    let mut failed = 0;
    for r in &reports {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {}: {} instances, {} failures, worst {} (tolerance {})",
            r.name,
            r.instances,
            r.failures,
            fmt6(r.worst),
            fmt6(r.tolerance)
        );
        if r.excluded > 0 {
            println!("  {} instances outside the dual clamp checked as a bound only", r.excluded);
        }
        if let Some(instance) = &r.first_failure {
            println!("  first failing instance: {instance}");
        }
        if !r.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::new(
            EXIT_CHECK,
            format!("{failed} of {} properties failed", reports.len()),
        ));
    }
    Ok(format!("passed={} failed=0", reports.len()))
}
