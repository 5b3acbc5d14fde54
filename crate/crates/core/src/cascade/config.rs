use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::learner::{LearnerConfig, LearnerKind};
use crate::significance::{MeasureKind, SignificanceMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// A new classifier is trained from scratch every round.
    Fresh,
    /// One persistent boosted model gains a single tree per round.
    Warmstart,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fresh" => Ok(Variant::Fresh),
            "warmstart" => Ok(Variant::Warmstart),
            other => Err(Error::Config(format!("unknown variant '{other}'"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Fresh => "fresh",
            Variant::Warmstart => "warmstart",
        })
    }
}

/// Which dataset's counts drive the dual update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualSource {
    Validation,
    Training,
}

impl FromStr for DualSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "validation" | "held-out" => Ok(DualSource::Validation),
            "training" => Ok(DualSource::Training),
            other => Err(Error::Config(format!("unknown dual source '{other}'"))),
        }
    }
}

impl std::fmt::Display for DualSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DualSource::Validation => "validation",
            DualSource::Training => "training",
        })
    }
}

/// Additive background used when mimicking the challenge scoring.
pub const HIGGS_B_REG: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct CascadeConfig {
    pub measure: SignificanceMeasure,
    /// Initial dual weight; `None` linearizes at the select-everything classifier.
    pub u0: Option<f64>,
    pub max_rounds: usize,
    pub variant: Variant,
    pub extra_rounds_after_stall: usize,
    pub b_reg: f64,
    pub learner: LearnerConfig,
    pub seed: u64,
    /// `None` picks validation for `Fresh` and training for `Warmstart`.
    pub dual_source: Option<DualSource>,
    /// Independent reruns with derived seeds.
    pub repeats: usize,
    /// How many reruns to keep, ranked by best validation significance.
    pub keep_top: usize,
    /// Test hook: hold `u` at `u0` for every round.
    pub freeze_dual: bool,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            measure: SignificanceMeasure::Ams2,
            u0: None,
            max_rounds: 10,
            variant: Variant::Fresh,
            extra_rounds_after_stall: 10,
            b_reg: 0.0,
            learner: LearnerConfig::default(),
            seed: 0,
            dual_source: None,
            repeats: 1,
            keep_top: 1,
            freeze_dual: false,
        }
    }
}

impl CascadeConfig {
    /// Defaults with the challenge's additive background regularizer.
    pub fn higgs() -> Self {
        CascadeConfig {
            b_reg: HIGGS_B_REG,
            ..CascadeConfig::default()
        }
    }

    pub fn dual_source(&self) -> DualSource {
        self.dual_source.unwrap_or(match self.variant {
            Variant::Fresh => DualSource::Validation,
            Variant::Warmstart => DualSource::Training,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rounds < 1 {
            return Err(Error::Config("max_rounds must be >= 1".into()));
        }
        if let Some(u0) = self.u0 {
            if !(u0 > 0.0 && u0.is_finite()) {
                return Err(Error::Config(format!("u0 must be positive, got {u0}")));
            }
        }
        if !(self.b_reg >= 0.0 && self.b_reg.is_finite()) {
            return Err(Error::Config("b_reg must be finite and >= 0".into()));
        }
        if self.repeats < 1 || self.keep_top < 1 {
            return Err(Error::Config("repeats and keep_top must be >= 1".into()));
        }
        if self.variant == Variant::Warmstart && !self.learner.kind.supports_boosting() {
            return Err(Error::Config(format!(
                "warmstart needs a boosting learner, not {}",
                self.learner.kind
            )));
        }
        self.learner.validate_common()
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{value}'")))
        }
        match key {
            "measure" => self.measure = SignificanceMeasure::from_kind(value.parse::<MeasureKind>()?)?,
            "u0" => {
                self.u0 = match value {
                    "auto" => None,
                    v => Some(num(key, v)?),
                }
            }
            "max_rounds" => self.max_rounds = num(key, value)?,
            "variant" => self.variant = value.parse()?,
            "extra_rounds_after_stall" => self.extra_rounds_after_stall = num(key, value)?,
            "b_reg" => self.b_reg = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "dual_source" => {
                self.dual_source = match value {
                    "auto" => None,
                    v => Some(v.parse()?),
                }
            }
            "repeats" => self.repeats = num(key, value)?,
            "keep_top" => self.keep_top = num(key, value)?,
            "learner" => self.learner.kind = value.parse::<LearnerKind>()?,
            "learner_rounds" => self.learner.rounds = num(key, value)?,
            "learning_rate" => self.learner.learning_rate = num(key, value)?,
            "max_depth" => self.learner.max_depth = num(key, value)?,
            "min_child_weight" => self.learner.min_child_weight = num(key, value)?,
            "l2" => self.learner.l2 = num(key, value)?,
            "subsample" => self.learner.subsample = num(key, value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", idx + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", idx + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>, base: CascadeConfig) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = base;
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Renders every file-settable key; [`apply_text`](Self::apply_text) reads it back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let u0 = self.u0.map_or("auto".to_string(), |u| format!("{u:?}"));
        let dual = self.dual_source.map_or("auto".to_string(), |d| d.to_string());
        let l = &self.learner;
        let _ = write!(
            out,
            "measure = {}\nu0 = {u0}\nmax_rounds = {}\nvariant = {}\nextra_rounds_after_stall = {}\n\
             b_reg = {:?}\nseed = {}\ndual_source = {dual}\nrepeats = {}\nkeep_top = {}\n\
             learner = {}\nlearner_rounds = {}\nlearning_rate = {:?}\nmax_depth = {}\n\
             min_child_weight = {:?}\nl2 = {:?}\nsubsample = {:?}\n",
            self.measure.kind(),
            self.max_rounds,
            self.variant,
            self.extra_rounds_after_stall,
            self.b_reg,
            self.seed,
            self.repeats,
            self.keep_top,
            l.kind,
            l.rounds,
            l.learning_rate,
            l.max_depth,
            l.min_child_weight,
            l.l2,
            l.subsample,
        );
        out
    }
}
