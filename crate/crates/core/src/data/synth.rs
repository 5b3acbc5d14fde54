//! Two-Gaussian stand-in for challenge data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dataset::{Label, WeightedDataset};
use crate::error::{Error, Result};

/// Class weight totals of the public challenge training sample.
pub const HIGGS_SIGNAL_TOTAL: f64 = 691.988607712;
pub const HIGGS_BACKGROUND_TOTAL: f64 = 410999.847322;

const FIRST_EVENT_ID: u64 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub dim: usize,
    pub n_signal: usize,
    pub n_background: usize,
    /// Euclidean distance between the two class means.
    pub separation: f64,
    pub signal_total: f64,
    pub background_total: f64,
    /// Probability that the last feature of a row is missing.
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dim: 5,
            n_signal: 2000,
            n_background: 2000,
            separation: 2.0,
            signal_total: HIGGS_SIGNAL_TOTAL,
            background_total: HIGGS_BACKGROUND_TOTAL,
            missing_rate: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Parses `default` or a comma-separated list of `key=value` overrides
    /// on top of the defaults, e.g. `n_signal=500,separation=1.5`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let mut cfg = SynthConfig::default();
        let spec = spec.trim();
        if spec.is_empty() || spec == "default" {
            return Ok(cfg);
        }
        for item in spec.split(',') {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("synth item '{item}' is not key=value")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || Error::Config(format!("synth key '{key}': bad value '{value}'"));
            match key {
                "dim" => cfg.dim = value.parse().map_err(|_| bad())?,
                "n_signal" => cfg.n_signal = value.parse().map_err(|_| bad())?,
                "n_background" => cfg.n_background = value.parse().map_err(|_| bad())?,
                "separation" => cfg.separation = value.parse().map_err(|_| bad())?,
                "signal_total" => cfg.signal_total = value.parse().map_err(|_| bad())?,
                "background_total" => cfg.background_total = value.parse().map_err(|_| bad())?,
                "missing_rate" => cfg.missing_rate = value.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                _ => return Err(Error::Config(format!("unknown synth key '{key}'"))),
            }
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("synth dim must be >= 1".into()));
        }
        if self.n_signal == 0 || self.n_background == 0 {
            return Err(Error::Config("synth class counts must be >= 1".into()));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::Config("synth separation must be finite and >= 0".into()));
        }
        if !(self.signal_total > 0.0 && self.background_total > 0.0)
            || !self.signal_total.is_finite()
            || !self.background_total.is_finite()
        {
            return Err(Error::Config("synth weight totals must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::Config("synth missing_rate must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Signal rows centred at `+separation/2` and background rows at
/// `-separation/2` along the diagonal, unit covariance. Signal rows come
/// first. Weights are constant within a class.
pub fn synthesize(config: &SynthConfig) -> Result<WeightedDataset> {
    config.validate()?;
    let d = config.dim;
    let n = config.n_signal + config.n_background;
    let offset = 0.5 * config.separation / (d as f64).sqrt();
    let w_signal = config.signal_total / config.n_signal as f64;
    let w_background = config.background_total / config.n_background as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let (label, shift, w) = if i < config.n_signal {
            (Label::Signal, offset, w_signal)
        } else {
            (Label::Background, -offset, w_background)
        };
        for _ in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            features.push(z + shift);
        }
        if config.missing_rate > 0.0 && rng.random::<f64>() < config.missing_rate {
            features[(i + 1) * d - 1] = f64::NAN;
        }
        labels.push(label);
        weights.push(w);
    }
    let ids = (0..n as u64).map(|i| FIRST_EVENT_ID + i).collect();
    let names = (0..d).map(|j| format!("x{j}")).collect();
    WeightedDataset::new(features, d, labels, weights, ids, names)
}
