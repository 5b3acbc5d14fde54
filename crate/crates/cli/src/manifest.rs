use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use sigcascade::cascade::CascadeConfig;
use sigcascade::data::WeightedDataset;

/// Where a dataset came from and what it hashed to.
#[derive(Debug, Clone)]
pub struct Fingerprint {
    pub source: String,
    pub sha256: String,
    pub rows: usize,
    pub signal_rows: usize,
    pub background_rows: usize,
    pub signal_weight: f64,
    pub background_weight: f64,
}

impl Fingerprint {
    pub fn new(source: String, bytes: &[u8], data: &WeightedDataset) -> Self {
        let (signal_rows, background_rows) = data.class_counts();
        let (signal_weight, background_weight) = data.class_totals();
        Fingerprint {
            source,
            sha256: hex::encode(Sha256::digest(bytes)),
            rows: data.len(),
            signal_rows,
            background_rows,
            signal_weight,
            background_weight,
        }
    }
}

/// Record of a run, written before any training happens.
#[derive(Debug, Clone)]
pub struct RunManifest<'a> {
    pub config: &'a CascadeConfig,
    pub data: &'a Fingerprint,
    pub val_frac: f64,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub outputs: Vec<String>,
}

impl RunManifest<'_> {
    pub fn render(&self) -> String {
        let d = self.data;
        let mut out = String::new();
        let _ = write!(
            out,
            "tool = sigcascade\nversion = {}\nseed = {}\ndata_source = {}\ndata_sha256 = {}\n\
             rows = {}\nsignal_rows = {}\nbackground_rows = {}\nsignal_weight = {:?}\n\
             background_weight = {:?}\nval_frac = {:?}\ntrain_rows = {}\nvalidation_rows = {}\n\
             outputs = {}\n\n[config]\n{}",
            env!("CARGO_PKG_VERSION"),
            self.config.seed,
            d.source,
            d.sha256,
            d.rows,
            d.signal_rows,
            d.background_rows,
            d.signal_weight,
            d.background_weight,
            self.val_frac,
            self.train_rows,
            self.validation_rows,
            self.outputs.join(", "),
            self.config.to_text(),
        );
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}
