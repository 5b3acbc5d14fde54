//! Weighted datasets: loading, synthesis, splitting and submission output.

mod csv_io;
mod dataset;
mod split;
mod synth;

pub use csv_io::{
    load_csv, read_csv, read_submission, render_submission, write_csv, write_csv_to,
    write_submission, CsvSchema, SubmissionRow,
};
pub use dataset::{is_missing, labels_from_ints, Label, WeightedDataset, MISSING_MARKER};
pub use split::{split, SplitSpec};
pub use synth::{synthesize, SynthConfig, HIGGS_BACKGROUND_TOTAL, HIGGS_SIGNAL_TOTAL};
