use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::significance::ConfusionSummary;

/// One cascade round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    /// Dual weight the round's costs were built from.
    pub u_prev: f64,
    /// Training cost of the round's mistakes under `u_prev`.
    pub weighted_error: f64,
    pub train_summary: ConfusionSummary,
    pub val_summary: ConfusionSummary,
    /// `+inf` when selected signal meets zero background.
    pub train_sig: f64,
    pub val_sig: f64,
    pub u_next: f64,
    /// The evaluation summary had `s = 0` or zero background.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CascadeTrace {
    pub records: Vec<RoundRecord>,
    /// 1-based round whose model was returned.
    pub chosen_round: usize,
}

pub const TRACE_HEADER: &str = "round,u_prev,weighted_error,train_sig,val_sig,u_next";

impl CascadeTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn chosen(&self) -> Option<&RoundRecord> {
        self.records.iter().find(|r| r.round == self.chosen_round)
    }

    /// Round-trip precision CSV with LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?}",
                r.round, r.u_prev, r.weighted_error, r.train_sig, r.val_sig, r.u_next
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let summary = ConfusionSummary::new(1.0, 2.0, 3.0, 0.0).unwrap();
        let trace = CascadeTrace {
            records: vec![RoundRecord {
                round: 1,
                u_prev: 0.1,
                weighted_error: 1e-7,
                train_summary: summary,
                val_summary: summary,
                train_sig: 0.5,
                val_sig: f64::INFINITY,
                u_next: 2.0,
                degenerate: false,
            }],
            chosen_round: 1,
        };
        assert_eq!(
            trace.to_csv(),
            "round,u_prev,weighted_error,train_sig,val_sig,u_next\n1,0.1,1e-7,0.5,inf,2.0\n"
        );
        assert_eq!(trace.chosen().unwrap().round, 1);
    }
}
