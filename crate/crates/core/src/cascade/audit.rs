use super::trace::CascadeTrace;
use crate::significance::{exact_dual, ConfusionSummary, SignificanceMeasure};

/// Relative margin a weighted-error decrease must clear to count as strict.
pub const STRICT_DECREASE_MARGIN: f64 = 1e-12;
/// Significance shortfall beyond which a violation is a defect.
pub const DEFECT_SLACK: f64 = 1e-9;

/// One consecutive pair `(g_t, g_{t+1})` judged at the training dual of `g_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditPair {
    /// Round of `g_{t+1}`.
    pub round: usize,
    /// Exact training dual of `g_t`, if `g_t` left any background.
    pub u: Option<f64>,
    pub error_prev: f64,
    pub error_next: f64,
    pub sig_prev: f64,
    pub sig_next: f64,
    /// The guarantee's premise held for this pair.
    pub premise: bool,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub pairs: Vec<AuditPair>,
    pub violations: usize,
    /// Violations whose significance shortfall exceeds [`DEFECT_SLACK`].
    pub defects: usize,
}

impl AuditReport {
    pub fn checked(&self) -> usize {
        self.pairs.iter().filter(|p| p.premise).count()
    }
}

/// Training cost of a summary's mistakes: `b·f*(u) + s̃·u`.
fn summary_error(summary: &ConfusionSummary, u: f64, measure: &SignificanceMeasure) -> f64 {
    summary.b * measure.conjugate(u) + summary.s_tilde * u
}

/// Checks that a strict drop in training weighted error, both classifiers
/// costed at the dual weight that is exact for the earlier one, comes with a
/// strict rise in training significance.
pub fn monotonicity_audit(trace: &CascadeTrace, measure: &SignificanceMeasure) -> AuditReport {
    let mut report = AuditReport::default();
    for w in trace.records.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let u = exact_dual(&prev.train_summary, measure)
            .filter(|u| u.is_finite() && measure.dual_domain().contains(*u));
        let (error_prev, error_next) = match u {
            Some(u) => (
                summary_error(&prev.train_summary, u, measure),
                summary_error(&next.train_summary, u, measure),
            ),
            None => (f64::NAN, f64::NAN),
        };
        let scale = error_prev.abs().max(error_next.abs());
        let premise = u.is_some() && error_prev - error_next > STRICT_DECREASE_MARGIN * scale;
        let violation = premise && next.train_sig <= prev.train_sig;
        if violation {
            report.violations += 1;
            if prev.train_sig - next.train_sig > DEFECT_SLACK {
                report.defects += 1;
            }
        }
        report.pairs.push(AuditPair {
            round: next.round,
            u,
            error_prev,
            error_next,
            sig_prev: prev.train_sig,
            sig_next: next.train_sig,
            premise,
            violation,
        });
    }
    report
}
