use crate::data::{Label, WeightedDataset};
use crate::error::{Error, Result};
use crate::significance::{significance, ConfusionSummary, SignificanceMeasure};

/// Cut chosen by [`select_threshold`]. Events with `score > threshold` are selected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub significance: f64,
    pub n_selected: usize,
    pub summary: ConfusionSummary,
}

/// Scans every cut between distinct scores, top down, and keeps the one
/// with the highest significance. Ties go to the cut selecting fewer events.
/// Cuts where significance is undefined (signal over zero background) are skipped.
pub fn select_threshold(
    scores: &[f64],
    dataset: &WeightedDataset,
    measure: &SignificanceMeasure,
    b_reg: f64,
) -> Result<ThresholdChoice> {
    if dataset.is_empty() {
        return Err(Error::Input("cannot pick a threshold on an empty dataset".into()));
    }
    if scores.len() != dataset.len() {
        return Err(Error::Input(format!(
            "{} scores for {} examples",
            scores.len(),
            dataset.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Input("scores must be finite".into()));
    }
    let (p, _) = dataset.class_totals();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let n = order.len();
    let mut best = ThresholdChoice {
        threshold: scores[order[0]],
        significance: 0.0,
        n_selected: 0,
        summary: ConfusionSummary::new(0.0, 0.0, p, b_reg)?,
    };
    let (mut s, mut b) = (0.0, 0.0);
    for k in 1..=n {
        let i = order[k - 1];
        match dataset.labels()[i] {
            Label::Signal => s += dataset.weights()[i],
            Label::Background => b += dataset.weights()[i],
        }
        if k < n && scores[order[k - 1]] == scores[order[k]] {
            continue;
        }
        let summary = ConfusionSummary::new(s.min(p), b, p, b_reg)?;
        if summary.s > 0.0 && summary.background() <= 0.0 {
            continue;
        }
        let sig = significance(&summary, measure)?;
        if sig > best.significance {
            best = ThresholdChoice {
                threshold: if k == n { f64::NEG_INFINITY } else { scores[order[k]] },
                significance: sig,
                n_selected: k,
                summary,
            };
        }
    }
    Ok(best)
}
