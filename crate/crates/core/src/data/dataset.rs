use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Literal used on disk for a missing feature value.
pub const MISSING_MARKER: f64 = -999.0;

/// Class label; `Signal` is `+1`, `Background` is `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Signal,
    Background,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Signal => 1.0,
            Label::Background => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Signal => 1,
            Label::Background => -1,
        }
    }

    pub fn from_char_code(code: &str) -> Option<Label> {
        match code {
            "s" => Some(Label::Signal),
            "b" => Some(Label::Background),
            _ => None,
        }
    }

    pub fn char_code(self) -> char {
        match self {
            Label::Signal => 's',
            Label::Background => 'b',
        }
    }
}

impl TryFrom<i64> for Label {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        match value {
            1 => Ok(Label::Signal),
            -1 => Ok(Label::Background),
            other => Err(Error::Input(format!("label {other} is not in {{-1, +1}}"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.as_i8())
    }
}

/// Converts integer labels, rejecting anything outside `{-1, +1}`.
pub fn labels_from_ints(values: &[i64]) -> Result<Vec<Label>> {
    values.iter().map(|&v| Label::try_from(v)).collect()
}

/// An immutable weighted, labelled sample.
///
/// Features are stored row-major; a missing entry is `NaN` in memory and
/// [`MISSING_MARKER`] on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<Label>,
    weights: Vec<f64>,
    event_ids: Vec<u64>,
    column_names: Vec<String>,
}

impl WeightedDataset {
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<Label>,
        weights: Vec<f64>,
        event_ids: Vec<u64>,
        column_names: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        if n_features == 0 {
            return Err(Error::Validation("dataset needs at least one feature".into()));
        }
        if features.len() != n * n_features {
            return Err(Error::Validation(format!(
                "{} feature values for {n} rows of width {n_features}",
                features.len()
            )));
        }
        if weights.len() != n || event_ids.len() != n {
            return Err(Error::Validation(format!(
                "column lengths differ: {n} labels, {} weights, {} ids",
                weights.len(),
                event_ids.len()
            )));
        }
        if column_names.len() != n_features {
            return Err(Error::Validation(format!(
                "{} column names for {n_features} features",
                column_names.len()
            )));
        }
        if let Some(row) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Validation(format!(
                "row {row}: weight {} is not strictly positive",
                weights[row]
            )));
        }
        if let Some(pos) = features.iter().position(|v| v.is_infinite()) {
            return Err(Error::Validation(format!(
                "row {}: infinite feature value",
                pos / n_features
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for (row, id) in event_ids.iter().enumerate() {
            if !seen.insert(*id) {
                return Err(Error::Validation(format!("row {row}: duplicate event id {id}")));
            }
        }
        Ok(WeightedDataset {
            features,
            n_features,
            labels,
            weights,
            event_ids,
            column_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.n_features + feature]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn event_ids(&self) -> &[u64] {
        &self.event_ids
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Total weight of each class, `(signal, background)`.
    pub fn class_totals(&self) -> (f64, f64) {
        let mut totals = (0.0, 0.0);
        for (label, w) in self.labels.iter().zip(&self.weights) {
            match label {
                Label::Signal => totals.0 += w,
                Label::Background => totals.1 += w,
            }
        }
        totals
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let signal = self.labels.iter().filter(|l| **l == Label::Signal).count();
        (signal, self.len() - signal)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> WeightedDataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        WeightedDataset {
            features,
            n_features: self.n_features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            weights: indices.iter().map(|&i| self.weights[i]).collect(),
            event_ids: indices.iter().map(|&i| self.event_ids[i]).collect(),
            column_names: self.column_names.clone(),
        }
    }

    /// Same rows with every weight of a class multiplied by a factor.
    pub fn rescale_classes(&self, signal_factor: f64, background_factor: f64) -> Result<Self> {
        let weights = self
            .labels
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| match l {
                Label::Signal => w * signal_factor,
                Label::Background => w * background_factor,
            })
            .collect();
        WeightedDataset::new(
            self.features.clone(),
            self.n_features,
            self.labels.clone(),
            weights,
            self.event_ids.clone(),
            self.column_names.clone(),
        )
    }
}

pub fn is_missing(value: f64) -> bool {
    value.is_nan()
}
