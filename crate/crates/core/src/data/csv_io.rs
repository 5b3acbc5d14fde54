//! HiggsML-style CSV datasets and submission files.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::dataset::{Label, WeightedDataset, MISSING_MARKER};
use crate::error::{Error, Result};

/// Which columns play which role in an input file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub id_column: String,
    pub weight_column: String,
    pub label_column: String,
    /// Explicit feature columns; `None` takes every remaining column not in `ignore`.
    pub feature_columns: Option<Vec<String>>,
    pub ignore: Vec<String>,
}

impl CsvSchema {
    /// Layout of the public challenge training file.
    pub fn higgs() -> Self {
        CsvSchema {
            id_column: "EventId".into(),
            weight_column: "Weight".into(),
            label_column: "Label".into(),
            feature_columns: None,
            ignore: vec!["KaggleSet".into(), "KaggleWeight".into()],
        }
    }
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self::higgs()
    }
}

fn column_index(header: &csv::StringRecord, name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
}

/// Reads a weighted dataset. Rows keep file order; `-999.0` features are
/// flagged missing.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<WeightedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, schema: &CsvSchema) -> Result<WeightedDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let id_col = column_index(&header, &schema.id_column)?;
    let weight_col = column_index(&header, &schema.weight_column)?;
    let label_col = column_index(&header, &schema.label_column)?;

    let feature_names: Vec<String> = match &schema.feature_columns {
        Some(cols) => cols.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|(i, h)| {
                ![id_col, weight_col, label_col].contains(i) && !schema.ignore.iter().any(|x| x == h)
            })
            .map(|(_, h)| h.to_string())
            .collect(),
    };
    if feature_names.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }
    let feature_cols = feature_names
        .iter()
        .map(|name| column_index(&header, name))
        .collect::<Result<Vec<_>>>()?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    let mut ids = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        let field = |col: usize| -> Result<&str> {
            record.get(col).map(str::trim).ok_or_else(|| Error::Parse {
                row,
                message: format!("missing field {col}"),
            })
        };
        let parse_f64 = |col: usize| -> Result<f64> {
            let raw = field(col)?;
            raw.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("column '{}': cannot parse '{raw}' as a number", &header[col]),
            })
        };

        let id_raw = field(id_col)?;
        let id = id_raw.parse::<u64>().map_err(|_| Error::Parse {
            row,
            message: format!("cannot parse event id '{id_raw}'"),
        })?;
        let weight = parse_f64(weight_col)?;
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::Validation(format!(
                "row {row}: weight {weight} is not strictly positive"
            )));
        }
        let label_raw = field(label_col)?;
        let label = Label::from_char_code(label_raw).ok_or_else(|| Error::Parse {
            row,
            message: format!("label '{label_raw}' is neither 's' nor 'b'"),
        })?;
        for &col in &feature_cols {
            let v = parse_f64(col)?;
            features.push(if v == MISSING_MARKER { f64::NAN } else { v });
        }
        ids.push(id);
        weights.push(weight);
        labels.push(label);
    }
    WeightedDataset::new(features, feature_names.len(), labels, weights, ids, feature_names)
}

/// Writes `EventId, <features>, Weight, Label` with shortest round-trip numbers.
pub fn write_csv(dataset: &WeightedDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_csv_to(dataset, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv_to<W: Write>(dataset: &WeightedDataset, out: &mut W) -> std::io::Result<()> {
    write!(out, "EventId")?;
    for name in dataset.column_names() {
        write!(out, ",{name}")?;
    }
    writeln!(out, ",Weight,Label")?;
    for i in 0..dataset.len() {
        write!(out, "{}", dataset.event_ids()[i])?;
        for &v in dataset.row(i) {
            if v.is_nan() {
                write!(out, ",{MISSING_MARKER:?}")?;
            } else {
                write!(out, ",{v:?}")?;
            }
        }
        writeln!(
            out,
            ",{:?},{}",
            dataset.weights()[i],
            dataset.labels()[i].char_code()
        )?;
    }
    Ok(())
}

/// One parsed submission row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmissionRow {
    pub event_id: u64,
    pub rank: usize,
    pub class: Label,
}

/// Ranks by ascending score (ties: lower event id first) and renders the
/// `EventId,RankOrder,Class` file. Rows keep input order.
pub fn render_submission(event_ids: &[u64], scores: &[f64], selected: &[Label]) -> Result<String> {
    if event_ids.len() != scores.len() || scores.len() != selected.len() {
        return Err(Error::Input(format!(
            "submission columns differ in length: {} ids, {} scores, {} labels",
            event_ids.len(),
            scores.len(),
            selected.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Input(format!("score of event {} is NaN", event_ids[i])));
    }
    let mut seen = HashSet::with_capacity(event_ids.len());
    for id in event_ids {
        if !seen.insert(*id) {
            return Err(Error::Validation(format!("duplicate event id {id}")));
        }
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .total_cmp(&scores[b])
            .then(event_ids[a].cmp(&event_ids[b]))
    });
    let mut rank = vec![0usize; scores.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    let mut text = String::from("EventId,RankOrder,Class\n");
    for i in 0..scores.len() {
        text.push_str(&format!(
            "{},{},{}\n",
            event_ids[i],
            rank[i],
            selected[i].char_code()
        ));
    }
    Ok(text)
}

pub fn write_submission(
    path: impl AsRef<Path>,
    event_ids: &[u64],
    scores: &[f64],
    selected: &[Label],
) -> Result<()> {
    let path = path.as_ref();
    let text = render_submission(event_ids, scores, selected)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_submission(path: impl AsRef<Path>) -> Result<Vec<SubmissionRow>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["EventId", "RankOrder", "Class"] {
        return Err(Error::Schema(format!("unexpected submission header {header:?}")));
    }
    let mut rows = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        let bad = |message: String| Error::Parse { row, message };
        let event_id = record[0]
            .parse()
            .map_err(|_| bad(format!("bad event id '{}'", &record[0])))?;
        let rank = record[1]
            .parse()
            .map_err(|_| bad(format!("bad rank '{}'", &record[1])))?;
        let class = Label::from_char_code(&record[2])
            .ok_or_else(|| bad(format!("bad class '{}'", &record[2])))?;
        rows.push(SubmissionRow {
            event_id,
            rank,
            class,
        });
    }
    Ok(rows)
}
