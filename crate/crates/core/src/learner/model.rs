use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use super::tree::{Node, RegressionTree};
use crate::data::{Label, WeightedDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    /// Boosted depth-one trees.
    StumpBoost,
    TreeBoost,
    /// Cost-weighted logistic regression fitted by Newton iterations.
    Logistic,
}

impl LearnerKind {
    pub fn supports_boosting(self) -> bool {
        !matches!(self, LearnerKind::Logistic)
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "stump-boost" => Ok(LearnerKind::StumpBoost),
            "tree-boost" => Ok(LearnerKind::TreeBoost),
            "logistic" => Ok(LearnerKind::Logistic),
            other => Err(Error::Config(format!("unknown learner kind '{other}'"))),
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::StumpBoost => "stump-boost",
            LearnerKind::TreeBoost => "tree-boost",
            LearnerKind::Logistic => "logistic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Boosting rounds, or the Newton iteration cap for the logistic learner.
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum summed (mean-one normalized) cost in each child of a split.
    pub min_child_weight: f64,
    /// L2 penalty on leaf values / linear coefficients.
    pub l2: f64,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kind: LearnerKind::TreeBoost,
            rounds: 40,
            learning_rate: 0.3,
            max_depth: 3,
            min_child_weight: 1.0,
            l2: 1.0,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::Config("learner rounds must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning_rate {} not in (0, 1]",
                self.learning_rate
            )));
        }
        self.validate_common()
    }

    pub(crate) fn validate_common(&self) -> Result<()> {
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Config(format!("subsample {} not in (0, 1]", self.subsample)));
        }
        if !(self.min_child_weight >= 0.0 && self.min_child_weight.is_finite()) {
            return Err(Error::Config("min_child_weight must be finite and >= 0".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config("l2 must be finite and >= 0".into()));
        }
        if self.kind == LearnerKind::TreeBoost && self.max_depth == 0 {
            return Err(Error::Config("tree-boost needs max_depth >= 1".into()));
        }
        Ok(())
    }

    /// Depth actually used for each tree.
    pub fn tree_depth(&self) -> usize {
        match self.kind {
            LearnerKind::StumpBoost => 1,
            _ => self.max_depth,
        }
    }
}

/// Affine scorer on standardized, imputed features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub coefficients: Vec<f64>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    /// Replacement for missing values, per feature.
    pub impute: Vec<f64>,
}

impl LinearScorer {
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut total = 0.0;
        for (j, &x) in row.iter().enumerate().take(self.coefficients.len()) {
            let v = if x.is_nan() { self.impute[j] } else { x };
            total += self.coefficients[j] * (v - self.center[j]) / self.scale[j];
        }
        total
    }
}

/// A scoring function with a decision cut: `classify(x) = +1` iff `score(x) > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    kind: LearnerKind,
    n_features: usize,
    base_score: f64,
    trees: Vec<RegressionTree>,
    linear: Option<LinearScorer>,
    threshold: f64,
}

impl Model {
    pub(crate) fn boosted(kind: LearnerKind, n_features: usize, base_score: f64) -> Self {
        Model {
            kind,
            n_features,
            base_score,
            trees: Vec::new(),
            linear: None,
            threshold: 0.0,
        }
    }

    pub(crate) fn linear(n_features: usize, intercept: f64, scorer: LinearScorer) -> Self {
        Model {
            kind: LearnerKind::Logistic,
            n_features,
            base_score: intercept,
            trees: Vec::new(),
            linear: Some(scorer),
            threshold: 0.0,
        }
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn linear_scorer(&self) -> Option<&LinearScorer> {
        self.linear.as_ref()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub(crate) fn push_tree(&mut self, tree: RegressionTree) {
        self.trees.push(tree);
    }

    /// `base_score + linear(x) + Σ trees(x)`, summed left to right.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        let mut score = self.base_score;
        if let Some(linear) = &self.linear {
            score += linear.score(row);
        }
        for tree in &self.trees {
            score += tree.predict_row(row);
        }
        score
    }

    pub(crate) fn check_dimension(&self, dataset: &WeightedDataset) -> Result<()> {
        if dataset.n_features() != self.n_features {
            return Err(Error::Input(format!(
                "model expects {} features, dataset has {}",
                self.n_features,
                dataset.n_features()
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        // writing to a String cannot fail
        let _ = self.write_text(&mut out);
        out
    }

    fn write_text(&self, out: &mut String) -> fmt::Result {
        writeln!(out, "{FORMAT_MAGIC} {FORMAT_VERSION}")?;
        writeln!(out, "kind {}", self.kind)?;
        writeln!(out, "n_features {}", self.n_features)?;
        writeln!(out, "base_score {:?}", self.base_score)?;
        writeln!(out, "threshold {:?}", self.threshold)?;
        match &self.linear {
            None => writeln!(out, "linear none")?,
            Some(l) => {
                writeln!(out, "linear {}", l.coefficients.len())?;
                for j in 0..l.coefficients.len() {
                    writeln!(
                        out,
                        "coef {j} {:?} {:?} {:?} {:?}",
                        l.coefficients[j], l.center[j], l.scale[j], l.impute[j]
                    )?;
                }
            }
        }
        writeln!(out, "trees {}", self.trees.len())?;
        for tree in &self.trees {
            writeln!(out, "tree {}", tree.nodes().len())?;
            for (i, node) in tree.nodes().iter().enumerate() {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        missing_left,
                        left,
                        right,
                    } => writeln!(
                        out,
                        "split {i} {feature} {threshold:?} {} {left} {right}",
                        u8::from(*missing_left)
                    )?,
                    Node::Leaf { value } => writeln!(out, "leaf {i} {value:?}")?,
                }
            }
        }
        writeln!(out, "end")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        ModelParser::new(text).parse()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

const FORMAT_MAGIC: &str = "sigcascade-model";
const FORMAT_VERSION: u32 = 1;

struct ModelParser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> ModelParser<'a> {
    fn new(text: &'a str) -> Self {
        ModelParser {
            lines: text.lines().enumerate(),
            line_no: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.line_no,
            message: message.into(),
        }
    }

    fn next_fields(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let (idx, line) = self
            .lines
            .next()
            .ok_or_else(|| self.err(format!("unexpected end of file, wanted '{keyword}'")))?;
        self.line_no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.first() != Some(&keyword) {
            return Err(self.err(format!("expected '{keyword}', found '{line}'")));
        }
        Ok(fields[1..].to_vec())
    }

    fn value<T: FromStr>(&self, fields: &[&str], at: usize) -> Result<T> {
        let raw = fields.get(at).ok_or_else(|| self.err("missing field"))?;
        raw.parse()
            .map_err(|_| self.err(format!("cannot parse '{raw}'")))
    }

    fn single<T: FromStr>(&mut self, keyword: &str) -> Result<T> {
        let fields = self.next_fields(keyword)?;
        if fields.len() != 1 {
            return Err(self.err(format!("'{keyword}' takes one value")));
        }
        self.value(&fields, 0)
    }

    fn parse(mut self) -> Result<Model> {
        let version: u32 = self.single(FORMAT_MAGIC)?;
        if version != FORMAT_VERSION {
            return Err(self.err(format!("unsupported format version {version}")));
        }
        let kind: LearnerKind = {
            let raw: String = self.single("kind")?;
            raw.parse().map_err(|_| self.err(format!("unknown kind '{raw}'")))?
        };
        let n_features: usize = self.single("n_features")?;
        let base_score: f64 = self.single("base_score")?;
        let threshold: f64 = self.single("threshold")?;

        let linear_fields = self.next_fields("linear")?;
        let linear = match linear_fields.as_slice() {
            ["none"] => None,
            [count] => {
                let count: usize = count
                    .parse()
                    .map_err(|_| self.err("bad linear coefficient count"))?;
                if count != n_features {
                    return Err(self.err("linear width differs from n_features"));
                }
                let mut scorer = LinearScorer {
                    coefficients: Vec::with_capacity(count),
                    center: Vec::with_capacity(count),
                    scale: Vec::with_capacity(count),
                    impute: Vec::with_capacity(count),
                };
                for j in 0..count {
                    let f = self.next_fields("coef")?;
                    if self.value::<usize>(&f, 0)? != j || f.len() != 5 {
                        return Err(self.err("malformed coef line"));
                    }
                    scorer.coefficients.push(self.value(&f, 1)?);
                    scorer.center.push(self.value(&f, 2)?);
                    scorer.scale.push(self.value(&f, 3)?);
                    scorer.impute.push(self.value(&f, 4)?);
                }
                Some(scorer)
            }
            _ => return Err(self.err("malformed linear line")),
        };
        if linear.is_some() != (kind == LearnerKind::Logistic) {
            return Err(self.err("linear block present iff kind is logistic"));
        }

        let n_trees: usize = self.single("trees")?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes: usize = self.single("tree")?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for i in 0..n_nodes {
                let (idx, line) = self
                    .lines
                    .next()
                    .ok_or_else(|| self.err("unexpected end of file inside tree"))?;
                self.line_no = idx + 1;
                let f: Vec<&str> = line.split_whitespace().collect();
                let node = match f.first().copied() {
                    Some("split") if f.len() == 7 => Node::Split {
                        feature: self.value(&f, 2)?,
                        threshold: self.value(&f, 3)?,
                        missing_left: match f[4] {
                            "1" => true,
                            "0" => false,
                            _ => return Err(self.err("missing direction must be 0 or 1")),
                        },
                        left: self.value(&f, 5)?,
                        right: self.value(&f, 6)?,
                    },
                    Some("leaf") if f.len() == 3 => Node::Leaf {
                        value: self.value(&f, 2)?,
                    },
                    _ => return Err(self.err(format!("malformed node line '{line}'"))),
                };
                if self.value::<usize>(&f, 1)? != i {
                    return Err(self.err("node indices must be consecutive"));
                }
                nodes.push(node);
            }
            let tree = RegressionTree::from_nodes(nodes).map_err(|e| self.err(e.to_string()))?;
            if tree.max_feature().is_some_and(|f| f >= n_features) {
                return Err(self.err("split feature out of range"));
            }
            trees.push(tree);
        }
        self.next_fields("end")?;
        Ok(Model {
            kind,
            n_features,
            base_score,
            trees,
            linear,
            threshold,
        })
    }
}

/// Real-valued scores for every row.
pub fn predict_scores(model: &Model, dataset: &WeightedDataset) -> Result<Vec<f64>> {
    model.check_dimension(dataset)?;
    Ok((0..dataset.len())
        .map(|i| model.score_row(dataset.row(i)))
        .collect())
}

pub fn classify(model: &Model, dataset: &WeightedDataset) -> Result<Vec<Label>> {
    Ok(predict_scores(model, dataset)?
        .into_iter()
        .map(|s| labels_for_threshold(s, model.threshold))
        .collect())
}

pub(crate) fn labels_for_threshold(score: f64, threshold: f64) -> Label {
    if score > threshold {
        Label::Signal
    } else {
        Label::Background
    }
}
