//! Second-order regression trees grown level by level with exact greedy
//! split search.

use crate::data::WeightedDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left; missing values follow `missing_left`.
    Split {
        feature: usize,
        threshold: f64,
        missing_left: bool,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Builds a tree from a node table rooted at index 0. Children must
    /// point strictly forward so the table cannot contain cycles.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Input("tree has no nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                Node::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if left <= i || right <= i || left >= nodes.len() || right >= nodes.len() {
                        return Err(Error::Input(format!("node {i}: bad child indices")));
                    }
                    if threshold.is_nan() {
                        return Err(Error::Input(format!("node {i}: NaN threshold")));
                    }
                }
                Node::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(Error::Input(format!("node {i}: non-finite leaf value")));
                    }
                }
            }
        }
        Ok(RegressionTree { nodes })
    }

    pub fn leaf(value: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// `(feature, threshold)` of every split in node order.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split {
                    feature, threshold, ..
                } => Some((*feature, *threshold)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    missing_left,
                    left,
                    right,
                } => {
                    let v = row[feature];
                    let go_left = if v.is_nan() { missing_left } else { v < threshold };
                    at = if go_left { left } else { right };
                }
            }
        }
    }
}

const NO_SLOT: u32 = u32::MAX;

/// Per-feature row orderings, built once per dataset.
#[derive(Debug, Clone)]
pub(crate) struct FeatureIndex {
    /// Non-missing rows sorted by (value, row).
    sorted: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
}

impl FeatureIndex {
    pub(crate) fn new(dataset: &WeightedDataset) -> Self {
        let n = dataset.len();
        let mut sorted = Vec::with_capacity(dataset.n_features());
        let mut missing = Vec::with_capacity(dataset.n_features());
        for f in 0..dataset.n_features() {
            let (mut present, absent): (Vec<u32>, Vec<u32>) =
                (0..n as u32).partition(|&i| !dataset.value(i as usize, f).is_nan());
            present.sort_by(|&a, &b| {
                dataset
                    .value(a as usize, f)
                    .total_cmp(&dataset.value(b as usize, f))
                    .then(a.cmp(&b))
            });
            sorted.push(present);
            missing.push(absent);
        }
        FeatureIndex { sorted, missing }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub l2: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    grad: f64,
    hess: f64,
    cost: f64,
}

impl Stats {
    fn add(&mut self, other: Stats) {
        self.grad += other.grad;
        self.hess += other.hess;
        self.cost += other.cost;
    }

    fn plus(self, other: Stats) -> Stats {
        let mut s = self;
        s.add(other);
        s
    }

    fn minus(self, other: Stats) -> Stats {
        Stats {
            grad: self.grad - other.grad,
            hess: self.hess - other.hess,
            cost: self.cost - other.cost,
        }
    }

    fn score(&self, l2: f64) -> f64 {
        let denom = self.hess + l2;
        if denom > 0.0 {
            self.grad * self.grad / denom
        } else {
            0.0
        }
    }

    fn leaf_value(&self, l2: f64) -> f64 {
        let denom = self.hess + l2;
        if denom > 0.0 {
            -self.grad / denom
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    missing_left: bool,
    left: Stats,
    right: Stats,
}

struct OpenNode {
    node: usize,
    totals: Stats,
}

/// Per-row gradient, hessian and normalized cost.
pub(crate) struct RowStats<'a> {
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub cost: &'a [f64],
}

impl RowStats<'_> {
    fn at(&self, i: usize) -> Stats {
        Stats {
            grad: self.grad[i],
            hess: self.hess[i],
            cost: self.cost[i],
        }
    }
}

/// Fits one tree to the rows flagged in `in_sample`. Leaf values are the
/// regularized Newton step `-G/(H+λ)` already multiplied by the learning rate.
///
/// Candidates are visited feature by feature in ascending threshold order and
/// only a strictly larger gain replaces the incumbent, so ties resolve to the
/// lowest feature index and then the lowest threshold.
pub(crate) fn fit_tree(
    dataset: &WeightedDataset,
    index: &FeatureIndex,
    in_sample: &[bool],
    rows: &RowStats<'_>,
    params: &TreeParams,
) -> RegressionTree {
    let n = dataset.len();
    let mut slot = vec![NO_SLOT; n];
    let mut root = Stats::default();
    for i in (0..n).filter(|&i| in_sample[i]) {
        slot[i] = 0;
        root.add(rows.at(i));
    }

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut open = vec![OpenNode {
        node: 0,
        totals: root,
    }];
    let mut depth = 0;
    while !open.is_empty() {
        let best = if depth < params.max_depth {
            find_splits(dataset, index, &slot, rows, &open, params)
        } else {
            vec![None; open.len()]
        };

        let mut next_open = Vec::new();
        // For each open slot, the slot index of its left child (right is +1).
        let mut child_slot = vec![NO_SLOT; open.len()];
        for (k, node) in open.iter().enumerate() {
            match best[k] {
                Some(c) => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[node.node] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        missing_left: c.missing_left,
                        left,
                        right: left + 1,
                    };
                    child_slot[k] = next_open.len() as u32;
                    next_open.push(OpenNode {
                        node: left,
                        totals: c.left,
                    });
                    next_open.push(OpenNode {
                        node: left + 1,
                        totals: c.right,
                    });
                }
                None => {
                    nodes[node.node] = Node::Leaf {
                        value: params.learning_rate * node.totals.leaf_value(params.l2),
                    };
                }
            }
        }

        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            let k = slot[i];
            if k == NO_SLOT {
                continue;
            }
            let k = k as usize;
            slot[i] = match (best[k], child_slot[k]) {
                (Some(c), base) if base != NO_SLOT => {
                    let v = dataset.value(i, c.feature);
                    let go_left = if v.is_nan() { c.missing_left } else { v < c.threshold };
                    if go_left {
                        base
                    } else {
                        base + 1
                    }
                }
                _ => NO_SLOT,
            };
        }
        open = next_open;
        depth += 1;
    }
    RegressionTree { nodes }
}

fn find_splits(
    dataset: &WeightedDataset,
    index: &FeatureIndex,
    slot: &[u32],
    rows: &RowStats<'_>,
    open: &[OpenNode],
    params: &TreeParams,
) -> Vec<Option<Candidate>> {
    let k = open.len();
    let mut best: Vec<Option<Candidate>> = vec![None; k];
    let parent_score: Vec<f64> = open.iter().map(|o| o.totals.score(params.l2)).collect();

    for feature in 0..dataset.n_features() {
        let mut missing = vec![Stats::default(); k];
        for &i in &index.missing[feature] {
            let s = slot[i as usize];
            if s != NO_SLOT {
                missing[s as usize].add(rows.at(i as usize));
            }
        }
        let present: Vec<Stats> = open
            .iter()
            .zip(&missing)
            .map(|(o, m)| o.totals.minus(*m))
            .collect();

        let mut running = vec![Stats::default(); k];
        let mut seen = vec![false; k];
        let mut last = vec![0.0f64; k];
        for &i in &index.sorted[feature] {
            let i = i as usize;
            let s = slot[i];
            if s == NO_SLOT {
                continue;
            }
            let s = s as usize;
            let v = dataset.value(i, feature);
            if seen[s] && v > last[s] {
                let mid = 0.5 * (last[s] + v);
                let threshold = if mid > last[s] && mid <= v { mid } else { v };
                let below = running[s];
                let above = present[s].minus(below);
                for missing_left in [true, false] {
                    let (left, right) = if missing_left {
                        (below.plus(missing[s]), above)
                    } else {
                        (below, above.plus(missing[s]))
                    };
                    if left.cost < params.min_child_weight || right.cost < params.min_child_weight
                    {
                        continue;
                    }
                    let gain =
                        left.score(params.l2) + right.score(params.l2) - parent_score[s];
                    if gain > 0.0 && best[s].is_none_or(|b| gain > b.gain) {
                        best[s] = Some(Candidate {
                            gain,
                            feature,
                            threshold,
                            missing_left,
                            left,
                            right,
                        });
                    }
                }
            }
            running[s].add(rows.at(i));
            seen[s] = true;
            last[s] = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;

    fn line_dataset(xs: &[f64]) -> WeightedDataset {
        let n = xs.len();
        WeightedDataset::new(
            xs.to_vec(),
            1,
            vec![Label::Signal; n],
            vec![1.0; n],
            (0..n as u64).collect(),
            vec!["x".into()],
        )
        .unwrap()
    }

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            min_child_weight: 0.0,
            l2: 0.0,
            learning_rate: 1.0,
        }
    }

    #[test]
    fn splits_at_gradient_sign_change() {
        let d = line_dataset(&[1.0, 2.0, 3.0, 4.0]);
        let grad = [1.0, 1.0, -1.0, -1.0];
        let hess = [1.0; 4];
        let cost = [1.0; 4];
        let rows = RowStats { grad: &grad, hess: &hess, cost: &cost };
        let tree = fit_tree(&d, &FeatureIndex::new(&d), &[true; 4], &rows, &params(1));
        assert_eq!(tree.splits(), vec![(0, 2.5)]);
        assert_eq!(tree.predict_row(&[0.0]), -1.0);
        assert_eq!(tree.predict_row(&[10.0]), 1.0);
    }

    #[test]
    fn missing_values_follow_better_side() {
        let d = line_dataset(&[1.0, 2.0, f64::NAN, 3.0, 4.0]);
        let grad = [1.0, 1.0, -1.0, -1.0, -1.0];
        let hess = [1.0; 5];
        let cost = [1.0; 5];
        let rows = RowStats { grad: &grad, hess: &hess, cost: &cost };
        let tree = fit_tree(&d, &FeatureIndex::new(&d), &[true; 5], &rows, &params(1));
        match tree.nodes()[0] {
            Node::Split { missing_left, threshold, .. } => {
                assert!(!missing_left);
                assert_eq!(threshold, 2.5);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(tree.predict_row(&[f64::NAN]), 1.0);
    }

    #[test]
    fn ties_prefer_lower_threshold() {
        // symmetric gradients: splitting at 1.5 or 3.5 isolates one +2 row each way
        let d = line_dataset(&[1.0, 2.0, 3.0, 4.0]);
        let grad = [2.0, -1.0, -1.0, 2.0];
        let hess = [1.0; 4];
        let cost = [1.0; 4];
        let rows = RowStats { grad: &grad, hess: &hess, cost: &cost };
        let tree = fit_tree(&d, &FeatureIndex::new(&d), &[true; 4], &rows, &params(1));
        assert_eq!(tree.splits(), vec![(0, 1.5)]);
    }

    #[test]
    fn min_child_weight_blocks_small_children() {
        let d = line_dataset(&[1.0, 2.0, 3.0, 4.0]);
        let grad = [1.0, -1.0, -1.0, -1.0];
        let hess = [1.0; 4];
        let cost = [1.0; 4];
        let rows = RowStats { grad: &grad, hess: &hess, cost: &cost };
        let p = TreeParams { min_child_weight: 2.0, ..params(1) };
        let tree = fit_tree(&d, &FeatureIndex::new(&d), &[true; 4], &rows, &p);
        assert_eq!(tree.splits(), vec![(0, 2.5)]);
        let p = TreeParams { min_child_weight: 2.5, ..params(1) };
        let tree = fit_tree(&d, &FeatureIndex::new(&d), &[true; 4], &rows, &p);
        assert!(tree.splits().is_empty());
    }

    #[test]
    fn depth_zero_is_single_leaf() {
        let d = line_dataset(&[1.0, 2.0]);
        let rows = RowStats { grad: &[1.0, 3.0], hess: &[1.0, 1.0], cost: &[1.0, 1.0] };
        let p = TreeParams { learning_rate: 0.5, ..params(0) };
        let tree = fit_tree(&d, &FeatureIndex::new(&d), &[true; 2], &rows, &p);
        assert_eq!(tree, RegressionTree::leaf(-1.0));
    }

    #[test]
    fn from_nodes_rejects_cycles() {
        let bad = vec![
            Node::Split { feature: 0, threshold: 0.0, missing_left: true, left: 0, right: 1 },
            Node::Leaf { value: 0.0 },
        ];
        assert!(RegressionTree::from_nodes(bad).is_err());
    }
}
