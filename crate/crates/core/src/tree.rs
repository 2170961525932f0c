//! CART classification trees with Gini impurity.
//!
//! Used twice by the ensemble: once as the base classifier and once as the
//! easy/hard grader. Random-forest members are grown by the same code with
//! no depth cap and a random feature subset at every node.
//!
//! Split quality is compared with exact integer arithmetic. For a split with
//! left class counts `L` and right class counts `R`, minimising the weighted
//! child Gini is the same as maximising `ΣL²/|L| + ΣR²/|R|`, and that sum is
//! compared as a `u128` fraction so ties are real ties on every platform.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::DeterministicRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// Maximum number of split levels; `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(4),
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

impl TreeParams {
    pub fn with_max_depth(max_depth: usize) -> Self {
        TreeParams {
            max_depth: Some(max_depth),
            ..Default::default()
        }
    }

    pub fn unbounded() -> Self {
        TreeParams {
            max_depth: None,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == Some(0) {
            return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be at least 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameter("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// One node of the arena. Children always have larger indices than their
/// parent; index 0 is the root and nodes are stored in pre-order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class_counts: Vec<usize>,
        predicted_class: usize,
    },
}

/// A fitted tree. Deserialisation re-validates the node arena.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTree")]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    params: TreeParams,
    n_features: usize,
    n_classes: usize,
    depth: usize,
    node_count: usize,
}

#[derive(Deserialize)]
struct RawTree {
    nodes: Vec<TreeNode>,
    params: TreeParams,
    n_features: usize,
    n_classes: usize,
    depth: usize,
    node_count: usize,
}

impl TryFrom<RawTree> for DecisionTree {
    type Error = Error;

    fn try_from(raw: RawTree) -> Result<Self> {
        let tree = DecisionTree::from_nodes(raw.nodes, raw.params, raw.n_features, raw.n_classes)?;
        if tree.depth != raw.depth || tree.node_count != raw.node_count {
            return Err(Error::InvalidDataset(format!(
                "stored depth/node_count ({}, {}) disagree with structure ({}, {})",
                raw.depth, raw.node_count, tree.depth, tree.node_count
            )));
        }
        Ok(tree)
    }
}

/// One decision taken on the way from the root to a leaf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub feature: usize,
    pub threshold: f64,
    pub value: f64,
    pub went_left: bool,
}

impl PathStep {
    /// `name <= t` or `name > t`, the condition that held for the input.
    pub fn condition(&self, feature_names: &[String]) -> String {
        let op = if self.went_left { "<=" } else { ">" };
        format!("{} {op} {}", feature_names[self.feature], self.threshold)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Count-weighted Gini impurity of the two children.
    pub weighted_impurity: f64,
}

/// `1 - Σ p_k²`. Errors when every count is zero.
pub fn gini_impurity(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("gini of an empty count vector".into()));
    }
    let t = total as f64;
    Ok(1.0 - class_counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>())
}

fn argmax_lowest(values: impl IntoIterator<Item = usize>) -> usize {
    let mut best = (0, 0);
    for (k, v) in values.into_iter().enumerate() {
        if k == 0 || v > best.1 {
            best = (k, v);
        }
    }
    best.0
}

fn sum_sq(counts: &[usize]) -> u128 {
    counts.iter().map(|&c| (c as u128) * (c as u128)).sum()
}

/// Purity score `ΣL²/nL + ΣR²/nR` held as an exact fraction.
#[derive(Clone, Copy, Debug)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn of_split(left: &[usize], n_left: usize, right: &[usize], n_right: usize) -> Self {
        let (nl, nr) = (n_left as u128, n_right as u128);
        Score {
            num: sum_sq(left) * nr + sum_sq(right) * nl,
            den: nl * nr,
        }
    }

    fn of_node(counts: &[usize], n: usize) -> Self {
        Score {
            num: sum_sq(counts),
            den: n as u128,
        }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    fn weighted_gini(&self, n: usize) -> f64 {
        1.0 - (self.num as f64 / self.den as f64) / n as f64
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    feature: usize,
    threshold: f64,
    score: Score,
}

impl Candidate {
    /// Higher purity wins; ties go to the lower feature, then lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        match self.score.cmp(&other.score) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match self.feature.cmp(&other.feature) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => self.threshold < other.threshold,
            },
        }
    }
}

/// Growth settings shared by single trees and forest members.
#[derive(Clone, Copy, Debug)]
pub(crate) struct GrowConfig {
    pub params: TreeParams,
    /// Features inspected per node; `None` inspects all of them.
    pub features_per_split: Option<usize>,
}

struct Grower<'a> {
    data: &'a Dataset,
    cfg: GrowConfig,
    rng: Option<&'a mut DeterministicRng>,
    nodes: Vec<TreeNode>,
    feature_order: Vec<usize>,
    scratch: Vec<(f64, usize)>,
}

impl Grower<'_> {
    fn leaf(&self, counts: Vec<usize>) -> TreeNode {
        let predicted_class = argmax_lowest(counts.iter().copied());
        TreeNode::Leaf {
            class_counts: counts,
            predicted_class,
        }
    }

    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.data.n_classes()];
        for &i in rows {
            counts[self.data.label(i)] += 1;
        }
        counts
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(&rows);
        let n = rows.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_left = self.cfg.params.max_depth.is_none_or(|m| depth < m);
        let split = if pure || !depth_left || n < self.cfg.params.min_samples_split {
            None
        } else {
            self.find_split(&rows, &counts)
        };
        let Some(cand) = split else {
            let leaf = self.leaf(counts);
            self.nodes.push(leaf);
            return id;
        };
        self.nodes.push(TreeNode::Leaf {
            class_counts: Vec::new(),
            predicted_class: 0,
        });
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.data.value(i, cand.feature) <= cand.threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Internal {
            feature: cand.feature,
            threshold: cand.threshold,
            left,
            right,
        };
        id
    }

    /// Best split over the features this node may inspect, or `None` when no
    /// split respects `min_samples_leaf`. A split that leaves the weighted
    /// impurity unchanged is still taken (children can never be worse).
    fn find_split(&mut self, rows: &[usize], counts: &[usize]) -> Option<Candidate> {
        let p = self.data.n_features();
        let n = rows.len();
        let parent = Score::of_node(counts, n);
        let budget = self.cfg.features_per_split.unwrap_or(p).min(p);
        let mut best: Option<Candidate> = None;
        let mut informative = 0;
        for slot in 0..p {
            if informative >= budget {
                break;
            }
            let feature = match self.rng.as_deref_mut() {
                Some(rng) => {
                    let j = slot + rng.below(p - slot);
                    self.feature_order.swap(slot, j);
                    self.feature_order[slot]
                }
                None => slot,
            };
            let (cand, constant) = self.scan_feature(rows, counts, feature);
            if !constant {
                informative += 1;
            }
            if let Some(c) = cand {
                if best.is_none_or(|b| c.beats(&b)) {
                    best = Some(c);
                }
            }
        }
        debug_assert!(best.is_none_or(|b| b.score.cmp(&parent) != Ordering::Less));
        best
    }

    fn scan_feature(
        &mut self,
        rows: &[usize],
        counts: &[usize],
        feature: usize,
    ) -> (Option<Candidate>, bool) {
        let n = rows.len();
        let min_leaf = self.cfg.params.min_samples_leaf;
        self.scratch.clear();
        self.scratch
            .extend(rows.iter().map(|&i| (self.data.value(i, feature), self.data.label(i))));
        self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        if self.scratch[0].0 == self.scratch[n - 1].0 {
            return (None, true);
        }
        let mut left = vec![0usize; counts.len()];
        let mut right = counts.to_vec();
        let mut best: Option<Candidate> = None;
        for pos in 0..n - 1 {
            let (v, y) = self.scratch[pos];
            left[y] += 1;
            right[y] -= 1;
            let next = self.scratch[pos + 1].0;
            if v == next {
                continue;
            }
            let n_left = pos + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let mut threshold = v + (next - v) / 2.0;
            if threshold >= next || threshold < v {
                threshold = v;
            }
            let cand = Candidate {
                feature,
                threshold,
                score: Score::of_split(&left, n_left, &right, n - n_left),
            };
            if best.is_none_or(|b| cand.beats(&b)) {
                best = Some(cand);
            }
        }
        (best, false)
    }
}

pub(crate) fn grow_tree(
    data: &Dataset,
    cfg: GrowConfig,
    rng: Option<&mut DeterministicRng>,
) -> Result<DecisionTree> {
    cfg.params.validate()?;
    let mut grower = Grower {
        data,
        cfg,
        rng,
        nodes: Vec::new(),
        feature_order: (0..data.n_features()).collect(),
        scratch: Vec::with_capacity(data.n_rows()),
    };
    grower.grow((0..data.n_rows()).collect(), 0);
    let nodes = grower.nodes;
    DecisionTree::from_nodes(nodes, cfg.params, data.n_features(), data.n_classes())
}

/// Fits a CART tree. Fitting is deterministic.
pub fn fit_tree(d: &Dataset, params: &TreeParams) -> Result<DecisionTree> {
    grow_tree(
        d,
        GrowConfig {
            params: *params,
            features_per_split: None,
        },
        None,
    )
}

/// Best split over all rows of `d` under `params`' leaf-size rule.
pub fn best_split(d: &Dataset, params: &TreeParams) -> Option<Split> {
    let rows: Vec<usize> = (0..d.n_rows()).collect();
    let mut grower = Grower {
        data: d,
        cfg: GrowConfig {
            params: *params,
            features_per_split: None,
        },
        rng: None,
        nodes: Vec::new(),
        feature_order: (0..d.n_features()).collect(),
        scratch: Vec::new(),
    };
    let counts = grower.counts(&rows);
    if rows.len() < params.min_samples_split || counts.iter().filter(|&&c| c > 0).count() <= 1 {
        return None;
    }
    grower.find_split(&rows, &counts).map(|c| Split {
        feature: c.feature,
        threshold: c.threshold,
        weighted_impurity: c.score.weighted_gini(rows.len()),
    })
}

impl DecisionTree {
    /// Assembles a tree from a pre-ordered node arena, checking structure.
    pub fn from_nodes(
        nodes: Vec<TreeNode>,
        params: TreeParams,
        n_features: usize,
        n_classes: usize,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidDataset(format!("malformed tree: {msg}")));
        if nodes.is_empty() {
            return bad("no nodes".into());
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![(0usize, 0usize)];
        let mut depth = 0;
        while let Some((id, d)) = stack.pop() {
            if seen[id] {
                return bad(format!("node {id} reachable twice"));
            }
            seen[id] = true;
            depth = depth.max(d);
            match &nodes[id] {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= n_features || !threshold.is_finite() {
                        return bad(format!("node {id} has an invalid rule"));
                    }
                    for &c in [left, right] {
                        if c <= id || c >= nodes.len() {
                            return bad(format!("node {id} has child index {c}"));
                        }
                    }
                    stack.push((*right, d + 1));
                    stack.push((*left, d + 1));
                }
                TreeNode::Leaf {
                    class_counts,
                    predicted_class,
                } => {
                    if class_counts.len() != n_classes
                        || *predicted_class != argmax_lowest(class_counts.iter().copied())
                    {
                        return bad(format!("leaf {id} counts/prediction inconsistent"));
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("unreachable nodes".into());
        }
        if let Some(m) = params.max_depth {
            if depth > m {
                return bad(format!("depth {depth} exceeds max_depth {m}"));
            }
        }
        let node_count = nodes.len();
        Ok(DecisionTree {
            nodes,
            params,
            n_features,
            n_classes,
            depth,
            node_count,
        })
    }

    /// A tree that is a single leaf with the given counts.
    pub fn constant(class_counts: Vec<usize>, n_features: usize, params: TreeParams) -> Self {
        let n_classes = class_counts.len();
        let predicted_class = argmax_lowest(class_counts.iter().copied());
        DecisionTree {
            nodes: vec![TreeNode::Leaf {
                class_counts,
                predicted_class,
            }],
            params,
            n_features,
            n_classes,
            depth: 0,
            node_count: 1,
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_leaf_only(&self) -> bool {
        self.node_count == 1
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Index of the leaf reached by `x`; `x` must have the right length.
    pub(crate) fn leaf_index(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { .. } => return id,
            }
        }
    }

    pub(crate) fn leaf_counts(&self, x: &[f64]) -> &[usize] {
        match &self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { class_counts, .. } => class_counts,
            TreeNode::Internal { .. } => unreachable!(),
        }
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> usize {
        match &self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf {
                predicted_class, ..
            } => *predicted_class,
            TreeNode::Internal { .. } => unreachable!(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.check(x)?;
        Ok(self.predict_unchecked(x))
    }

    pub fn predict_all(&self, d: &Dataset) -> Result<Vec<usize>> {
        if d.n_features() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: d.n_features(),
            });
        }
        Ok(d.rows().map(|x| self.predict_unchecked(x)).collect())
    }

    pub fn decision_path(&self, x: &[f64]) -> Result<Vec<PathStep>> {
        self.check(x)?;
        let mut path = Vec::new();
        let mut id = 0;
        while let TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } = &self.nodes[id]
        {
            let value = x[*feature];
            let went_left = value <= *threshold;
            path.push(PathStep {
                feature: *feature,
                threshold: *threshold,
                value,
                went_left,
            });
            id = if went_left { *left } else { *right };
        }
        Ok(path)
    }

    /// Fraction of rows of `d` predicted correctly.
    pub fn accuracy(&self, d: &Dataset) -> Result<f64> {
        let preds = self.predict_all(d)?;
        let hits = preds.iter().zip(d.labels()).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / d.n_rows() as f64)
    }

    /// Indented text rendering, one node per line, left child first.
    ///
    /// ```text
    /// petal_width <= 0.8
    /// |   class: setosa (50, 0, 0)
    /// |   petal_length <= 4.75
    /// ...
    /// ```
    pub fn export_text(&self, feature_names: &[String], class_names: &[String]) -> Result<String> {
        if feature_names.len() != self.n_features {
            return Err(Error::NameMismatch {
                what: "feature names",
                expected: self.n_features,
                found: feature_names.len(),
            });
        }
        if class_names.len() != self.n_classes {
            return Err(Error::NameMismatch {
                what: "class names",
                expected: self.n_classes,
                found: class_names.len(),
            });
        }
        let mut out = String::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            out.push_str(&INDENT.repeat(depth));
            match &self.nodes[id] {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(out, "{} <= {threshold:?}", feature_names[*feature]);
                    stack.push((*right, depth + 1));
                    stack.push((*left, depth + 1));
                }
                TreeNode::Leaf {
                    class_counts,
                    predicted_class,
                } => {
                    let counts: Vec<String> = class_counts.iter().map(usize::to_string).collect();
                    let _ = writeln!(
                        out,
                        "class: {} ({})",
                        class_names[*predicted_class],
                        counts.join(", ")
                    );
                }
            }
        }
        Ok(out)
    }
}

const INDENT: &str = "|   ";

/// Parses [`DecisionTree::export_text`] output back into a node arena.
pub fn parse_text(
    text: &str,
    feature_names: &[String],
    class_names: &[String],
) -> Result<Vec<TreeNode>> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let mut nodes = Vec::new();
    let mut cursor = 0;
    parse_node(&lines, &mut cursor, 0, feature_names, class_names, &mut nodes)?;
    if cursor != lines.len() {
        return Err(Error::TreeParse {
            line: lines[cursor].0,
            message: "trailing lines after the tree".into(),
        });
    }
    Ok(nodes)
}

fn parse_node(
    lines: &[(usize, &str)],
    cursor: &mut usize,
    depth: usize,
    feature_names: &[String],
    class_names: &[String],
    nodes: &mut Vec<TreeNode>,
) -> Result<usize> {
    let &(line_no, line) = lines.get(*cursor).ok_or(Error::TreeParse {
        line: lines.last().map_or(0, |l| l.0),
        message: "unexpected end of tree".into(),
    })?;
    let err = |message: &str| Error::TreeParse {
        line: line_no,
        message: message.into(),
    };
    let mut body = line;
    for _ in 0..depth {
        body = body.strip_prefix(INDENT).ok_or_else(|| err("wrong indentation"))?;
    }
    if body.starts_with(INDENT) {
        return Err(err("wrong indentation"));
    }
    *cursor += 1;
    let id = nodes.len();
    if let Some(rest) = body.strip_prefix("class: ") {
        let (name, counts) = rest.rsplit_once(" (").ok_or_else(|| err("missing counts"))?;
        let counts = counts.strip_suffix(')').ok_or_else(|| err("missing ')'"))?;
        let class_counts = counts
            .split(", ")
            .map(|c| c.parse::<usize>().map_err(|_| err("bad count")))
            .collect::<Result<Vec<_>>>()?;
        let predicted_class = class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| err("unknown class name"))?;
        nodes.push(TreeNode::Leaf {
            class_counts,
            predicted_class,
        });
        return Ok(id);
    }
    let (name, threshold) = body.rsplit_once(" <= ").ok_or_else(|| err("expected a rule"))?;
    let feature = feature_names
        .iter()
        .position(|f| f == name)
        .ok_or_else(|| err("unknown feature name"))?;
    let threshold: f64 = threshold.parse().map_err(|_| err("bad threshold"))?;
    nodes.push(TreeNode::Leaf {
        class_counts: Vec::new(),
        predicted_class: 0,
    });
    let left = parse_node(lines, cursor, depth + 1, feature_names, class_names, nodes)?;
    let right = parse_node(lines, cursor, depth + 1, feature_names, class_names, nodes)?;
    nodes[id] = TreeNode::Internal {
        feature,
        threshold,
        left,
        right,
    };
    Ok(id)
}
