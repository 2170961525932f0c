//! Datasets, CSV ingestion and stratified fold planning.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::DeterministicRng;

/// A dense numeric feature matrix with integer class labels.
///
/// Rows are stored contiguously (`features[i * n_features + j]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row vectors, checking every invariant.
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let p = feature_names.len();
        if rows.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut features = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} features, expected {p}",
                    row.len()
                )));
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(features, labels, feature_names, class_names)
    }

    /// Builds a dataset from a row-major feature buffer.
    pub fn from_flat(
        features: Vec<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let d = Dataset {
            features,
            labels,
            feature_names,
            class_names,
        };
        d.validate()?;
        Ok(d)
    }

    /// Names `f0, f1, ...` and `c0, c1, ...`; convenient for synthetic data.
    pub fn with_default_names(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        let c = labels.iter().max().map_or(0, |&m| m + 1);
        Self::new(
            rows,
            labels,
            (0..p).map(|j| format!("f{j}")).collect(),
            (0..c).map(|k| format!("c{k}")).collect(),
        )
    }

    fn validate(&self) -> Result<()> {
        let p = self.feature_names.len();
        let n = self.labels.len();
        if n == 0 {
            return Err(Error::InvalidDataset("no rows".into()));
        }
        if p == 0 {
            return Err(Error::InvalidDataset("no features".into()));
        }
        if self.class_names.is_empty() {
            return Err(Error::InvalidDataset("no classes".into()));
        }
        if self.features.len() != n * p {
            return Err(Error::InvalidDataset(format!(
                "feature buffer has {} values, expected {}",
                self.features.len(),
                n * p
            )));
        }
        if let Some(pos) = self.features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, feature {}",
                pos / p,
                pos % p
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&y| y >= self.class_names.len()) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} out of range for {} classes",
                self.class_names.len()
            )));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.features[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_features() + j]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// New dataset holding `indices` in the given order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let p = self.n_features();
        let mut features = Vec::with_capacity(indices.len() * p);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same features, replaced labels and class names.
    pub fn relabeled(&self, labels: Vec<usize>, class_names: Vec<String>) -> Result<Dataset> {
        Dataset::from_flat(
            self.features.clone(),
            labels,
            self.feature_names.clone(),
            class_names,
        )
    }
}

/// Which CSV column carries the class label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum LabelColumn {
    #[default]
    Last,
    Named(String),
}

/// Loads a headered, comma-separated file of numeric features and one
/// categorical label column. Class indices follow first appearance.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    parse_csv_with(&bytes, label).map_err(|e| match e {
        Error::InvalidDataset(msg) if msg == "no rows" => Error::EmptyFile(path.to_path_buf()),
        other => other,
    })
}

/// Parses CSV bytes; see [`load_csv`]. Row numbers in errors are 1-based
/// file lines (the header is line 1).
pub fn parse_csv_with(bytes: &[u8], label: &LabelColumn) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::InvalidDataset("no rows".into()));
    }
    let label_idx = match label {
        LabelColumn::Last => header.len() - 1,
        LabelColumn::Named(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownLabelColumn(name.clone()))?,
    };
    if header.len() < 2 {
        return Err(Error::InvalidDataset(
            "need at least one feature column besides the label".into(),
        ));
    }
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();

    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let line = r + 2;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::ColumnCount {
                row: line,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    row: line,
                    column: j + 1,
                    name: header[j].clone(),
                });
            }
            if j == label_idx {
                let next = class_names.len();
                let k = *class_index.entry(cell.to_owned()).or_insert_with(|| {
                    class_names.push(cell.to_owned());
                    next
                });
                labels.push(k);
            } else {
                let v: f64 = cell
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| Error::NonNumeric {
                        row: line,
                        column: j + 1,
                        name: header[j].clone(),
                        value: cell.to_owned(),
                    })?;
                features.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::InvalidDataset("no rows".into()));
    }
    Dataset::from_flat(features, labels, feature_names, class_names)
}

/// Assignment of every row to one of `k` folds for one CV repeat.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub repeat_id: u64,
    pub seed: u64,
    /// Classes with fewer than `k` members; some folds lack them.
    pub undersized_classes: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold plan: each class's rows are shuffled, then all classes
/// are laid end to end and dealt round-robin, so both per-class and total
/// fold sizes differ by at most one.
pub fn stratified_kfold(d: &Dataset, k: usize, rng: &mut DeterministicRng) -> Result<FoldPlan> {
    let n = d.n_rows();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "fold count must be in [2, {n}], got {k}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.n_classes()];
    for (i, &y) in d.labels().iter().enumerate() {
        by_class[y].push(i);
    }
    let mut assignments = vec![0; n];
    let mut undersized_classes = Vec::new();
    let mut slot = 0usize;
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            log::warn!(
                "class {:?} has {} members, fewer than {k} folds; some folds will not contain it",
                d.class_names()[class],
                members.len()
            );
            undersized_classes.push(class);
        }
        rng.shuffle(members);
        for &i in members.iter() {
            assignments[i] = slot % k;
            slot += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        repeat_id: rng.stream_id(),
        seed: rng.seed(),
        undersized_classes,
    })
}

/// Splits into (train, test) where test holds the rows of `test_fold`.
pub fn split_by_fold(d: &Dataset, plan: &FoldPlan, test_fold: usize) -> Result<(Dataset, Dataset)> {
    if test_fold >= plan.k {
        return Err(Error::InvalidParameter(format!(
            "fold index {test_fold} out of range for {} folds",
            plan.k
        )));
    }
    if plan.assignments.len() != d.n_rows() {
        return Err(Error::InvalidParameter(format!(
            "fold plan covers {} rows, dataset has {}",
            plan.assignments.len(),
            d.n_rows()
        )));
    }
    let (test, train): (Vec<usize>, Vec<usize>) =
        (0..d.n_rows()).partition(|&i| plan.assignments[i] == test_fold);
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "fold {test_fold} leaves an empty train or test split"
        )));
    }
    Ok((d.select(&train), d.select(&test)))
}
