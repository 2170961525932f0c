//! SMOTE oversampling for the two-class easy/hard relabeling.
//!
//! Each synthetic row is `x + λ·(x_nn − x)` with `x` a uniformly chosen
//! minority row, `x_nn` one of its `k` nearest minority neighbours chosen
//! uniformly, and `λ` uniform in `[0, 1)`. Distances are Euclidean on the raw
//! feature values.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::DeterministicRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteParams {
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for SmoteParams {
    fn default() -> Self {
        SmoteParams {
            k_neighbors: 5,
            seed: 0,
        }
    }
}

impl SmoteParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::InvalidParameter("k_neighbors must be at least 1".into()));
        }
        Ok(())
    }
}

/// Where a synthetic row came from. Indices refer to rows of the input
/// dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub parent: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoteOutput {
    /// Input rows in their original order, then the synthetic rows.
    pub dataset: Dataset,
    pub provenance: Vec<SyntheticOrigin>,
    pub minority_class: Option<usize>,
}

impl SmoteOutput {
    /// Provenance as CSV: `row,parent,neighbor,lambda`, where `row` is the
    /// index of the synthetic row in the output dataset.
    pub fn write_provenance_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "parent", "neighbor", "lambda"])?;
        let offset = self.dataset.n_rows() - self.provenance.len();
        for (i, o) in self.provenance.iter().enumerate() {
            w.write_record(&[
                (offset + i).to_string(),
                o.parent.to_string(),
                o.neighbor.to_string(),
                format!("{:?}", o.lambda),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<provenance>", e))?;
        Ok(())
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` rows closest to `rows[query]`, excluding the query itself.
/// Distance ties go to the lower index.
pub fn k_nearest_minority(rows: &[&[f64]], query: usize, k: usize) -> Result<Vec<usize>> {
    if query >= rows.len() {
        return Err(Error::InvalidParameter(format!(
            "query index {query} out of range for {} rows",
            rows.len()
        )));
    }
    if k == 0 || k + 1 > rows.len() {
        return Err(Error::InvalidParameter(format!(
            "k must be in [1, {}], got {k}",
            rows.len().saturating_sub(1)
        )));
    }
    let q = rows[query];
    let mut scored: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != query)
        .map(|(i, r)| (squared_distance(q, r), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    scored.select_nth_unstable_by(k - 1, cmp);
    scored.truncate(k);
    scored.sort_by(cmp);
    Ok(scored.into_iter().map(|(_, i)| i).collect())
}

/// Oversamples the minority class of a two-class dataset until both class
/// counts are equal.
pub fn smote_balance(d: &Dataset, params: &SmoteParams, rng: &mut DeterministicRng) -> Result<Dataset> {
    smote_balance_logged(d, params, rng).map(|o| o.dataset)
}

/// [`smote_balance`] that also returns the provenance of every synthetic row.
pub fn smote_balance_logged(
    d: &Dataset,
    params: &SmoteParams,
    rng: &mut DeterministicRng,
) -> Result<SmoteOutput> {
    params.validate()?;
    if d.n_classes() != 2 {
        return Err(Error::InvalidParameter(format!(
            "SMOTE balancing needs exactly 2 classes, got {}",
            d.n_classes()
        )));
    }
    let counts = d.class_counts();
    if counts.contains(&0) {
        return Err(Error::InvalidParameter(
            "SMOTE balancing needs both classes present".into(),
        ));
    }
    if counts[0] == counts[1] {
        return Ok(SmoteOutput {
            dataset: d.clone(),
            provenance: Vec::new(),
            minority_class: None,
        });
    }
    let minority = if counts[0] < counts[1] { 0 } else { 1 };
    let members: Vec<usize> = (0..d.n_rows()).filter(|&i| d.label(i) == minority).collect();
    let rows: Vec<&[f64]> = members.iter().map(|&i| d.row(i)).collect();
    let needed = counts[1 - minority] - counts[minority];
    let k = params.k_neighbors.min(members.len() - 1);

    let neighbours: Vec<Vec<usize>> = if k == 0 {
        vec![vec![0]]
    } else {
        (0..rows.len())
            .map(|q| k_nearest_minority(&rows, q, k))
            .collect::<Result<_>>()?
    };

    let p = d.n_features();
    let mut out_rows: Vec<Vec<f64>> = d.rows().map(<[f64]>::to_vec).collect();
    let mut labels = d.labels().to_vec();
    let mut provenance = Vec::with_capacity(needed);
    for _ in 0..needed {
        let a = rng.below(rows.len());
        let b = if k == 0 {
            a
        } else {
            neighbours[a][rng.below(k)]
        };
        let lambda = rng.uniform();
        let (x, nn) = (rows[a], rows[b]);
        let synth: Vec<f64> = (0..p).map(|j| x[j] + lambda * (nn[j] - x[j])).collect();
        log::debug!(
            "smote: parent={} neighbor={} lambda={lambda}",
            members[a],
            members[b]
        );
        out_rows.push(synth);
        labels.push(minority);
        provenance.push(SyntheticOrigin {
            parent: members[a],
            neighbor: members[b],
            lambda,
        });
    }
    let dataset = Dataset::new(
        out_rows,
        labels,
        d.feature_names().to_vec(),
        d.class_names().to_vec(),
    )?;
    Ok(SmoteOutput {
        dataset,
        provenance,
        minority_class: Some(minority),
    })
}
