//! Random forest, the black-box deferral classifier.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::DeterministicRng;
use crate::tree::{grow_tree, DecisionTree, GrowConfig, TreeParams};

/// How many features each node may inspect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturesPerSplit {
    /// `max(1, floor(sqrt(P)))`.
    Sqrt,
    All,
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(&self, n_features: usize) -> Result<usize> {
        let m = match *self {
            FeaturesPerSplit::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            FeaturesPerSplit::All => n_features,
            FeaturesPerSplit::Count(m) => m,
        };
        if m == 0 || m > n_features {
            return Err(Error::InvalidParameter(format!(
                "features_per_split must be in [1, {n_features}], got {m}"
            )));
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub features_per_split: FeaturesPerSplit,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
        }
        if let FeaturesPerSplit::Count(0) = self.features_per_split {
            return Err(Error::InvalidParameter("features_per_split must be at least 1".into()));
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            ..TreeParams::unbounded()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    params: ForestParams,
    n_classes: usize,
    n_features: usize,
}

/// `N` rows drawn uniformly with replacement.
pub fn bootstrap_sample(d: &Dataset, rng: &mut DeterministicRng) -> Dataset {
    let n = d.n_rows();
    let picks: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
    d.select(&picks)
}

/// Fits `n_trees` trees. Tree `i` draws only from stream `i` of
/// `params.seed`, so the forest does not depend on fitting order.
pub fn fit_forest(d: &Dataset, params: &ForestParams) -> Result<RandomForest> {
    params.validate()?;
    let m = params.features_per_split.resolve(d.n_features())?;
    let cfg = GrowConfig {
        params: params.tree_params(),
        features_per_split: Some(m),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = DeterministicRng::new(params.seed, i as u64);
            if params.bootstrap {
                let sample = bootstrap_sample(d, &mut rng);
                grow_tree(&sample, cfg, Some(&mut rng))
            } else {
                grow_tree(d, cfg, Some(&mut rng))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        trees,
        params: *params,
        n_classes: d.n_classes(),
        n_features: d.n_features(),
    })
}

impl RandomForest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean of the trees' leaf class-frequency vectors.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.proba_unchecked(x))
    }

    fn proba_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            let counts = tree.leaf_counts(x);
            let total: usize = counts.iter().sum();
            for (a, &c) in acc.iter_mut().zip(counts) {
                *a += c as f64 / total as f64;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> usize {
        argmax_f64(&self.proba_unchecked(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax_f64(&self.predict_proba(x)?))
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

    pub fn accuracy(&self, d: &Dataset) -> Result<f64> {
        let preds = self.predict_all(d)?;
        let hits = preds.iter().zip(d.labels()).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / d.n_rows() as f64)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax_f64(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}
