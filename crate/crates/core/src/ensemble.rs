//! The grader/deferral ensemble.
//!
//! Training:
//! 1. fit the base tree and the deferral forest on the training data;
//! 2. relabel every training row `easy` if the base tree classifies it
//!    correctly and `hard` otherwise;
//! 3. balance easy/hard with SMOTE;
//! 4. fit the grader tree on the balanced relabeled rows.
//!
//! Inference asks the grader first. `easy` inputs are labelled by the base
//! tree, `hard` inputs by the forest. Both white-box decisions can be printed
//! as condition lists, so every answer comes with either a full explanation
//! or an explanation of why the forest was used.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestParams, RandomForest};
use crate::resample::{smote_balance, SmoteParams};
use crate::rng::{derive_seed, DeterministicRng, RNG_ALGORITHM};
use crate::tree::{fit_tree, DecisionTree, PathStep, TreeParams};

pub const EASY: usize = 0;
pub const HARD: usize = 1;

/// Identifier written into model files.
pub const MODEL_FORMAT: &str = "deferral-ensemble/1";

pub fn grader_class_names() -> Vec<String> {
    vec!["easy".to_string(), "hard".to_string()]
}

/// Parameters for all three components.
///
/// `seed` is the master seed. [`EnsembleConfig::with_seed`] derives the
/// forest and SMOTE seeds from it; `fit_ensemble` itself uses the seeds
/// stored in the sub-parameters as they are.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub base_params: TreeParams,
    pub grader_params: TreeParams,
    pub deferral_params: ForestParams,
    pub smote: SmoteParams,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            base_params: TreeParams::default(),
            grader_params: TreeParams::default(),
            deferral_params: ForestParams::default(),
            smote: SmoteParams::default(),
            seed: 0,
        }
        .with_seed(0)
    }
}

impl EnsembleConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.deferral_params.seed = derive_seed(seed, 1);
        self.smote.seed = derive_seed(seed, 2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base_params.validate()?;
        self.grader_params.validate()?;
        self.deferral_params.validate()?;
        self.smote.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub n_train: usize,
    pub easy_count: usize,
    /// Number of hard rows before SMOTE.
    pub hard_count_before_resample: usize,
    /// Equal to `easy_count / n_train`.
    pub base_train_accuracy: f64,
    pub synthetic_rows: usize,
    /// The grader is a single leaf and sends every input the same way.
    pub trivial_grader: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Easy,
    Hard,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Easy => "easy",
            Route::Hard => "hard",
        }
    }
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutedPrediction {
    pub label: usize,
    pub route: Route,
    pub grader_path: Vec<PathStep>,
    /// Base-tree path; present only for easy inputs.
    pub evaluator_path: Option<Vec<PathStep>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraderDeferralEnsemble {
    pub format: String,
    pub rng_algorithm: String,
    pub config: EnsembleConfig,
    pub fit_stats: FitStats,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub base: DecisionTree,
    pub grader: DecisionTree,
    pub deferral: RandomForest,
}

/// Copy of `d` labelled `easy` (0) where `base` is right and `hard` (1)
/// where it is wrong.
pub fn relabel_easy_hard(base: &DecisionTree, d: &Dataset) -> Result<Dataset> {
    let preds = base.predict_all(d)?;
    let labels = preds
        .iter()
        .zip(d.labels())
        .map(|(p, y)| if p == y { EASY } else { HARD })
        .collect();
    d.relabeled(labels, grader_class_names())
}

pub fn fit_ensemble(d: &Dataset, cfg: &EnsembleConfig) -> Result<GraderDeferralEnsemble> {
    cfg.validate()?;
    if d.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::InvalidDataset(
            "training data must contain at least 2 classes".into(),
        ));
    }
    let (base, deferral) = rayon::join(
        || fit_tree(d, &cfg.base_params),
        || fit_forest(d, &cfg.deferral_params),
    );
    let (base, deferral) = (base?, deferral?);

    let relabeled = relabel_easy_hard(&base, d)?;
    let counts = relabeled.class_counts();
    let (easy_count, hard_count) = (counts[EASY], counts[HARD]);
    let n = d.n_rows();

    let (grader, synthetic_rows) = if easy_count == 0 || hard_count == 0 {
        (
            DecisionTree::constant(counts, d.n_features(), cfg.grader_params),
            0,
        )
    } else {
        let mut rng = DeterministicRng::new(cfg.smote.seed, 0);
        let balanced = smote_balance(&relabeled, &cfg.smote, &mut rng)?;
        let synthetic = balanced.n_rows() - n;
        (fit_tree(&balanced, &cfg.grader_params)?, synthetic)
    };

    let fit_stats = FitStats {
        n_train: n,
        easy_count,
        hard_count_before_resample: hard_count,
        base_train_accuracy: easy_count as f64 / n as f64,
        synthetic_rows,
        trivial_grader: grader.is_leaf_only(),
    };
    Ok(GraderDeferralEnsemble {
        format: MODEL_FORMAT.to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        config: *cfg,
        fit_stats,
        feature_names: d.feature_names().to_vec(),
        class_names: d.class_names().to_vec(),
        base,
        grader,
        deferral,
    })
}

impl GraderDeferralEnsemble {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("input contains a non-finite value".into()));
        }
        Ok(())
    }

    pub fn route(&self, x: &[f64]) -> Result<Route> {
        self.check(x)?;
        Ok(self.route_unchecked(x))
    }

    fn route_unchecked(&self, x: &[f64]) -> Route {
        if self.grader.predict_unchecked(x) == EASY {
            Route::Easy
        } else {
            Route::Hard
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<RoutedPrediction> {
        self.check(x)?;
        let grader_path = self.grader.decision_path(x)?;
        match self.route_unchecked(x) {
            Route::Easy => Ok(RoutedPrediction {
                label: self.base.predict_unchecked(x),
                route: Route::Easy,
                grader_path,
                evaluator_path: Some(self.base.decision_path(x)?),
            }),
            Route::Hard => Ok(RoutedPrediction {
                label: self.deferral.predict_unchecked(x),
                route: Route::Hard,
                grader_path,
                evaluator_path: None,
            }),
        }
    }

    /// `(label, route)` for every row of `d`.
    pub fn predict_all(&self, d: &Dataset) -> Result<Vec<(usize, Route)>> {
        if d.n_features() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: d.n_features(),
            });
        }
        Ok(d
            .rows()
            .map(|x| match self.route_unchecked(x) {
                Route::Easy => (self.base.predict_unchecked(x), Route::Easy),
                Route::Hard => (self.deferral.predict_unchecked(x), Route::Hard),
            })
            .collect())
    }

    /// Human-readable account of how `x` was labelled, using the names
    /// stored in the model.
    pub fn explain(&self, x: &[f64]) -> Result<String> {
        self.explain_with_names(x, &self.feature_names, &self.class_names)
    }

    pub fn explain_with_names(
        &self,
        x: &[f64],
        feature_names: &[String],
        class_names: &[String],
    ) -> Result<String> {
        if feature_names.len() != self.n_features() {
            return Err(Error::NameMismatch {
                what: "feature names",
                expected: self.n_features(),
                found: feature_names.len(),
            });
        }
        if class_names.len() != self.class_names.len() {
            return Err(Error::NameMismatch {
                what: "class names",
                expected: self.class_names.len(),
                found: class_names.len(),
            });
        }
        let p = self.predict(x)?;
        let mut out = String::new();
        let _ = writeln!(out, "route: {}", p.route);
        if self.fit_stats.trivial_grader {
            let _ = writeln!(
                out,
                "note: the grader is trivial; every input is graded {}",
                p.route
            );
        } else {
            let _ = writeln!(out, "why {}:", p.route);
            for step in &p.grader_path {
                let _ = writeln!(out, "  {}", step.condition(feature_names));
            }
        }
        let label = &class_names[p.label];
        match &p.evaluator_path {
            Some(path) => {
                let _ = writeln!(out, "prediction: {label} (base classifier)");
                let _ = writeln!(out, "because:");
                for step in path {
                    let _ = writeln!(out, "  {}", step.condition(feature_names));
                }
                if path.is_empty() {
                    let _ = writeln!(out, "  (base classifier is a single leaf)");
                }
            }
            None => {
                let _ = writeln!(out, "prediction: {label} (deferral classifier)");
                let _ = writeln!(
                    out,
                    "deferred: labelled by the random forest ({} trees); no rule path is available",
                    self.deferral.trees().len()
                );
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: GraderDeferralEnsemble = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::InvalidDataset(format!(
                "unsupported model format {:?}",
                model.format
            )));
        }
        let p = model.n_features();
        let consistent = model.base.n_features() == p
            && model.grader.n_features() == p
            && model.deferral.n_features() == p
            && model.grader.n_classes() == 2
            && model.base.n_classes() == model.class_names.len()
            && model.deferral.n_classes() == model.class_names.len();
        if !consistent {
            return Err(Error::InvalidDataset("model components disagree on dimensions".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
