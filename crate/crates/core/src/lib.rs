//! Interpretable classification with a grader and a deferral model.
//!
//! An ensemble of three models:
//!
//! - a shallow **base** decision tree that labels inputs judged *easy*;
//! - a **deferral** random forest that labels inputs judged *hard*;
//! - a shallow **grader** decision tree that decides which of the two runs.
//!
//! The grader is trained on a copy of the training data relabelled by whether
//! the base tree got each row right, balanced with SMOTE. Every prediction
//! therefore comes with either the base tree's rule path or the grader's
//! reason for handing the input to the forest.
//!
//! ```
//! use deferral_ensemble::prelude::*;
//!
//! let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 7) as f64]).collect();
//! let labels: Vec<usize> = (0..40).map(|i| usize::from(i % 10 > 4)).collect();
//! let data = Dataset::with_default_names(rows, labels).unwrap();
//!
//! let mut cfg = EnsembleConfig::default().with_seed(7);
//! cfg.deferral_params.n_trees = 20;
//! let model = fit_ensemble(&data, &cfg).unwrap();
//!
//! let p = model.predict(data.row(3)).unwrap();
//! println!("{:?} via {}", p.label, p.route);
//! println!("{}", model.explain(data.row(3)).unwrap());
//! ```
//!
//! Every random draw goes through [`rng::DeterministicRng`], so fits and
//! cross-validation reports are reproducible from a seed, including when
//! trees and folds are fitted in parallel.

pub mod cli;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod resample;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::data::{load_csv, split_by_fold, stratified_kfold, Dataset, FoldPlan, LabelColumn};
    pub use crate::ensemble::{
        fit_ensemble, relabel_easy_hard, EnsembleConfig, GraderDeferralEnsemble, Route,
        RoutedPrediction,
    };
    pub use crate::experiment::{boundary_grid, evaluate_holdout, run_cv, Bounds, CvReport, RunReport};
    pub use crate::forest::{fit_forest, FeaturesPerSplit, ForestParams, RandomForest};
    pub use crate::resample::{smote_balance, SmoteParams};
    pub use crate::rng::DeterministicRng;
    pub use crate::tree::{fit_tree, DecisionTree, TreeParams};
    pub use crate::{Error, Result};
}
