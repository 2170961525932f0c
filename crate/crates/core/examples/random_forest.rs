//! A shallow tree against a 100-tree random forest on one held-out fold.

use deferral_ensemble::data::{load_csv, split_by_fold, stratified_kfold, LabelColumn};
use deferral_ensemble::forest::{fit_forest, ForestParams};
use deferral_ensemble::rng::DeterministicRng;
use deferral_ensemble::tree::{fit_tree, TreeParams};

fn main() -> deferral_ensemble::Result<()> {
    let d = load_csv(
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/breast_cancer.csv"),
        &LabelColumn::Last,
    )?;
    let plan = stratified_kfold(&d, 5, &mut DeterministicRng::new(1, 0))?;
    let (train, test) = split_by_fold(&d, &plan, 0)?;

    let tree = fit_tree(&train, &TreeParams::with_max_depth(4))?;
    let forest = fit_forest(&train, &ForestParams { seed: 1, ..Default::default() })?;

    println!("train {} rows, test {} rows", train.n_rows(), test.n_rows());
    println!("depth-4 tree   test accuracy {:.4}", tree.accuracy(&test)?);
    println!("random forest  test accuracy {:.4}", forest.accuracy(&test)?);

    let p = forest.predict_proba(test.row(0))?;
    println!("vote shares for the first test row: {p:?}");
    Ok(())
}
