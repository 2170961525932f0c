//! Fit a depth-3 CART tree, print it as indented text and trace one row.
//!
//!     cargo run --example tree_text_export [-- path/to/data.csv]

use deferral_ensemble::data::{load_csv, LabelColumn};
use deferral_ensemble::tree::{fit_tree, TreeParams};

fn main() -> deferral_ensemble::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/breast_cancer.csv").into());
    let d = load_csv(&path, &LabelColumn::Last)?;
    let tree = fit_tree(&d, &TreeParams::with_max_depth(3))?;

    println!("{}", tree.export_text(d.feature_names(), d.class_names())?);
    println!("depth {}, {} nodes, training accuracy {:.3}", tree.depth(), tree.node_count(), tree.accuracy(&d)?);

    let x = d.row(0);
    println!("\nrow 0 is labelled {}:", d.class_names()[tree.predict(x)?]);
    for step in tree.decision_path(x)? {
        println!("  {}", step.condition(d.feature_names()));
    }
    Ok(())
}
