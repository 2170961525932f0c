//! 10-fold cross-validation repeated 5 times, printed as a summary table.
//!
//!     cargo run --release --example cross_validation [-- data.csv]

use deferral_ensemble::data::{load_csv, LabelColumn};
use deferral_ensemble::ensemble::EnsembleConfig;
use deferral_ensemble::experiment::{format_table, run_cv};

fn main() -> deferral_ensemble::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/breast_cancer.csv").into());
    let d = load_csv(&path, &LabelColumn::Last)?;
    let report = run_cv(&d, &EnsembleConfig::default(), 10, 5, 0)?;
    print!("{}", format_table(&[("data", &report)]));

    let s = &report.summary;
    println!(
        "test deferral rate {:.2} ± {:.2} % over {} runs",
        s.deferral_rate_test.mean * 100.0,
        s.deferral_rate_test.std * 100.0,
        report.n_runs
    );
    Ok(())
}
