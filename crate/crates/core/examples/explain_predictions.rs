//! Explanations for one input the base tree handles and one it defers.

use deferral_ensemble::data::{load_csv, LabelColumn};
use deferral_ensemble::ensemble::{fit_ensemble, EnsembleConfig, Route};

fn main() -> deferral_ensemble::Result<()> {
    let d = load_csv(
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/breast_cancer.csv"),
        &LabelColumn::Last,
    )?;
    let e = fit_ensemble(&d, &EnsembleConfig::default())?;
    let routes = e.predict_all(&d)?;

    for want in [Route::Easy, Route::Hard] {
        match routes.iter().position(|(_, r)| *r == want) {
            Some(i) => println!("row {i}\n{}", e.explain(d.row(i))?),
            None => println!("no {want} rows"),
        }
    }
    Ok(())
}
