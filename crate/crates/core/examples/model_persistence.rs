//! Save a fitted ensemble as JSON, load it back and check it predicts the same.

use deferral_ensemble::data::{load_csv, LabelColumn};
use deferral_ensemble::ensemble::{fit_ensemble, EnsembleConfig, GraderDeferralEnsemble};

fn main() -> deferral_ensemble::Result<()> {
    let d = load_csv(
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/breast_cancer.csv"),
        &LabelColumn::Last,
    )?;
    let e = fit_ensemble(&d, &EnsembleConfig::default().with_seed(9))?;

    let path = std::env::temp_dir().join("deferral_ensemble_model.json");
    e.save(&path)?;
    let loaded = GraderDeferralEnsemble::load(&path)?;

    let same = e.predict_all(&d)? == loaded.predict_all(&d)?;
    println!("saved to {} ({} bytes)", path.display(), std::fs::metadata(&path).map_or(0, |m| m.len()));
    println!("format {}, rng {}", loaded.format, loaded.rng_algorithm);
    println!("predictions identical after reload: {same}");
    Ok(())
}
