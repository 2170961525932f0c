//! Two overlapping classes in the plane, 50 points each. Fits the ensemble,
//! prints both trees, counts how many training points fall in the region
//! the grader sends to the forest, and writes boundary plot data.
//!
//!     cargo run --example two_d_demo [-- grid.csv]

use std::fs::File;

use deferral_ensemble::data::Dataset;
use deferral_ensemble::ensemble::{fit_ensemble, grader_class_names, EnsembleConfig, Route};
use deferral_ensemble::experiment::{boundary_grid, Bounds};
use deferral_ensemble::rng::DeterministicRng;

fn main() -> deferral_ensemble::Result<()> {
    let mut rng = DeterministicRng::new(2024, 0);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..100 {
        let class = usize::from(i >= 50);
        let (cx, cy) = if class == 0 { (0.35, 0.4) } else { (0.65, 0.6) };
        rows.push(vec![cx + (rng.uniform() - 0.5) * 0.6, cy + (rng.uniform() - 0.5) * 0.6]);
        labels.push(class);
    }
    let d = Dataset::new(rows, labels, vec!["x1".into(), "x2".into()], vec!["red".into(), "blue".into()])?;
    let e = fit_ensemble(&d, &EnsembleConfig::default().with_seed(1))?;

    println!("base tree:\n{}", e.base.export_text(&e.feature_names, &e.class_names)?);
    println!("grader tree:\n{}", e.grader.export_text(&e.feature_names, &grader_class_names())?);

    let routed = e.predict_all(&d)?;
    let hard = routed.iter().filter(|(_, r)| *r == Route::Hard).count();
    let right = routed.iter().zip(d.labels()).filter(|((p, _), y)| p == *y).count();
    println!("{hard} of 100 training points fall in the deferred region");
    println!("base accuracy {:.2}, ensemble accuracy {:.2}", e.base.accuracy(&d)?, right as f64 / 100.0);

    let grid = boundary_grid(&e, Bounds { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 }, 100, 100)?;
    let deferred = grid.records.iter().filter(|c| c.route == Route::Hard).count();
    println!("{:.1}% of the unit square is deferred", deferred as f64 / 100.0);

    if let Some(path) = std::env::args().nth(1) {
        let file = File::create(&path).map_err(|err| deferral_ensemble::Error::Io { path: path.clone().into(), source: err })?;
        grid.write_csv(file, &e.class_names)?;
        println!("grid written to {path}");
    }
    Ok(())
}
