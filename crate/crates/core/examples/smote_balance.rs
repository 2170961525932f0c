//! Oversample a 95/5 dataset to 95/95 and print where each new row came from.

use deferral_ensemble::data::Dataset;
use deferral_ensemble::resample::{smote_balance_logged, SmoteParams};
use deferral_ensemble::rng::DeterministicRng;

fn main() -> deferral_ensemble::Result<()> {
    let mut rng = DeterministicRng::new(5, 0);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..100 {
        let minority = i >= 95;
        let shift = if minority { 3.0 } else { 0.0 };
        rows.push(vec![rng.uniform() * 4.0 + shift, rng.uniform() * 4.0]);
        labels.push(usize::from(minority));
    }
    let d = Dataset::new(rows, labels, vec!["a".into(), "b".into()], vec!["common".into(), "rare".into()])?;

    let out = smote_balance_logged(&d, &SmoteParams::default(), &mut DeterministicRng::new(5, 1))?;
    println!("before: {:?}", d.class_counts());
    println!("after:  {:?}", out.dataset.class_counts());

    let mut csv = Vec::new();
    out.write_provenance_csv(&mut csv)?;
    for line in String::from_utf8_lossy(&csv).lines().take(6) {
        println!("{line}");
    }
    println!("... {} synthetic rows in total", out.provenance.len());
    Ok(())
}
