//! Cross-validation harness, metrics and decision-boundary grids.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, split_by_fold, stratified_kfold, Dataset, LabelColumn};
use crate::ensemble::{fit_ensemble, EnsembleConfig, GraderDeferralEnsemble, Route};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, DeterministicRng};

/// Metrics of one train/test split. Accuracies and rates are fractions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub base_acc_train: f64,
    pub base_acc_test: f64,
    pub final_acc_train: f64,
    pub final_acc_test: f64,
    pub deferral_rate_train: f64,
    pub deferral_rate_test: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub hard_train: usize,
    pub hard_test: usize,
    pub fold_id: usize,
    pub repeat_id: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Population standard deviation (divides by the run count).
    pub std: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MetricSummary::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MetricSummary {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub base_acc_train: MetricSummary,
    pub base_acc_test: MetricSummary,
    pub final_acc_train: MetricSummary,
    pub final_acc_test: MetricSummary,
    pub deferral_rate_train: MetricSummary,
    pub deferral_rate_test: MetricSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub n_runs: usize,
    pub config: EnsembleConfig,
    pub summary: CvSummary,
    pub runs: Vec<RunReport>,
}

impl CvReport {
    pub fn from_runs(k: usize, repeats: usize, seed: u64, config: EnsembleConfig, runs: Vec<RunReport>) -> Self {
        let col = |f: fn(&RunReport) -> f64| MetricSummary::of(&runs.iter().map(f).collect::<Vec<_>>());
        let summary = CvSummary {
            base_acc_train: col(|r| r.base_acc_train),
            base_acc_test: col(|r| r.base_acc_test),
            final_acc_train: col(|r| r.final_acc_train),
            final_acc_test: col(|r| r.final_acc_test),
            deferral_rate_train: col(|r| r.deferral_rate_train),
            deferral_rate_test: col(|r| r.deferral_rate_test),
        };
        CvReport {
            k,
            repeats,
            seed,
            n_runs: runs.len(),
            config,
            summary,
            runs,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct SetMetrics {
    base_acc: f64,
    final_acc: f64,
    hard: usize,
}

fn score_set(e: &GraderDeferralEnsemble, d: &Dataset) -> Result<SetMetrics> {
    let n = d.n_rows() as f64;
    let base = e.base.predict_all(d)?;
    let routed = e.predict_all(d)?;
    let base_hits = base.iter().zip(d.labels()).filter(|(p, y)| p == y).count();
    let final_hits = routed.iter().zip(d.labels()).filter(|((p, _), y)| p == *y).count();
    let hard = routed.iter().filter(|(_, r)| *r == Route::Hard).count();
    Ok(SetMetrics {
        base_acc: base_hits as f64 / n,
        final_acc: final_hits as f64 / n,
        hard,
    })
}

/// Scores a fitted ensemble on its training set and a held-out set.
///
/// Base accuracy evaluates the base tree alone on every row; final accuracy
/// follows the grader's routing; the deferral rate is the fraction of rows
/// graded hard.
pub fn evaluate_holdout(e: &GraderDeferralEnsemble, train: &Dataset, test: &Dataset) -> Result<RunReport> {
    let tr = score_set(e, train)?;
    let te = score_set(e, test)?;
    Ok(RunReport {
        base_acc_train: tr.base_acc,
        base_acc_test: te.base_acc,
        final_acc_train: tr.final_acc,
        final_acc_test: te.final_acc,
        deferral_rate_train: tr.hard as f64 / train.n_rows() as f64,
        deferral_rate_test: te.hard as f64 / test.n_rows() as f64,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        hard_train: tr.hard,
        hard_test: te.hard,
        fold_id: 0,
        repeat_id: 0,
        seed: e.config.seed,
    })
}

/// Final accuracy computed by splitting rows on the grader's verdict and
/// scoring the base tree on the easy part and the forest on the hard part.
pub fn partitioned_accuracy(e: &GraderDeferralEnsemble, d: &Dataset) -> Result<f64> {
    let routes: Vec<bool> = d
        .rows()
        .map(|x| e.route(x).map(|r| r == Route::Easy))
        .collect::<Result<_>>()?;
    let easy: Vec<usize> = (0..d.n_rows()).filter(|&i| routes[i]).collect();
    let hard: Vec<usize> = (0..d.n_rows()).filter(|&i| !routes[i]).collect();
    let hits = |idx: &[usize], preds: Vec<usize>, sub: &Dataset| {
        debug_assert_eq!(idx.len(), sub.n_rows());
        preds.iter().zip(sub.labels()).filter(|(p, y)| p == y).count()
    };
    let easy_set = d.select(&easy);
    let hard_set = d.select(&hard);
    let mut correct = 0;
    if !easy.is_empty() {
        correct += hits(&easy, e.base.predict_all(&easy_set)?, &easy_set);
    }
    if !hard.is_empty() {
        correct += hits(&hard, e.deferral.predict_all(&hard_set)?, &hard_set);
    }
    Ok(correct as f64 / d.n_rows() as f64)
}

/// Seed of the ensemble fitted on fold `fold` of repeat `repeat`.
pub fn fold_seed(seed: u64, repeat: usize, fold: usize) -> u64 {
    derive_seed(derive_seed(seed, repeat as u64), fold as u64)
}

/// Repeated stratified k-fold cross-validation.
///
/// Repeat `r` plans its folds from stream `r` of `seed`; the ensemble for
/// fold `f` uses `cfg.with_seed(fold_seed(seed, r, f))`. Folds run in
/// parallel and the report is identical to a sequential run.
pub fn run_cv(d: &Dataset, cfg: &EnsembleConfig, k: usize, repeats: usize, seed: u64) -> Result<CvReport> {
    cfg.validate()?;
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    let plans = (0..repeats)
        .map(|r| stratified_kfold(d, k, &mut DeterministicRng::new(seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..repeats).flat_map(|r| (0..k).map(move |f| (r, f))).collect();
    let runs = jobs
        .par_iter()
        .map(|&(r, f)| {
            let (train, test) = split_by_fold(d, &plans[r], f)?;
            let fold_cfg = cfg.with_seed(fold_seed(seed, r, f));
            let e = fit_ensemble(&train, &fold_cfg)?;
            let mut report = evaluate_holdout(&e, &train, &test)?;
            report.fold_id = f;
            report.repeat_id = r;
            report.seed = fold_cfg.seed;
            Ok(report)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvReport::from_runs(k, repeats, seed, *cfg, runs))
}

/// Aligned text table with one row per dataset: base accuracy, final
/// accuracy and deferral rate, each on train and test, in percent.
pub fn format_table(rows: &[(&str, &CvReport)]) -> String {
    let name_w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(7);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_w$}  {:^19}  {:^19}  {:^19}",
        "Dataset", "Base Accuracy [%]", "Final Accuracy [%]", "Deferral Rate [%]"
    );
    let _ = writeln!(
        out,
        "{:<name_w$}  {:>9} {:>9}  {:>9} {:>9}  {:>9} {:>9}",
        "", "Training", "Test", "Training", "Test", "Training", "Test"
    );
    for (name, r) in rows {
        let s = &r.summary;
        let pct = |m: &MetricSummary| format!("{:.2}", m.mean * 100.0);
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>9} {:>9}  {:>9} {:>9}  {:>9} {:>9}",
            name,
            pct(&s.base_acc_train),
            pct(&s.base_acc_test),
            pct(&s.final_acc_train),
            pct(&s.final_acc_test),
            pct(&s.deferral_rate_train),
            pct(&s.deferral_rate_test),
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.xmin, self.xmax, self.ymin, self.ymax].iter().all(|v| v.is_finite());
        if !all_finite || self.xmin >= self.xmax || self.ymin >= self.ymax {
            return Err(Error::InvalidParameter(format!(
                "degenerate bounds x:[{}, {}] y:[{}, {}]",
                self.xmin, self.xmax, self.ymin, self.ymax
            )));
        }
        Ok(())
    }

    /// Bounding box of a two-feature dataset, widened by `margin` of each span.
    pub fn around(d: &Dataset, margin: f64) -> Result<Bounds> {
        if d.n_features() != 2 {
            return Err(Error::InvalidParameter("bounds need exactly 2 features".into()));
        }
        let span = |j: usize| {
            let (lo, hi) = d
                .rows()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
            let pad = ((hi - lo) * margin).max(1e-9);
            (lo - pad, hi + pad)
        };
        let (xmin, xmax) = span(0);
        let (ymin, ymax) = span(1);
        Ok(Bounds { xmin, xmax, ymin, ymax })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub x: f64,
    pub y: f64,
    pub route: Route,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    pub nx: usize,
    pub ny: usize,
    pub bounds: Bounds,
    /// Row-major: all `x` cells of the first `y` row, then the next row.
    pub records: Vec<GridCell>,
}

/// Routes and labels at the cell centres of an `nx × ny` grid.
pub fn boundary_grid(e: &GraderDeferralEnsemble, bounds: Bounds, nx: usize, ny: usize) -> Result<BoundaryGrid> {
    if e.n_features() != 2 {
        return Err(Error::InvalidParameter(format!(
            "boundary grids need a 2-feature model, this one has {}",
            e.n_features()
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive".into()));
    }
    bounds.validate()?;
    let dx = (bounds.xmax - bounds.xmin) / nx as f64;
    let dy = (bounds.ymax - bounds.ymin) / ny as f64;
    let mut records = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = bounds.ymin + (j as f64 + 0.5) * dy;
        for i in 0..nx {
            let x = bounds.xmin + (i as f64 + 0.5) * dx;
            let p = e.predict(&[x, y])?;
            records.push(GridCell {
                x,
                y,
                route: p.route,
                label: p.label,
            });
        }
    }
    Ok(BoundaryGrid { nx, ny, bounds, records })
}

impl BoundaryGrid {
    /// CSV with header `x,y,route,label`; `label` is the class name.
    pub fn write_csv<W: Write>(&self, out: W, class_names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "route", "label"])?;
        for c in &self.records {
            w.write_record(&[
                format!("{:?}", c.x),
                format!("{:?}", c.y),
                c.route.to_string(),
                class_names[c.label].clone(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<grid>", e))?;
        Ok(())
    }
}

/// Shape of one of the benchmark datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchmarkDataset {
    pub abbr: &'static str,
    pub name: &'static str,
    /// Expected file name inside a data directory.
    pub file: &'static str,
    pub n_features: usize,
    pub n_rows: usize,
    pub n_classes: usize,
}

/// The fourteen OpenML/UCI benchmark datasets, by abbreviation.
pub const BENCHMARK_DATASETS: [BenchmarkDataset; 14] = [
    BenchmarkDataset { abbr: "Bnk", name: "Banknote Authentication", file: "banknote.csv", n_features: 4, n_rows: 1372, n_classes: 2 },
    BenchmarkDataset { abbr: "Bld", name: "Blood Transfusion Service Center", file: "blood_transfusion.csv", n_features: 4, n_rows: 748, n_classes: 2 },
    BenchmarkDataset { abbr: "Brst", name: "Breast Cancer Wisconsin (Diagnostic)", file: "breast_cancer.csv", n_features: 30, n_rows: 569, n_classes: 2 },
    BenchmarkDataset { abbr: "Clim", name: "Climate Model Simulation Crashes", file: "climate.csv", n_features: 20, n_rows: 540, n_classes: 2 },
    BenchmarkDataset { abbr: "EEG", name: "EEG Eye State", file: "eeg_eye_state.csv", n_features: 14, n_rows: 14980, n_classes: 2 },
    BenchmarkDataset { abbr: "Gas", name: "Gas Sensor Array Drift", file: "gas_drift.csv", n_features: 128, n_rows: 13910, n_classes: 6 },
    BenchmarkDataset { abbr: "Ins", name: "Ionosphere", file: "ionosphere.csv", n_features: 34, n_rows: 351, n_classes: 2 },
    BenchmarkDataset { abbr: "Lnd", name: "Landsat Satellite", file: "landsat.csv", n_features: 36, n_rows: 6430, n_classes: 6 },
    BenchmarkDataset { abbr: "Ozn", name: "Ozone Level Detection", file: "ozone.csv", n_features: 72, n_rows: 2534, n_classes: 2 },
    BenchmarkDataset { abbr: "QSAR", name: "QSAR Biodegradation", file: "qsar_biodeg.csv", n_features: 41, n_rows: 1055, n_classes: 2 },
    BenchmarkDataset { abbr: "Spm", name: "Spambase", file: "spambase.csv", n_features: 57, n_rows: 4601, n_classes: 2 },
    BenchmarkDataset { abbr: "Stl", name: "Steel Plates Faults", file: "steel_plates.csv", n_features: 27, n_rows: 1941, n_classes: 7 },
    BenchmarkDataset { abbr: "Vhcl", name: "Vehicle", file: "vehicle.csv", n_features: 18, n_rows: 846, n_classes: 4 },
    BenchmarkDataset { abbr: "Yst", name: "Yeast", file: "yeast.csv", n_features: 8, n_rows: 1484, n_classes: 10 },
];

pub fn benchmark(abbr: &str) -> Option<&'static BenchmarkDataset> {
    BENCHMARK_DATASETS.iter().find(|b| b.abbr.eq_ignore_ascii_case(abbr))
}

/// Loads `dir/<file>` for a benchmark (label in the last column) and checks
/// its shape against the catalogue.
pub fn load_benchmark(dir: impl AsRef<Path>, abbr: &str) -> Result<Dataset> {
    let b = benchmark(abbr).ok_or_else(|| Error::InvalidParameter(format!("unknown benchmark {abbr:?}")))?;
    let d = load_csv(dir.as_ref().join(b.file), &LabelColumn::Last)?;
    let shape = (d.n_rows(), d.n_features(), d.n_classes());
    if shape != (b.n_rows, b.n_features, b.n_classes) {
        return Err(Error::InvalidDataset(format!(
            "{} has shape (rows, features, classes) = {shape:?}, expected {:?}",
            b.file,
            (b.n_rows, b.n_features, b.n_classes)
        )));
    }
    Ok(d)
}
