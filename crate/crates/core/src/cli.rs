//! Command-line front end: `fit`, `cv`, `explain`, `boundary`, `export-tree`.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{load_csv, LabelColumn};
use crate::ensemble::{fit_ensemble, EnsembleConfig, GraderDeferralEnsemble};
use crate::error::{Error, Result};
use crate::experiment::{boundary_grid, format_table, run_cv, Bounds};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "deferral-ensemble", version, about = "Interpretable grader/deferral ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an ensemble on a whole CSV file and write the model as JSON.
    Fit(FitArgs),
    /// Repeated stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Explain the prediction for one input row.
    Explain(ExplainArgs),
    /// Write route/label plot data on a grid for a 2-feature model.
    Boundary(BoundaryArgs),
    /// Print the base or grader tree as indented text.
    ExportTree(ExportTreeArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Headered CSV with numeric features.
    #[arg(long)]
    pub data: PathBuf,
    /// Label column name (default: last column).
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct ModelOverrides {
    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with an ensemble configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub base_depth: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub grader_depth: Option<u64>,
    /// Number of trees in the deferral forest.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trees: Option<u64>,
    /// Depth cap for forest trees (default: none).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub forest_depth: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub smote_k: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelOverrides,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelOverrides,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// What to print on standard output.
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated feature values.
    #[arg(long, allow_hyphen_values = true)]
    pub row: String,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `xmin,xmax,ymin,ymax`
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: String,
    /// `NXxNY`, e.g. `100x100`.
    #[arg(long, default_value = "100x100")]
    pub resolution: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WhichTree {
    Base,
    Grader,
}

#[derive(Debug, Args)]
pub struct ExportTreeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub which: WhichTree,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a, stdout),
        Command::Cv(a) => cmd_cv(a, stdout),
        Command::Explain(a) => cmd_explain(a, stdout),
        Command::Boundary(a) => cmd_boundary(a, stdout),
        Command::ExportTree(a) => cmd_export_tree(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

fn label_column(a: &DataArgs) -> LabelColumn {
    a.label.clone().map_or(LabelColumn::Last, LabelColumn::Named)
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn read_config(path: &Path) -> Result<EnsembleConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Builds the ensemble configuration from defaults, an optional config
/// file and flag overrides, in that order.
pub fn build_config(o: &ModelOverrides) -> Result<EnsembleConfig> {
    let base = match &o.config {
        Some(path) => read_config(path)?,
        None => EnsembleConfig::default(),
    };
    let mut cfg = base.with_seed(o.seed.unwrap_or(base.seed));
    if let Some(d) = o.base_depth {
        cfg.base_params.max_depth = Some(d as usize);
    }
    if let Some(d) = o.grader_depth {
        cfg.grader_params.max_depth = Some(d as usize);
    }
    if let Some(n) = o.trees {
        cfg.deferral_params.n_trees = n as usize;
    }
    if let Some(d) = o.forest_depth {
        cfg.deferral_params.max_depth = Some(d as usize);
    }
    if let Some(k) = o.smote_k {
        cfg.smote.k_neighbors = k as usize;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = build_config(&a.model)?;
    let d = load_csv(&a.data.data, &label_column(&a.data))?;
    let e = fit_ensemble(&d, &cfg)?;
    e.save(&a.out)?;
    let s = &e.fit_stats;
    let _ = writeln!(out, "rows: {}", s.n_train);
    let _ = writeln!(out, "base training accuracy: {:.4}", s.base_train_accuracy);
    let _ = writeln!(out, "hard rows before resampling: {}", s.hard_count_before_resample);
    let _ = writeln!(out, "synthetic rows: {}", s.synthetic_rows);
    let _ = writeln!(out, "trivial grader: {}", s.trivial_grader);
    let _ = writeln!(out, "model written to {}", a.out.display());
    Ok(())
}

fn cmd_cv(a: &CvArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = build_config(&a.model)?;
    let d = load_csv(&a.data.data, &label_column(&a.data))?;
    let seed = cfg.seed;
    let report = run_cv(&d, &cfg, a.folds, a.repeats, seed)?;
    let json = report.to_json()?;
    if let Some(path) = &a.out {
        write_file(path, json.as_bytes())?;
    }
    match a.format {
        ReportFormat::Json => {
            let _ = writeln!(out, "{json}");
        }
        ReportFormat::Table => {
            let name = a
                .data
                .data
                .file_stem()
                .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
            let _ = write!(out, "{}", format_table(&[(&name, &report)]));
            let _ = writeln!(out, "({} runs: {} folds x {} repeats, seed {seed})", report.n_runs, a.folds, a.repeats);
        }
    }
    Ok(())
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| usage(format!("{what}: {v:?} is not a finite number")))
        })
        .collect()
}

fn cmd_explain(a: &ExplainArgs, out: &mut dyn Write) -> Result<()> {
    let e = GraderDeferralEnsemble::load(&a.model)?;
    let x = parse_floats(&a.row, "--row")?;
    let _ = write!(out, "{}", e.explain(&x)?);
    Ok(())
}

fn parse_resolution(text: &str) -> Result<(usize, usize)> {
    let bad = || usage(format!("--resolution: expected NXxNY, got {text:?}"));
    let (nx, ny) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let nx: usize = nx.trim().parse().map_err(|_| bad())?;
    let ny: usize = ny.trim().parse().map_err(|_| bad())?;
    if nx == 0 || ny == 0 {
        return Err(bad());
    }
    Ok((nx, ny))
}

fn cmd_boundary(a: &BoundaryArgs, out: &mut dyn Write) -> Result<()> {
    let b = parse_floats(&a.bounds, "--bounds")?;
    if b.len() != 4 {
        return Err(usage("--bounds takes xmin,xmax,ymin,ymax"));
    }
    let bounds = Bounds {
        xmin: b[0],
        xmax: b[1],
        ymin: b[2],
        ymax: b[3],
    };
    bounds.validate()?;
    let (nx, ny) = parse_resolution(&a.resolution)?;
    let e = GraderDeferralEnsemble::load(&a.model)?;
    let grid = boundary_grid(&e, bounds, nx, ny)?;
    let mut buf = Vec::new();
    grid.write_csv(&mut buf, &e.class_names)?;
    write_file(&a.out, &buf)?;
    let _ = writeln!(out, "{} cells written to {}", grid.records.len(), a.out.display());
    Ok(())
}

fn cmd_export_tree(a: &ExportTreeArgs, out: &mut dyn Write) -> Result<()> {
    let e = GraderDeferralEnsemble::load(&a.model)?;
    let text = match a.which {
        WhichTree::Base => e.base.export_text(&e.feature_names, &e.class_names)?,
        WhichTree::Grader => e
            .grader
            .export_text(&e.feature_names, &crate::ensemble::grader_class_names())?,
    };
    let _ = write!(out, "{text}");
    if a.which == WhichTree::Grader && e.fit_stats.trivial_grader {
        let _ = writeln!(out, "note: trivial grader; every input takes the same route");
    }
    Ok(())
}
