//! Command-line interface: argument definitions and command bodies.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use qcorr::measures::{analyze, CorrelationReport, Measure, MeasureRequest};
use qcorr::{DensityMatrix, OptimizerSettings};

use crate::error::{CliError, Result};
use crate::family::{fill_template, format_parameter, parse_family};
use crate::io::{load_state, save_state, write_text};
use crate::report::{csv_row, report_json, Source, CSV_HEADER};
use crate::verify::{run_suite, Suite};

#[derive(Debug, Parser)]
#[command(name = "qcorr", version, about = "Quantum and classical correlations of density matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute measures for one state.
    Compute(ComputeArgs),
    /// Compute measures along a one-parameter family, one CSV row per point.
    Sweep(SweepArgs),
    /// Run an invariant suite over random states.
    Verify(VerifyArgs),
    /// Write a family member as a JSON state file.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Comma-separated measures (E, D, Q, C, T, L, delta, delta_rev, MID, S1,
    /// S2, J, P_N, unified) or `all`.
    #[arg(long, default_value = "all")]
    pub measures: String,
    /// Measured subsystems for discord-type measures: letters (`A`, `AB`) or
    /// zero-based indices (`0,2`).
    #[arg(long, default_value = "A")]
    pub measured: String,
    /// Trial count for the confusion probability.
    #[arg(long, default_value_t = 1.0)]
    pub trials: f64,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct SettingsArgs {
    /// Coarse grid points per basis angle.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub opt_tol: Option<f64>,
    #[arg(long)]
    pub opt_gap_tol: Option<f64>,
    #[arg(long)]
    pub max_grid_evals: Option<usize>,
    #[arg(long)]
    pub refine_max_iter: Option<usize>,
    /// Product terms in the separable search (default: dimension squared).
    #[arg(long)]
    pub separable_terms: Option<usize>,
    #[arg(long)]
    pub separable_max_iter: Option<usize>,
}

impl SettingsArgs {
    pub fn apply(&self) -> Result<OptimizerSettings> {
        let mut s = OptimizerSettings::default();
        if let Some(v) = self.grid {
            s.grid_points_per_angle = v;
        }
        if let Some(v) = self.restarts {
            s.restarts = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.opt_tol {
            s.opt_tol = v;
        }
        if let Some(v) = self.opt_gap_tol {
            s.opt_gap_tol = v;
        }
        if let Some(v) = self.max_grid_evals {
            s.max_grid_evals = v;
        }
        if let Some(v) = self.refine_max_iter {
            s.refine_max_iter = v;
        }
        if let Some(v) = self.separable_max_iter {
            s.separable_max_iter = v;
        }
        s.separable_terms = self.separable_terms.or(s.separable_terms);
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// JSON state file.
    #[arg(long, conflicts_with = "family", required_unless_present = "family")]
    pub file: Option<PathBuf>,
    /// Family string such as `bell:phi+` or `werner:0.5`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub measures: MeasureArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Family string with one `{}` placeholder, e.g. `werner:{}`.
    #[arg(long)]
    pub template: String,
    #[arg(long)]
    pub start: f64,
    #[arg(long)]
    pub stop: f64,
    #[arg(long)]
    pub steps: usize,
    /// CSV output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub measures: MeasureArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Directory receiving one JSON file per failing state.
    #[arg(long, default_value = "qcorr-failures")]
    pub failures_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_measures(list: &str) -> Result<Vec<Measure>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(Measure::ALL);
        } else {
            out.push(item.parse()?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no measures requested".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// `A`, `AB`, `b` or `0,2`.
pub fn parse_measured(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(CliError::Usage("empty measured set".into()));
    }
    if s.chars().all(|c| c.is_ascii_alphabetic()) {
        return Ok(s.chars().map(|c| (c.to_ascii_uppercase() as u8 - b'A') as usize).collect());
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad subsystem index '{x}' in measured set")))
        })
        .collect()
}

fn request(args: &MeasureArgs) -> Result<MeasureRequest> {
    Ok(MeasureRequest {
        targets: parse_measures(&args.measures)?,
        measured: parse_measured(&args.measured)?,
        settings: args.settings.apply()?,
        trials: args.trials,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn csv_text(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
}

fn incomplete(report: &CorrelationReport) -> Option<String> {
    (!report.failures.is_empty()).then(|| report.failures.keys().map(|m| m.to_string()).collect::<Vec<_>>().join(", "))
}

pub fn compute(args: &ComputeArgs) -> Result<()> {
    let (rho, source): (DensityMatrix, Source) = match (&args.file, &args.family) {
        (Some(path), _) => (
            load_state(path)?,
            Source {
                family: "file".into(),
                params: path.display().to_string(),
            },
        ),
        (None, Some(family)) => {
            let f = parse_family(family)?;
            (
                f.instantiate()?,
                Source {
                    family: f.name,
                    params: f.params,
                },
            )
        }
        (None, None) => return Err(CliError::Usage("either --file or --family is required".into())),
    };
    let req = request(&args.measures)?;
    let report = analyze(&rho, &req)?;
    let text = match args.format {
        Format::Json => {
            serde_json::to_string_pretty(&report_json(&report, &rho, &source, &req.settings)).expect("JSON values serialize")
                + "\n"
        }
        Format::Csv => csv_text(&[csv_row(&report, &source)])?,
    };
    emit(args.out.as_deref(), &text)?;
    match incomplete(&report) {
        Some(which) => Err(CliError::Incomplete(which)),
        None => Ok(()),
    }
}

/// `steps` evenly spaced points from `start` to `stop` inclusive.
pub fn grid(start: f64, stop: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Usage("need a finite range and at least one step".into()));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    Ok((0..steps)
        .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
        .collect())
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let req = request(&args.measures)?;
    // Validate every point before computing anything.
    let mut points = Vec::new();
    for value in grid(args.start, args.stop, args.steps)? {
        let parsed = parse_family(&fill_template(&args.template, value)?)?;
        let rho = parsed.instantiate()?;
        points.push((value, parsed, rho));
    }
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (value, parsed, rho) in points {
        let report = analyze(&rho, &req)?;
        if incomplete(&report).is_some() {
            failed.push(format_parameter(value));
        }
        rows.push(csv_row(
            &report,
            &Source {
                family: parsed.name,
                params: parsed.params,
            },
        ));
    }
    emit(args.out.as_deref(), &csv_text(&rows)?)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Incomplete(format!("points {}", failed.join(", "))))
    }
}

pub fn verify(args: &VerifyArgs) -> Result<()> {
    let summary = run_suite(args.suite, args.seed, args.trials, &args.failures_dir)?;
    for line in &summary.lines {
        println!("{line}");
    }
    println!("{}: {} of {} checks passed", args.suite.name(), summary.total - summary.failed, summary.total);
    if summary.failed == 0 {
        Ok(())
    } else {
        Err(CliError::VerifyFailed {
            failed: summary.failed,
            total: summary.total,
        })
    }
}

pub fn export(args: &ExportArgs) -> Result<()> {
    let rho = parse_family(&args.family)?.instantiate()?;
    save_state(&args.out, &rho)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Compute(a) => compute(a),
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
        Command::Export(a) => export(a),
    }
}
