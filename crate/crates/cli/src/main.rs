//! `multiport` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 data or parse error, 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use multiport::dipmodel::{self, SpectralSetup, TraceSynthesis};
use multiport::interference::{self, output_distribution};
use multiport::io::{self, MatrixFile};
use multiport::matrix::{ideal_2x2, ideal_4x4};
use multiport::reconstruct::{self, ReconstructionMode, ReconstructionOptions};
use multiport::{Error, ModePair, PhotonConfiguration, Statistics};

#[derive(Debug, Parser)]
#[command(
    name = "multiport",
    version,
    about = "Multiphoton interference in linear-optical multiports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write an ideal splitter matrix.
    Ideal(IdealArgs),
    /// Two-photon visibility matrix of a device.
    Visibility(VisibilityArgs),
    /// Exact output distribution for a multiphoton input.
    Distribution(DistributionArgs),
    /// Synthesize a dip/peak trace, or fit one with --fit.
    Dip(DipArgs),
    /// Reconstruct a transition matrix from magnitudes and visibilities.
    Reconstruct(ReconstructArgs),
    /// Residual table of a reconstruction result against measured visibilities.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum Kind {
    #[value(name = "2x2")]
    #[serde(rename = "2x2")]
    TwoByTwo,
    #[value(name = "4x4")]
    #[serde(rename = "4x4")]
    FourByFour,
}

#[derive(Debug, Args)]
struct IdealArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Internal phase in radians; required for 4x4.
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VisibilityArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = interference::DEFAULT_C_MIN)]
    c_min: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum StatsArg {
    Quantum,
    Classical,
}

#[derive(Debug, Args)]
struct DistributionArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Input occupations, comma separated (e.g. 1,1,0,0).
    #[arg(long, value_delimiter = ',', required = true)]
    input: Vec<usize>,
    #[arg(long, value_enum, default_value_t = StatsArg::Quantum)]
    mode: StatsArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DipArgs {
    /// Fit this trace CSV instead of synthesizing.
    #[arg(long, conflicts_with_all = ["matrix", "inputs", "outputs", "seed"])]
    fit: Option<PathBuf>,
    /// Subtract the accidentals column before fitting.
    #[arg(long, requires = "fit")]
    correct_accidentals: bool,

    #[arg(long, required_unless_present = "fit")]
    matrix: Option<PathBuf>,
    /// Input mode pair, e.g. 1,2.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2])]
    inputs: Vec<usize>,
    /// Output mode pair, e.g. 1,2.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2])]
    outputs: Vec<usize>,
    #[arg(long, default_value_t = 804.0)]
    center_nm: f64,
    /// Filter FWHM bandwidths for the two photons, nm.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 2.0])]
    filters: Vec<f64>,
    /// Time-of-flight jitter standard deviation, femtoseconds.
    #[arg(long, default_value_t = 0.0)]
    jitter_fs: f64,
    #[arg(long, default_value_t = 1.0)]
    source_visibility: f64,
    /// Counts per unit coincidence probability.
    #[arg(long, default_value_t = 1000.0)]
    scale: f64,
    /// Linear drift, counts per um.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    slope: f64,
    /// Mean accidental counts per sample.
    #[arg(long, default_value_t = 0.0)]
    accidentals: f64,
    /// Delays span [-half_span, half_span] um.
    #[arg(long, default_value_t = 1500.0)]
    half_span_um: f64,
    #[arg(long, default_value_t = 121)]
    points: usize,
    /// Poisson noise seed; expected counts when absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    FixedMagnitudes,
    JointRefinement,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long)]
    visibilities: PathBuf,
    #[arg(long)]
    magnitudes: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::FixedMagnitudes)]
    mode: ModeArg,
    #[arg(long, default_value_t = 1.0)]
    penalty_weight: f64,
    #[arg(long, default_value_t = 20)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-12)]
    convergence_tol: f64,
    #[arg(long, default_value_t = interference::DEFAULT_C_MIN)]
    c_min: f64,
    /// Worker threads for the starts; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with code 3 unless the objective is below this value.
    #[arg(long)]
    accept_threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Result JSON written by `reconstruct`.
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    visibilities: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::FitFailure { .. } => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match cli.command {
        Command::Ideal(a) => cmd_ideal(a),
        Command::Visibility(a) => cmd_visibility(a),
        Command::Distribution(a) => cmd_distribution(a),
        Command::Dip(a) => cmd_dip(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Report(a) => cmd_report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn with_path(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let f = Failure::from(e);
        Failure {
            message: format!("{}: {}", path.display(), f.message),
            ..f
        }
    }
}

fn emit(out: Option<&Path>, payload: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, payload).map_err(|e| Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        }),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

/// Resolved configuration, echoed to stderr on every run.
fn echo_config(command: &str, config: &serde_json::Value) {
    eprintln!("{}", json!({ "command": command, "config": config }));
}

fn pair(v: &[usize], what: &str) -> CliResult<ModePair> {
    if v.len() != 2 {
        return Err(Failure::usage(format!("--{what} takes two comma-separated labels")));
    }
    ModePair::new(v[0], v[1]).map_err(|e| Failure::usage(format!("--{what}: {e}")))
}

fn cmd_ideal(a: IdealArgs) -> CliResult<()> {
    let m = match (a.kind, a.theta) {
        (Kind::TwoByTwo, None) => ideal_2x2(),
        (Kind::TwoByTwo, Some(_)) => return Err(Failure::usage("--theta only applies to --kind 4x4")),
        (Kind::FourByFour, Some(theta)) => ideal_4x4(theta)?,
        (Kind::FourByFour, None) => return Err(Failure::usage("--kind 4x4 requires --theta")),
    };
    echo_config("ideal", &json!({ "kind": a.kind, "theta": a.theta }));
    emit(a.out.as_deref(), &io::matrix_to_json(&m))
}

fn cmd_visibility(a: VisibilityArgs) -> CliResult<()> {
    let m = io::matrix_from_json(&read(&a.matrix)?).map_err(with_path(&a.matrix))?;
    echo_config("visibility", &json!({ "matrix": a.matrix, "c_min": a.c_min }));
    let v = interference::visibility_matrix_with_threshold(&m, a.c_min)?;
    emit(a.out.as_deref(), &io::visibility_to_json(&v))
}

fn cmd_distribution(a: DistributionArgs) -> CliResult<()> {
    let m = io::matrix_from_json(&read(&a.matrix)?).map_err(with_path(&a.matrix))?;
    let input = PhotonConfiguration::new(a.input.clone()).map_err(|e| Failure::usage(format!("--input: {e}")))?;
    let stats = match a.mode {
        StatsArg::Quantum => Statistics::Quantum,
        StatsArg::Classical => Statistics::Classical,
    };
    echo_config(
        "distribution",
        &json!({ "matrix": a.matrix, "input": a.input, "mode": a.mode }),
    );
    let dist = output_distribution(&m, &input, stats)?;
    let entries: Vec<_> = dist
        .iter()
        .map(|(cfg, p)| json!({ "output": cfg, "probability": p }))
        .collect();
    let payload = json!({ "input": input, "mode": stats, "distribution": entries });
    emit(a.out.as_deref(), &io::to_pretty(&payload))
}

fn cmd_dip(a: DipArgs) -> CliResult<()> {
    if let Some(path) = &a.fit {
        let text = read(path)?;
        let mut trace = io::read_trace_csv(text.as_bytes()).map_err(with_path(path))?;
        if a.correct_accidentals {
            trace = dipmodel::correct_accidentals(&trace)?;
        }
        let config = json!({ "fit": path, "correct_accidentals": a.correct_accidentals });
        echo_config("dip", &config);
        let fit = dipmodel::fit_dip(&trace)?;
        let payload = json!({ "fit": fit, "samples": trace.len(), "config": config });
        return emit(a.out.as_deref(), &io::to_pretty(&payload));
    }
    let matrix_path = a
        .matrix
        .as_ref()
        .ok_or_else(|| Failure::usage("--matrix is required"))?;
    let m = io::matrix_from_json(&read(matrix_path)?).map_err(with_path(matrix_path))?;
    let inputs = pair(&a.inputs, "inputs")?;
    let outputs = pair(&a.outputs, "outputs")?;
    if a.points < 2 {
        return Err(Failure::usage("--points must be at least 2"));
    }
    if a.filters.len() != 2 {
        return Err(Failure::usage("--filters takes two comma-separated bandwidths"));
    }
    let setup = SpectralSetup::from_nm(a.center_nm, a.filters[0], a.filters[1])?;
    let params = TraceSynthesis {
        setup,
        jitter_sigma_s: a.jitter_fs * 1e-15,
        source_visibility: a.source_visibility,
        scale: a.scale,
        slope: a.slope,
        accidental_rate: a.accidentals,
        noise_seed: a.seed,
    };
    echo_config(
        "dip",
        &json!({
            "matrix": matrix_path,
            "inputs": inputs,
            "outputs": outputs,
            "synthesis": params,
            "half_span_um": a.half_span_um,
            "points": a.points,
            "envelope_fwhm_um": dipmodel::dip_envelope_fwhm(&setup),
        }),
    );
    let delays = dipmodel::delay_grid(a.half_span_um, a.points);
    let trace = dipmodel::synthesize_trace(&m, inputs, outputs, &params, &delays)?;
    emit(a.out.as_deref(), &io::trace_to_csv(&trace))
}

fn cmd_reconstruct(a: ReconstructArgs) -> CliResult<()> {
    if a.starts == 0 {
        return Err(Failure::usage("--starts must be at least 1"));
    }
    if a.threads == Some(0) {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    let measured = io::visibility_from_json(&read(&a.visibilities)?).map_err(with_path(&a.visibilities))?;
    let magnitudes = io::magnitudes_from_json(&read(&a.magnitudes)?).map_err(with_path(&a.magnitudes))?;
    if measured.modes() != magnitudes.dims() {
        let (vi, vo) = measured.modes();
        let (mi, mo) = magnitudes.dims();
        return Err(Failure::usage(format!(
            "visibilities describe a {vi}x{vo} device but magnitudes are {mi}x{mo}"
        )));
    }
    let options = ReconstructionOptions {
        mode: match a.mode {
            ModeArg::FixedMagnitudes => ReconstructionMode::FixedMagnitudes,
            ModeArg::JointRefinement => ReconstructionMode::JointRefinement,
        },
        magnitude_penalty_weight: a.penalty_weight,
        starts: a.starts,
        seed: a.seed,
        max_iterations: a.max_iterations,
        convergence_tol: a.convergence_tol,
        c_min: a.c_min,
        threads: a.threads,
    };
    options.validate().map_err(|e| Failure::usage(e.to_string()))?;
    echo_config(
        "reconstruct",
        &json!({
            "visibilities": a.visibilities,
            "magnitudes": a.magnitudes,
            "options": options,
            "accept_threshold": a.accept_threshold,
        }),
    );
    let result = reconstruct::reconstruct(&measured, &magnitudes, &options)?;
    let table = reconstruct::residual_report(&result, &measured)?;
    let alternatives: Vec<_> = result
        .alternatives
        .iter()
        .map(|alt| json!({ "start": alt.start, "objective": alt.objective, "matrix": MatrixFile::from(&alt.matrix) }))
        .collect();
    let payload = json!({
        "matrix": MatrixFile::from(&result.matrix),
        "objective": result.objective,
        "best_start": result.best_start,
        "iterations_used": result.iterations_used,
        "per_start_objectives": result.per_start_objectives,
        "underdetermined": result.underdetermined,
        "excluded_cells": result.excluded_cells,
        "residuals": table,
        "alternatives": alternatives,
        "options": options,
    });
    emit(a.out.as_deref(), &io::to_pretty(&payload))?;
    match a.accept_threshold {
        Some(limit) if result.objective.is_nan() || result.objective >= limit => Err(Failure::numerical(format!(
            "objective {} is not below --accept-threshold {limit}",
            result.objective
        ))),
        _ => Ok(()),
    }
}

fn cmd_report(a: ReportArgs) -> CliResult<()> {
    let text = read(&a.result)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(Error::from)
        .map_err(with_path(&a.result))?;
    let matrix: MatrixFile = serde_json::from_value(value["matrix"].clone())
        .map_err(|e| Failure::from(Error::Parse(format!("{}: matrix: {e}", a.result.display()))))?;
    let matrix = multiport::TransitionMatrix::try_from(matrix).map_err(with_path(&a.result))?;
    let c_min = value["options"]["c_min"]
        .as_f64()
        .unwrap_or(interference::DEFAULT_C_MIN);
    let measured = io::visibility_from_json(&read(&a.visibilities)?).map_err(with_path(&a.visibilities))?;
    echo_config(
        "report",
        &json!({ "result": a.result, "visibilities": a.visibilities, "c_min": c_min }),
    );
    let rows = reconstruct::residual_table(&matrix, &measured, c_min).map_err(|e| match e {
        Error::Shape(msg) => Failure::usage(msg),
        other => other.into(),
    })?;
    let payload = match a.format {
        ReportFormat::Json => io::to_pretty(&rows),
        ReportFormat::Table => {
            let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:+.12}"));
            let mut s = format!(
                "{:<8} {:<8} {:>16} {:>16} {:>16} included\n",
                "inputs", "outputs", "measured", "reconstructed", "residual"
            );
            for r in &rows {
                s.push_str(&format!(
                    "{:<8} {:<8} {:>16} {:>16} {:>16} {}\n",
                    r.input_pair.to_string(),
                    r.output_pair.to_string(),
                    fmt(r.measured),
                    fmt(r.reconstructed),
                    fmt(r.residual),
                    r.included
                ));
            }
            s
        }
    };
    emit(a.out.as_deref(), &payload)
}
