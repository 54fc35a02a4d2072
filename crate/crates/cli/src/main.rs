//! Command-line front end for the entanglement-distillation simulator:
//! `verify` runs the self-check suite, `figure` reproduces the headline data
//! sets, `scan` sweeps one parameter of the heralded circuit, `gaussify`
//! traces the iterated interference map, and `multicopy` runs the M-copy
//! interferometer. Artifacts are deterministic CSV (or JSON) with
//! provenance in `#` comments; `--plot` adds a minimal SVG.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 herald
//! impossible or iteration divergence.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cvdistill::scan::{ScanAxis, evaluate_grid, linspace};
use cvdistill::verify::{self, VerifyConfig};
use cvdistill::{ExecMode, Error, State, analytics, figures, measures, schemes, state_prep};

use config::{ParamArgs, RangeSpec, Resolved};
use output::Table;

#[derive(Debug, Parser)]
#[command(name = "cvdistill", version, about = "Continuous-variable entanglement distillation: heralded circuits, closed forms, and self-checks")]
struct Cli {
    /// key=value parameter file ('#' comments); explicit flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SliceAxis {
    Eta,
    Lambda,
}

#[derive(Debug, clap::Args)]
struct OutputArgs {
    /// Write the artifact here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact encoding
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write a minimal SVG line plot next to --out
    #[arg(long)]
    plot: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the self-check suite and print a pass/fail table
    Verify {
        /// Run only checks whose name contains this substring
        #[arg(long)]
        only: Option<String>,
    },
    /// Emit the data behind one of the headline figures
    Figure {
        /// One of: fig3, fig6, fig7
        name: String,
        /// Grid for the swept axis as start:stop:count
        #[arg(long, allow_hyphen_values = true)]
        range: Option<RangeSpec>,
        /// Which scalar fig6 sweeps
        #[arg(long, value_enum, default_value_t = SliceAxis::Eta)]
        axis: SliceAxis,
        #[command(flatten)]
        io: OutputArgs,
    },
    /// Sweep one parameter of the heralded two-copy (or M-copy) circuit
    Scan {
        /// Swept axis: lambda, T, kappa2, eta, or M
        #[arg(long)]
        axis: String,
        /// Grid as start:stop:count
        #[arg(long, allow_hyphen_values = true)]
        range: RangeSpec,
        #[command(flatten)]
        io: OutputArgs,
    },
    /// Iterate the interference map from the photon-subtracted input
    Gaussify {
        /// Iteration budget (0 echoes the input metrics)
        #[arg(long, default_value_t = 12)]
        iters: usize,
        #[command(flatten)]
        io: OutputArgs,
    },
    /// Run the M-copy interferometer once and report its figures of merit
    Multicopy {
        #[command(flatten)]
        io: OutputArgs,
    },
}

fn main() -> ExitCode {
    if let Ok(raw) = std::env::var("CVDISTILL_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) => cvdistill::configure_threads(n),
            Err(_) => eprintln!("warning: ignoring unparsable CVDISTILL_THREADS={raw:?}"),
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::HeraldImpossible { .. } => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<String> for Failure {
    fn from(message: String) -> Self {
        Failure::usage(message)
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let file_defaults = match &cli.config {
        Some(path) => config::parse_config(path)?,
        None => Default::default(),
    };
    let resolved = config::resolve(&cli.params, &file_defaults)?;
    match cli.command {
        Command::Verify { only } => cmd_verify(&resolved, only.as_deref()),
        Command::Figure { name, range, axis, io } => {
            cmd_figure(&resolved, &name, range, axis, &io)
        }
        Command::Scan { axis, range, io } => cmd_scan(&resolved, &axis, &range, &io),
        Command::Gaussify { iters, io } => cmd_gaussify(&resolved, iters, &io),
        Command::Multicopy { io } => cmd_multicopy(&resolved, &io),
    }
}

/// Append `(key, value)` unless a resolved flag already put `key` there.
fn push_unique(rows: &mut Vec<(String, String)>, key: &str, value: String) {
    if !rows.iter().any(|(k, _)| k == key) {
        rows.push((key.to_string(), value));
    }
}

fn cmd_verify(resolved: &Resolved, only: Option<&str>) -> Result<u8, Failure> {
    let cfg = VerifyConfig { tol: resolved.tol, cutoff: resolved.cutoff };
    let reports = verify::run_suite(&cfg, only)?;
    print!("{}", verify::format_reports(&reports));
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
}

fn cmd_figure(
    resolved: &Resolved,
    name: &str,
    range: Option<RangeSpec>,
    axis: SliceAxis,
    io: &OutputArgs,
) -> Result<u8, Failure> {
    let grid = match &range {
        Some(r) => Some(r.values()?),
        None => None,
    };
    let mut provenance = vec![("figure".to_string(), name.to_string())];
    let data = match name {
        "fig3" => {
            let grid = grid.unwrap_or_else(figures::default_kappa2_grid);
            provenance.extend([
                ("lambda".into(), resolved.lambda.to_string()),
                ("T".into(), resolved.transmittance.to_string()),
            ]);
            figures::fig3_data(resolved.lambda, resolved.transmittance, &grid)?
        }
        "fig6" => {
            let (fig_axis, grid) = match axis {
                SliceAxis::Eta => (
                    figures::Fig6Axis::Eta,
                    grid.map_or_else(|| linspace(0.5, 1.0, 51), Ok)?,
                ),
                SliceAxis::Lambda => (
                    figures::Fig6Axis::Lambda,
                    grid.map_or_else(|| linspace(0.1, 0.6, 51), Ok)?,
                ),
            };
            let base = resolved.protocol()?;
            provenance.extend([
                ("lambda".into(), resolved.lambda.to_string()),
                ("T".into(), resolved.transmittance.to_string()),
                ("eta".into(), resolved.eta.to_string()),
            ]);
            figures::fig6_data(&base, fig_axis, &grid)?
        }
        "fig7" => {
            let grid = grid.map_or_else(|| linspace(-0.5, 3.0, 15), Ok)?;
            let cutoff = resolved.cutoff_or(10);
            provenance.extend([
                ("lambda".into(), resolved.lambda.to_string()),
                ("T".into(), resolved.transmittance.to_string()),
                ("eta".into(), resolved.eta.to_string()),
                ("cutoff".into(), cutoff.to_string()),
            ]);
            figures::fig7_data(
                resolved.lambda,
                resolved.eta,
                resolved.transmittance,
                &grid,
                cutoff,
                ExecMode::Parallel,
            )?
        }
        other => {
            return Err(Failure::usage(format!(
                "unknown figure {other:?}; expected fig3, fig6, or fig7"
            )));
        }
    };
    let table = Table {
        provenance,
        columns: data.columns.clone(),
        rows: data.rows.clone(),
        constants: data.constants.clone(),
    };
    emit(&table, io, &format!("{name} data"))
}

fn cmd_scan(
    resolved: &Resolved,
    axis: &str,
    range: &RangeSpec,
    io: &OutputArgs,
) -> Result<u8, Failure> {
    let axis = ScanAxis::parse(axis)?;
    let base = resolved.protocol()?;
    let cutoff = resolved.cutoff_or(base.default_cutoff());
    let grid = range.values()?;
    let result = evaluate_grid(&base, axis, &grid, cutoff, ExecMode::Parallel)?;
    let worst = result
        .records
        .iter()
        .map(|r| r.norm_deficit)
        .fold(0.0f64, f64::max);
    if worst > 1e-6 {
        eprintln!(
            "warning: truncation loss reached {worst:.3e}; rerun with a larger --cutoff \
             (currently {cutoff})"
        );
    }
    let mut provenance = vec![("scan-axis".to_string(), axis.name().to_string())];
    provenance.extend(resolved.provenance());
    push_unique(&mut provenance, "cutoff", cutoff.to_string());
    let table = Table {
        provenance,
        columns: [
            axis.name(),
            "variance",
            "variance_closed",
            "entropy",
            "fidelity",
            "omega",
            "probability",
            "norm_deficit",
        ]
        .map(String::from)
        .to_vec(),
        rows: result
            .records
            .iter()
            .map(|r| {
                vec![
                    r.value,
                    r.variance,
                    r.variance_closed,
                    r.entropy,
                    r.fidelity,
                    r.omega,
                    r.probability,
                    r.norm_deficit,
                ]
            })
            .collect(),
        constants: vec![],
    };
    emit(&table, io, &format!("{} scan", axis.name()))
}

fn cmd_gaussify(resolved: &Resolved, iters: usize, io: &OutputArgs) -> Result<u8, Failure> {
    let params = resolved.protocol()?;
    let cutoff = resolved.cutoff_or(params.default_cutoff());
    let tol = resolved.tol.unwrap_or(1e-8);
    let input = state_prep::make_input(&params, cutoff)?;
    let first = schemes::photon_subtract(&input, 0, params.transmittance, 1)?;
    let second = schemes::photon_subtract(&first.state, 1, params.transmittance, 1)?;
    let herald_probability = first.probability * second.probability;
    let initial = second.state;

    let columns = [
        "step",
        "probability",
        "step_distance",
        "gaussian_distance",
        "mean_photon",
        "norm_deficit",
    ]
    .map(String::from)
    .to_vec();
    let mut provenance = resolved.provenance();
    push_unique(&mut provenance, "cutoff", cutoff.to_string());
    push_unique(&mut provenance, "tol", tol.to_string());
    provenance.push(("iters".into(), iters.to_string()));

    let (rows, converged, diverged, last) = if iters == 0 {
        let residual = measures::gaussianity_residual(&initial)?;
        let mean = initial.mean_photon_total()?;
        let row = vec![0.0, herald_probability, f64::NAN, residual, mean, initial.deficit()];
        (vec![row], false, false, initial)
    } else {
        let run = schemes::iterate_gaussification(&initial, iters, tol)?;
        let rows = run
            .trace
            .iter()
            .map(|r| {
                vec![
                    r.step as f64,
                    r.probability,
                    r.step_distance,
                    r.gaussian_distance,
                    r.mean_photon,
                    r.norm_deficit,
                ]
            })
            .collect();
        (rows, run.converged, run.diverged, run.state)
    };
    provenance.push(("converged".into(), converged.to_string()));
    provenance.push(("diverged".into(), diverged.to_string()));

    let variance = measures::squeezing_variance(&last)?;
    let steps = rows.len();
    eprintln!(
        "gaussify: {} after {steps} step{}; squeezing variance {variance}",
        if diverged {
            "diverged"
        } else if converged {
            "converged"
        } else {
            "stopped at the iteration budget"
        },
        if steps == 1 { "" } else { "s" }
    );
    let table = Table { provenance, columns, rows, constants: vec![] };
    let code = emit(&table, io, "gaussification trace")?;
    Ok(if diverged { 3 } else { code })
}

fn cmd_multicopy(resolved: &Resolved, io: &OutputArgs) -> Result<u8, Failure> {
    let params = resolved.protocol()?;
    let cutoff = resolved.cutoff_or(params.default_cutoff());
    let run = schemes::run_multicopy(&params, params.copies, cutoff)?;
    let state = State::Pure(run.state.clone());
    let variance = measures::squeezing_variance(&state)?;
    let entropy = measures::entanglement_entropy(&state)?;
    // Closed form evaluated on a long series so the comparison column is
    // truncation-free.
    let closed = analytics::multicopy_amplitudes(
        params.lambda,
        params.transmittance,
        params.copies,
        3 * cutoff + 20,
    )?;
    let reference = State::Pure(state_prep::make_pair_state(&closed)?);
    let variance_closed = measures::squeezing_variance(&reference)?;
    let omega = params.lambda_distilled();
    let fidelity = if omega.abs() < 1.0 {
        measures::fidelity_with_tmsv(&state, omega)?
    } else {
        f64::NAN
    };
    let mut provenance = resolved.provenance();
    push_unique(&mut provenance, "cutoff", cutoff.to_string());
    let table = Table {
        provenance,
        columns: [
            "M",
            "probability",
            "variance",
            "variance_closed",
            "entropy",
            "fidelity",
            "norm_deficit",
        ]
        .map(String::from)
        .to_vec(),
        rows: vec![vec![
            params.copies as f64,
            run.probability,
            variance,
            variance_closed,
            entropy,
            fidelity,
            run.norm_deficit,
        ]],
        constants: vec![],
    };
    emit(&table, io, "multicopy run")
}

/// Render `table` in the requested format to stdout or `--out`, plus the
/// optional SVG sibling.
fn emit(table: &Table, io: &OutputArgs, title: &str) -> Result<u8, Failure> {
    let body = match io.format {
        Format::Csv => output::to_csv(table),
        Format::Json => output::to_json(table),
    };
    match &io.out {
        Some(path) => {
            std::fs::write(path, &body)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
            if io.plot {
                let svg = output::to_svg(table, title);
                let path = output::svg_path(path);
                std::fs::write(&path, svg).map_err(|e| {
                    Failure::usage(format!("cannot write {}: {e}", path.display()))
                })?;
            }
        }
        None => {
            if io.plot {
                return Err(Failure::usage("--plot needs --out to name the SVG file"));
            }
            print!("{body}");
        }
    }
    Ok(0)
}
