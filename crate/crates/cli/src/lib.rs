//! Experiment runner around the `fairdiv` engine.
//!
//! Subcommands: `precompute` solves the offline market for a distribution,
//! `run` executes seeded trials and writes CSV and JSON-lines outputs,
//! `audit` re-checks a stored solution and `report` aggregates summaries.

pub mod audit;
pub mod config;
pub mod error;
pub mod experiment;
pub mod precompute;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fairdiv::io::InstanceFile;

pub use config::{ExperimentConfig, OutputPaths, PoCheck};
pub use error::CliError;
pub use experiment::{run_experiment, CheckpointRow, ExperimentResult, RunOptions, TrialResult};
pub use precompute::{precompute, SolutionFile};

#[derive(Parser, Debug)]
#[command(name = "fairdiv", version, about = "Online fair division experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the offline market for the config's distribution and write solution.json.
    Precompute(PrecomputeArgs),
    /// Run the seeded trials of an experiment.
    Run(RunArgs),
    /// Check a stored solution for KKT optimality and the CISEF conditions.
    Audit(AuditArgs),
    /// Aggregate summary CSVs per checkpoint.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Solve the offline market in exact rational arithmetic.
    #[arg(long)]
    pub rational: bool,
    /// Write detailed traces (CISEF steps, every arrival and assignment).
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug)]
pub struct PrecomputeArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// Overrides the config's seed.
    #[arg(long, env = "FAIRDIV_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for the trials.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long)]
    pub solution: PathBuf,
    /// Instance file `{"n", "types", "budgets"}`.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub instance: Option<PathBuf>,
    /// Experiment config whose adversary defines the distribution.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Summary CSV files written by `run`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let say = |out: &mut dyn Write, text: String| {
        writeln!(out, "{text}").map_err(|e| CliError::Input(e.to_string()))
    };
    match command {
        Command::Precompute(args) => {
            let config = ExperimentConfig::load(&args.common.config)?;
            config.validate()?;
            let result = precompute(&config, args.common.rational)?;
            let dir = &args.common.out_dir;
            let mut files = vec![(
                dir.join(&config.outputs.solution),
                serde_json::to_string_pretty(&result.file).expect("plain data serializes") + "\n",
            )];
            if args.common.trace {
                files.push((
                    dir.join(&config.outputs.cisef_trace),
                    experiment::trace_lines(&result.trace),
                ));
            }
            let written = experiment::write_all(dir, files)?;
            say(out, format!("cliques: {:?}", result.file.cliques))?;
            say(out, format!("budgets: {:?}", result.file.budgets()?))?;
            say(out, format!("indifference edges: {:?}", result.file.edges))?;
            say(out, format!("kkt: {}", result.kkt))?;
            for path in written {
                say(out, format!("wrote {}", path.display()))?;
            }
            Ok(())
        }
        Command::Run(args) => {
            let config = ExperimentConfig::load(&args.common.config)?;
            let opts = RunOptions {
                seed: args.seed,
                rational: args.common.rational,
                trace: args.common.trace,
                jobs: args.jobs,
            };
            let result = run_experiment(&config, &opts)?;
            let written = result.write(&args.common.out_dir)?;
            let rows: Vec<report::SummaryRow> = result
                .trials
                .iter()
                .flat_map(|tr| {
                    tr.rows.iter().map(move |r| report::SummaryRow {
                        trial: tr.trial,
                        t: r.t,
                        max_envy: r.max_envy,
                        peak_envy: r.peak_envy,
                        ef: r.ef,
                        ef1: r.ef1,
                        utilities: r.utilities.clone(),
                        po_verdict: r.po_verdict.clone(),
                    })
                })
                .collect();
            if let Some(last) = report::aggregate(&rows)?.last() {
                say(
                    out,
                    format!(
                        "{} trials, T = {}: mean max envy {}, P(EF) {}, P(EF1) {}",
                        last.runs, last.t, last.mean_max_envy, last.p_ef, last.p_ef1
                    ),
                )?;
            }
            for path in written {
                say(out, format!("wrote {}", path.display()))?;
            }
            Ok(())
        }
        Command::Audit(args) => {
            let file = SolutionFile::load(&args.solution)?;
            let instance = match (&args.instance, &args.config) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                    serde_json::from_str::<InstanceFile>(&text)
                        .map_err(|e| CliError::io(path, e))?
                }
                (None, Some(path)) => {
                    let config = ExperimentConfig::load(path)?;
                    InstanceFile::from_distribution(&config.adversary.distribution()?)
                }
                (None, None) => {
                    return Err(CliError::Config(
                        "audit needs --instance or --config".into(),
                    ))
                }
            };
            let report = audit::audit(&instance, &file, args.tol)?;
            say(
                out,
                serde_json::to_string_pretty(&report).expect("plain data serializes"),
            )?;
            if report.pass {
                Ok(())
            } else {
                Err(CliError::AuditFailed(format!(
                    "audit failed: {}",
                    report.cisef.violations.join("; ")
                )))
            }
        }
        Command::Report(args) => {
            let mut rows = Vec::new();
            for path in &args.inputs {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                rows.extend(report::parse_summary(&text, path)?);
            }
            let text = report::report_csv(&report::aggregate(&rows)?);
            match &args.out {
                Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
                None => out
                    .write_all(text.as_bytes())
                    .map_err(|e| CliError::Input(e.to_string())),
            }
        }
    }
}
