//! Command-line front end. Reports go to stdout as JSON, diagnostics to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::pipeline::{self, PipelineError, PipelineOptions, EXIT_INVALID_INPUT, EXIT_OK};
use crate::protocol::{self, Protocol};
use crate::simulator;
use crate::states;

#[derive(Debug, Parser)]
#[command(
    name = "locc",
    version,
    about = "Local discrimination of orthonormal bipartite pure states"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Residual tolerance for zero vectors.
    #[arg(long, global = true, default_value_t = crate::jnr::DEFAULT_ZERO_TOL)]
    pub tol: f64,
    /// Orthonormality tolerance for input states.
    #[arg(long, global = true, default_value_t = states::DEFAULT_ORTHO_TOL)]
    pub ortho_tol: f64,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Gram-Schmidt the input states instead of rejecting them.
    #[arg(long, global = true)]
    pub reorthonormalize: bool,
    /// Search for a basis even when dim K >= 4.
    #[arg(long, global = true)]
    pub best_effort: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report dim K, the applicable regime and the success bounds.
    Analyze { states: PathBuf },
    /// Compile a protocol file and print a verification summary.
    Compile {
        states: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a compiled protocol against one state of the family.
    Simulate {
        protocol: PathBuf,
        states: PathBuf,
        /// Label of the true state (defaults to the first).
        #[arg(long)]
        true_state: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Schmidt profile and the success lower bound for `np` error slots.
    Bound {
        states: PathBuf,
        /// Error slots (defaults to the count implied by dim K).
        #[arg(long)]
        np: Option<usize>,
    },
    /// Sample the joint numerical range of the K basis as CSV.
    JnrSample {
        states: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Output file (stdout when absent).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

impl GlobalArgs {
    fn options(&self) -> PipelineOptions {
        PipelineOptions {
            zero_tol: self.tol,
            ortho_tol: self.ortho_tol,
            seed: self.seed,
            reorthonormalize: self.reorthonormalize,
            best_effort: self.best_effort,
            ..PipelineOptions::default()
        }
    }
}

#[derive(Serialize)]
struct BoundOutput {
    n: usize,
    n_p: usize,
    schmidt_profile: Vec<Vec<f64>>,
    per_state: Vec<f64>,
    bound: f64,
}

fn io_error(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), PipelineError> {
    let opts = cli.global.options();
    let out_err = |e| io_error(Path::new("<stdout>"), e);
    match &cli.command {
        Command::Analyze { states } => {
            let family = pipeline::load_family_file(states, &opts)?;
            let report = pipeline::analyze(&family, &opts)?;
            writeln!(stdout, "{}", json(&report)).map_err(out_err)?;
        }
        Command::Compile { states, out } => {
            let family = pipeline::load_family_file(states, &opts)?;
            let (compiled, summary) = pipeline::compile(&family, &opts)?;
            std::fs::write(out, compiled.to_json() + "\n").map_err(|e| io_error(out, e))?;
            writeln!(stdout, "{}", json(&summary)).map_err(out_err)?;
        }
        Command::Simulate {
            protocol,
            states,
            true_state,
            trials,
        } => {
            let text = std::fs::read_to_string(protocol).map_err(|e| io_error(protocol, e))?;
            let compiled = Protocol::from_json(&text)?;
            let family = pipeline::load_family_file(states, &opts)?;
            let index = match true_state {
                Some(label) => simulator::resolve_label(&family, label)?,
                None => 0,
            };
            let stats = simulator::simulate(&compiled, &family, index, *trials, opts.seed)?;
            writeln!(stdout, "{}", json(&stats)).map_err(out_err)?;
        }
        Command::Bound { states, np } => {
            let family = pipeline::load_family_file(states, &opts)?;
            let n = pipeline::kspace_of(&family, &opts).dim();
            let n_p =
                match np {
                    Some(p) => *p,
                    None => crate::basisbuilder::error_slots_for(n, family.dim_b()).ok_or_else(
                        || PipelineError::Unsupported(format!("dim K = {n}: pass --np explicitly")),
                    )?,
                };
            let profile = states::schmidt_profile(&family)?;
            let bound = protocol::discrimination_bound(&profile, n_p)?;
            let output = BoundOutput {
                n,
                n_p,
                schmidt_profile: profile.per_state,
                per_state: bound.per_state,
                bound: bound.bound,
            };
            writeln!(stdout, "{}", json(&output)).map_err(out_err)?;
        }
        Command::JnrSample {
            states,
            samples,
            out,
        } => {
            let family = pipeline::load_family_file(states, &opts)?;
            let (n, points) = pipeline::jnr_sample(&family, *samples, &opts)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
                    crate::jnr::write_csv(&points, n, std::io::BufWriter::new(file))
                        .map_err(|e| io_error(path, e))?;
                }
                None => crate::jnr::write_csv(&points, n, &mut *stdout).map_err(out_err)?,
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() {
                EXIT_INVALID_INPUT
            } else {
                EXIT_OK
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if let PipelineError::Build(crate::basisbuilder::BuildError::SearchFailed {
                partial,
                ..
            }) = &e
            {
                let _ = writeln!(
                    stderr,
                    "{} basis vectors were found before the failure",
                    partial.len()
                );
            }
            e.exit_code()
        }
    }
}
