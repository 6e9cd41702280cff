//! `framelab`: verify frames, reproduce the claims table, write scan data.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 on
//! usage or configuration errors.

mod render;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use framelab_core::report::to_json;
use framelab_core::suite::{residual_sample_counts, scan_angles, scan_residuals};
use framelab_core::{claims_table, verify, FrameFunction, LabError, SuiteConfig};

#[derive(Debug, Parser)]
#[command(name = "framelab", version, about = "Frame-function checks for qubits and qutrits")]
struct Cli {
    /// Monte Carlo samples per check.
    #[arg(long, global = true, env = "FRAMELAB_SAMPLES", default_value_t = 100_000)]
    samples: usize,
    #[arg(long, global = true, env = "FRAMELAB_SEED", default_value_t = 42)]
    seed: u64,
    /// Tolerance for exact identities such as the complement rule.
    #[arg(long, global = true, env = "FRAMELAB_TOL_IDENTITY", default_value_t = 1e-12)]
    tol_identity: f64,
    /// Residual threshold separating linear from nonlinear frames.
    #[arg(long, global = true, env = "FRAMELAB_TOL_VERDICT", default_value_t = 1e-3)]
    tol_verdict: f64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true, env = "FRAMELAB_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "FRAMELAB_FORMAT", value_enum, default_value_t = Format::Tree)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Pretty-printed JSON.
    Tree,
    /// Aligned plain text.
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every check on one frame, e.g. `born:0,0,0.6` or `odd:0,0,1:cubic`.
    Verify { frame: String },
    /// Reproduce each claim as a pass/fail row.
    Claims,
    /// Write plot data as comma-separated text.
    Scan {
        frame: String,
        #[arg(long, value_enum, default_value_t = ScanKind::Angle)]
        kind: ScanKind,
        /// Number of angles from 0 to π.
        #[arg(long, default_value_t = 181)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScanKind {
    /// Probability against polar angle.
    Angle,
    /// Fit residual against sample count.
    Residual,
}

/// A usage, configuration or output error; always exit status 2.
struct Failure(String);

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure(e.to_string())
    }
}

fn parse_frame(spec: &str) -> Result<FrameFunction, Failure> {
    spec.parse().map_err(|e: LabError| Failure(format!("bad frame spec '{spec}': {e}")))
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), Failure> {
    let write = |w: &mut dyn Write| -> io::Result<()> {
        w.write_all(body.as_bytes())?;
        w.flush()
    };
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))?;
            write(&mut BufWriter::new(file)).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
        }
        None => write(&mut io::stdout().lock()).map_err(|e| Failure(e.to_string())),
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = to_json(value);
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let config = SuiteConfig {
        samples: cli.samples,
        seed: cli.seed,
        identity_tol: cli.tol_identity,
        verdict_tol: cli.tol_verdict,
    };
    config.validate()?;
    match &cli.command {
        Command::Verify { frame } => {
            let frame = parse_frame(frame)?;
            let report = verify(&frame, &config)?;
            let body = match cli.format {
                Format::Tree => json(&report),
                Format::Table => render::verification(&report),
            };
            emit(&cli.out, &body)?;
            Ok(report.pass)
        }
        Command::Claims => {
            let table = claims_table(&config)?;
            let body = match cli.format {
                Format::Tree => json(&table),
                Format::Table => render::claims(&table),
            };
            emit(&cli.out, &body)?;
            Ok(table.pass)
        }
        Command::Scan { frame, kind, points } => {
            let frame = parse_frame(frame)?;
            let body = match kind {
                ScanKind::Angle => render::angle_csv(&scan_angles(&frame, *points)?),
                ScanKind::Residual => {
                    let counts = residual_sample_counts(config.samples);
                    render::residual_csv(&scan_residuals(&frame, &counts, config.seed)?)
                }
            };
            emit(&cli.out, &body)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let outcome = run(&cli);
    eprintln!("elapsed {:.2} s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
