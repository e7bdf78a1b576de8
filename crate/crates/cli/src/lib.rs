//! `bsreduce` command line: reads JSON problem files and runs the reduce,
//! price and verify pipelines, writing JSON or CSV reports.

pub mod commands;
pub mod input;
pub mod report;

use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use bsreduce_core::reduction::ReductionError;
use bsreduce_core::verifiers::VerifyError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::{SimOptions, VerifyOptions};
pub use input::{parse_problems, InputOptions, Problem};
pub use report::{Meta, Report};

pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_PAYOFF: i32 = 3;
pub const EXIT_NO_CLOSED_FORM: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("payoff: {0}")]
    PayoffParse(String),
    #[error("no closed form: {0}")]
    NoClosedForm(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Schema(_) => EXIT_SCHEMA,
            CliError::PayoffParse(_) => EXIT_PAYOFF,
            CliError::NoClosedForm(_) => EXIT_NO_CLOSED_FORM,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::InvalidProblem(_)
            | ReductionError::NotSymmetric { .. }
            | ReductionError::NotPsd { .. } => CliError::Schema(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::InvalidInput(m) => CliError::Usage(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bsreduce",
    version,
    about = "Dimension reduction and pricing for multi-asset Black-Scholes problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Omit the `meta` block (version, time, threads) so reports are reproducible.
    #[arg(long, global = true)]
    pub no_meta: bool,
    /// Write one CSV row per problem instead of JSON.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Read `vols` and row-major `corr` instead of `cov`.
    #[arg(long, global = true)]
    pub from_vols: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the reduction plan.
    Reduce { file: PathBuf },
    /// Price with a closed form, finite differences or Monte Carlo.
    Price {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Closed)]
        method: Method,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Check that the reduced problem reproduces the Monte Carlo price of the original.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 3.0)]
        tolerance_sigmas: f64,
        /// Comma-separated exponents replacing those of the first product step.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        force_alpha: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Closed,
    Fd,
    Mc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Closed => "closed",
            Method::Fd => "fd",
            Method::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 200_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Time steps of the short-rate simulation.
    #[arg(long, default_value_t = 256)]
    pub steps: usize,
    /// Space nodes per axis, also used as the number of time steps.
    #[arg(long)]
    pub grid: Option<usize>,
}

impl From<&SimArgs> for SimOptions {
    fn from(a: &SimArgs) -> Self {
        Self {
            paths: a.paths,
            seed: a.seed,
            steps: a.steps,
            grid: a.grid,
        }
    }
}

/// Caps the worker pool at `BSREDUCE_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BSREDUCE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Usage(format!("BSREDUCE_THREADS={v} is not a positive integer"))
    })?;
    // a pool already built by an earlier call in the same process is kept
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn meta() -> Meta {
    Meta {
        version: env!("CARGO_PKG_VERSION"),
        unix_time: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        threads: rayon::current_num_threads(),
    }
}

/// Runs every problem of the file. Reports come back in file order.
pub fn run_reports(cli: &Cli) -> Result<(Vec<Report>, bool), CliError> {
    let file = match &cli.command {
        Command::Reduce { file } | Command::Price { file, .. } | Command::Verify { file, .. } => {
            file
        }
    };
    let text = std::fs::read_to_string(file)
        .map_err(|e| CliError::Schema(format!("{}: {e}", file.display())))?;
    let (problems, batch) = parse_problems(
        &text,
        InputOptions {
            from_vols: cli.from_vols,
        },
    )?;
    let mut reports = Vec::with_capacity(problems.len());
    for p in &problems {
        let mut report = match &cli.command {
            Command::Reduce { .. } => commands::reduce(p)?,
            Command::Price { method, sim, .. } => commands::price(p, *method, &sim.into())?,
            Command::Verify {
                sim,
                tolerance_sigmas,
                force_alpha,
                ..
            } => commands::verify(
                p,
                &VerifyOptions {
                    sim: sim.into(),
                    tolerance_sigmas: *tolerance_sigmas,
                    force_alpha: force_alpha.clone(),
                },
            )?,
        };
        report.set_meta((!cli.no_meta).then(meta));
        reports.push(report);
    }
    Ok((reports, batch))
}

/// Renders reports as pretty JSON (an array for batch files) or CSV.
pub fn render(reports: &[Report], batch: bool, csv: bool) -> Result<String, CliError> {
    let io = |e: &dyn std::fmt::Display| CliError::Numeric(format!("writing report: {e}"));
    if csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        if let Some(first) = reports.first() {
            w.write_record(first.csv_header()).map_err(|e| io(&e))?;
        }
        for (i, r) in reports.iter().enumerate() {
            w.write_record(r.csv_row(i)).map_err(|e| io(&e))?;
        }
        let bytes = w.into_inner().map_err(|e| io(&e))?;
        return String::from_utf8(bytes).map_err(|e| io(&e));
    }
    let mut s = if batch {
        serde_json::to_string_pretty(reports)
    } else {
        serde_json::to_string_pretty(&reports[0])
    }
    .map_err(|e| io(&e))?;
    s.push('\n');
    Ok(s)
}

/// Full command: returns the process exit code.
pub fn run(cli: &Cli, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let result = configure_threads()
        .and_then(|_| run_reports(cli))
        .and_then(|(reports, batch)| Ok((render(&reports, batch, cli.csv)?, reports)));
    match result {
        Ok((text, reports)) => {
            let _ = out.write_all(text.as_bytes());
            let failed = reports
                .iter()
                .any(|r| matches!(r, Report::Verify(v) if !v.passed()));
            if failed {
                EXIT_VERIFY_FAIL
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(err, "bsreduce: {e}");
            e.exit_code()
        }
    }
}
