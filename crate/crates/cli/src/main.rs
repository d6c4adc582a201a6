//! `avcp`: run experiment configs and the invariant suites.
//!
//! Exit status: 0 when every check passes, 2 when any check fails, 1 on a
//! configuration or usage error.

mod config;
mod run;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use avcp_core::report::{summary_table, CheckRecord};
use avcp_core::suite::{verify_suite, DEFAULT_SEED, MODULES, NAMED_CHECKS};
use avcp_core::Execution;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{build, parse_config, BUILTIN_OPERATORS, CHECK_KINDS, CONFIG_SCHEMA};
use run::{Report, REPORT_SCHEMA};

#[derive(Parser)]
#[command(name = "avcp", version, about = "Arrangement experiments and operator-rule checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Parallel,
    Sequential,
}

#[derive(clap::Args)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, value_enum, default_value = "parallel")]
    exec: Backend,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its report.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo runs, overriding the config.
        #[arg(long)]
        runs: Option<usize>,
        /// Tolerance for every config check.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Run the invariant suites and print a summary table.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Only run this module's checks.
        #[arg(long)]
        filter: Option<String>,
        /// Also write the full report (to --out, or standard output).
        #[arg(long)]
        report: bool,
        #[command(flatten)]
        output: Output,
    },
    /// List builtin operators, check kinds, named checks and schema versions.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn execution(b: Backend) -> Execution {
    match b {
        Backend::Parallel => Execution::Parallel,
        Backend::Sequential => Execution::Sequential,
    }
}

fn dispatch(cmd: Command) -> Result<bool, String> {
    match cmd {
        Command::Run { config, seed, runs, tol, output } => {
            let text = fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let mut cfg = parse_config(&text).map_err(|e| format!("{}: {e}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(t) = tol {
                if !(t >= 0.0) {
                    return Err("--tol must be nonnegative".into());
                }
            }
            let exp = build(cfg).map_err(|e| format!("{}: {e}", config.display()))?;
            let report = run::run(&exp, execution(output.exec), tol).map_err(|e| format!("{}: {e}", config.display()))?;
            emit(&report, &output)?;
            eprint!("{}", summary_table(&report.checks));
            Ok(report.all_pass())
        }
        Command::Verify { seed, filter, report, output } => {
            if let Some(f) = &filter {
                if !MODULES.contains(&f.as_str()) {
                    return Err(format!("unknown module `{f}`; expected one of {}", MODULES.join(", ")));
                }
            }
            let exec = execution(output.exec);
            let recs = verify_suite(seed, filter.as_deref(), exec);
            let rep = Report::new(None, seed, exec, recs, Vec::new());
            let table = summary_table(&rep.checks);
            if report || output.out.is_some() {
                emit(&rep, &output)?;
                eprint!("{table}");
            } else {
                print!("{table}");
            }
            Ok(rep.all_pass())
        }
        Command::List => {
            print!("{}", catalog());
            Ok(true)
        }
    }
}

fn catalog() -> String {
    let mut s = format!("config schema: {CONFIG_SCHEMA}\nreport schema: {REPORT_SCHEMA}\n\nbuiltin operators:\n");
    for (n, d) in BUILTIN_OPERATORS {
        s.push_str(&format!("  {n:<26} {d}\n"));
    }
    s.push_str("\ncheck kinds:\n");
    for (n, d) in CHECK_KINDS {
        s.push_str(&format!("  {n:<26} {d}\n"));
    }
    s.push_str("\nnamed checks (kind = \"builtin\"):\n");
    for c in &NAMED_CHECKS {
        s.push_str(&format!("  {:<26} [{}] {}\n", c.name, c.module, c.description));
    }
    s.push_str(&format!("\nsuite modules: {}\n", MODULES.join(", ")));
    s
}

/// Flat CSV row; `notes` is always present so every row has the same fields.
#[derive(Serialize)]
struct CsvRow<'a> {
    module: &'a str,
    name: &'a str,
    lhs: f64,
    rhs: f64,
    abs_err: f64,
    tol: f64,
    pass: bool,
    notes: &'a str,
}

fn render(report: &Report, format: Format) -> Result<Vec<u8>, String> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(report).map_err(|e| e.to_string())?;
            v.push(b'\n');
            Ok(v)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &report.checks {
                let CheckRecord { module, name, lhs, rhs, abs_err, tol, pass, notes } = r;
                w.serialize(CsvRow { module, name, lhs: *lhs, rhs: *rhs, abs_err: *abs_err, tol: *tol, pass: *pass, notes })
                    .map_err(|e| e.to_string())?;
            }
            w.into_inner().map_err(|e| e.to_string())
        }
    }
}

fn emit(report: &Report, output: &Output) -> Result<(), String> {
    let bytes = render(report, output.format)?;
    match &output.out {
        Some(p) => write_file(p, &bytes),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    }
}

fn write_file(p: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display()))
}
