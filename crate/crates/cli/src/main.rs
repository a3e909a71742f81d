//! `adaplus-bench`: run, compare and self-test optimizer experiments.
//!
//! Exit codes: 0 on success, 1 on configuration or I/O errors, 2 when a run
//! aborts numerically or the self-test finds a mismatch.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaplus::bench::{self, Format, RunConfig};
use adaplus::differential::{self, DIFF_TOLERANCE};
use adaplus::optim::Kernel;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adaplus-bench", version, about = "Seeded optimizer benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a config file and write the trajectory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Tabulate JSON run records produced by `run --format json`.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diff every kernel against the scalar reference on seeded random streams.
    Selftest {
        #[arg(long, default_value_t = 50)]
        cases: u64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 16)]
        max_dim: usize,
    },
}

const CONFIG_ERROR: u8 = 1;
const NUMERICAL_ABORT: u8 = 2;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn run(config_path: &Path, out: &Path, format: Format) -> ExitCode {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => return fail(CONFIG_ERROR, format!("cannot read {}: {e}", config_path.display())),
    };
    let config = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(CONFIG_ERROR, format!("{}: {e}", config_path.display())),
    };
    let record = match bench::run(&config) {
        Ok(r) => r,
        Err(e) => return fail(CONFIG_ERROR, e),
    };
    if let Err(e) = fs::create_dir_all(out) {
        return fail(CONFIG_ERROR, format!("cannot create {}: {e}", out.display()));
    }
    let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    let name = if record.is_aborted() {
        format!("{stem}.aborted.{}", format.extension())
    } else {
        format!("{stem}.{}", format.extension())
    };
    let path = out.join(name);
    if let Err(e) = bench::emit(&record, format, &path) {
        return fail(CONFIG_ERROR, e);
    }

    println!("{} on {} -> {}", record.optimizer, record.problem, path.display());
    for s in &record.summary.replicas {
        println!("  seed {:>4}: final loss {:.6e}, best {:.6e} after {} steps", s.seed, s.final_loss, s.best_loss, s.steps);
    }
    match &record.aborted {
        Some(a) => fail(NUMERICAL_ABORT, format!("seed {} aborted at step {}: {}", a.seed, a.step, a.reason)),
        None => ExitCode::SUCCESS,
    }
}

fn compare(inputs: &[PathBuf], out: &Path) -> ExitCode {
    let mut records = Vec::with_capacity(inputs.len());
    for path in inputs {
        match bench::read_json(path) {
            Ok(r) => records.push(r),
            Err(e) => return fail(CONFIG_ERROR, e),
        }
    }
    let table = match bench::compare(&records) {
        Ok(t) => t,
        Err(e) => return fail(CONFIG_ERROR, e),
    };
    let text = table.to_string();
    if let Err(e) = fs::write(out, &text) {
        return fail(CONFIG_ERROR, format!("cannot write {}: {e}", out.display()));
    }
    print!("{text}");
    ExitCode::SUCCESS
}

fn selftest(cases: u64, steps: usize, max_dim: usize) -> ExitCode {
    let mut ok = true;
    for report in differential::run_suite(&Kernel::ALL, cases, max_dim, steps) {
        let passed = report.passed(DIFF_TOLERANCE);
        ok &= passed;
        let status = if passed { "PASS" } else { "FAIL" };
        print!("{status} {:<9} {} cases, max rel err {:.3e}", report.kernel.name(), report.cases, report.max_rel());
        if let Some(w) = report.worst.as_ref().filter(|_| !passed) {
            print!(" (t={} idx={} {}: {} vs {})", w.t, w.index, w.field, w.left, w.right);
        }
        if let Some(f) = &report.failure {
            print!(" [{f}]");
        }
        println!();
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(NUMERICAL_ABORT)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, format } => run(&config, &out, format.into()),
        Command::Compare { inputs, out } => compare(&inputs, &out),
        Command::Selftest { cases, steps, max_dim } => selftest(cases, steps, max_dim),
    }
}
