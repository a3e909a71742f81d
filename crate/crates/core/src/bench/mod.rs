//! Seeded experiment runs over the problems and kernels.

mod compare;
mod config;
mod emit;
mod run;

pub use compare::{compare, Cell, CompareError, ComparisonTable, TableRow};
pub use config::{ConfigError, NoiseConfig, ProblemSpec, RunConfig, CONFIG_KEYS};
pub use emit::{emit, parse_csv_rows, read_json, to_json, write_csv, EmitError, Format, CSV_HEADER};
pub use run::{run, run_with_threads, Abort, ReplicaSummary, Row, RunError, RunRecord, Summary, THREADS_ENV};
