//! Instance files, run statistics and the experiment harness.

pub mod experiment;
pub mod io;
pub mod stats;

pub use experiment::{
    run_experiment, solve_instance, ExperimentSpec, InstanceRecord, InstanceSource, Method, Report, ReportRow,
    Solution,
};
pub use io::{
    convert_external, parse_instance, read_instance, serialize_instance, write_instance, ExternalFormat,
};
pub use stats::{compute_stats, RunStats};
