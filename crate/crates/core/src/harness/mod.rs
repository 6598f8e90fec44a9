//! Scenario files, single runs, preset matrices, and trend verdicts over
//! their CSV output.

pub mod matrix;
pub mod run;
pub mod scenario;
pub mod sweep;
pub mod verdict;

pub use self::run::{run, run_with_log, CsvRow, RunResult};
pub use self::scenario::{ConfigError, ProtocolKind, Scenario};
