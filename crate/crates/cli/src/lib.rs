//! Scenario files, runs, w-plane maps and wavefunction comparisons behind
//! the `semiprop` command.

pub mod compare;
pub mod config;
pub mod run;
pub mod scenario;

pub use compare::{compare, compare_tables, CompareError, Comparison, ComparisonReport, ReportEntry, WaveTable};
pub use config::{Config, ConfigError};
pub use run::{emit_map_data, evaluate, run_scenario, CaseResult, MapData, RunOutput};
pub use scenario::Scenario;
