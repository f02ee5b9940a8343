//! Configs, pipelines and reports: one TOML file in, one directory of
//! tables, fields and a report out.

mod config;
mod report;
mod run;

pub use config::{
    Assertion, CompareMode, ExperimentConfig, ExperimentKind, FiberState, FrameConfig, GridConfig, InitialState, ModelConfig, PipelineConfig,
    PotentialConfig,
};
pub use report::{check_assertions, run, scan_h, validate, write_failure, AssertionResult, ExperimentReport, CONFIG_FILE, REPORT_FILE, VERSION};
pub use run::{execute, line_deviation, reduction, FitStatus, Results};

#[cfg(test)]
mod tests;
