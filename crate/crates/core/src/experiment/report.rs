use super::config::{Assertion, ExperimentConfig, ExperimentKind};
use super::run::{execute, Results};
use crate::error::{Error, Result};
use crate::io::{write_state, ArtifactIndex};
use crate::models::assemble_p_symbol;
use crate::refsolver::TensorGrid;
use crate::superadiabatic::Contour;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPORT_FILE: &str = "report.toml";
pub const CONFIG_FILE: &str = "config.toml";

/// One embedded assertion after evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssertionResult {
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    /// Missing when the pipeline did not produce the metric.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub passed: bool,
}

impl AssertionResult {
    pub fn describe(&self) -> String {
        let bounds = match (self.min, self.max) {
            (Some(a), Some(b)) => format!("in [{a:e}, {b:e}]"),
            (Some(a), None) => format!(">= {a:e}"),
            (None, Some(b)) => format!("<= {b:e}"),
            (None, None) => String::new(),
        };
        let value = self.value.map_or("missing".to_string(), |v| format!("{v:.6e}"));
        format!("{} {} {bounds}: {value}", if self.passed { "PASS" } else { "FAIL" }, self.metric)
    }
}

pub fn check_assertions(assertions: &[Assertion], metrics: &BTreeMap<String, f64>) -> Vec<AssertionResult> {
    assertions
        .iter()
        .map(|a| {
            let value = metrics.get(&a.metric).copied();
            let passed = value.is_some_and(|v| a.min.is_none_or(|m| v >= m) && a.max.is_none_or(|m| v <= m));
            AssertionResult { metric: a.metric.clone(), min: a.min, max: a.max, value, passed }
        })
        .collect()
}

/// Everything one run produced, with its provenance.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub version: &'static str,
    /// Seconds.
    pub wall_time: f64,
    pub results: Results,
    pub assertions: Vec<AssertionResult>,
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'a str,
    experiment: &'a str,
    config_hash: &'a str,
    wall_time_s: f64,
    passed: bool,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    notes: &'a [String],
}

#[derive(Serialize)]
struct ReportFile<'a> {
    meta: Meta<'a>,
    metrics: &'a BTreeMap<String, f64>,
    assertions: &'a [AssertionResult],
    config: &'a ExperimentConfig,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    /// 0 when every assertion holds, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.results.metrics.get(name).copied()
    }

    /// Tables, fields, the resolved config, the report and the index.
    pub fn write(&self, dir: &Path) -> Result<ArtifactIndex> {
        create_dir(dir)?;
        let mut index = ArtifactIndex::default();
        for t in &self.results.tables {
            let name = format!("{}.csv", t.name);
            t.write(&dir.join(&name))?;
            index.add(name, "table", format!("{} rows", t.len()));
        }
        for (name, state) in &self.results.fields {
            let file = format!("{name}.mbo");
            let (_, meta) = write_state(&dir.join(&file), state)?;
            index.add(file, "field", format!("{} frame, t = {}", state.frame, state.time));
            let meta = meta.file_name().expect("sidecar has a name").to_string_lossy().into_owned();
            index.add(meta, "metadata", format!("sidecar of {name}"));
        }
        write_text(&dir.join(CONFIG_FILE), &self.config.resolved())?;
        index.add(CONFIG_FILE, "config", "resolved config");
        let file = ReportFile {
            meta: Meta {
                version: self.version,
                experiment: self.config.experiment.name(),
                config_hash: &self.config_hash,
                wall_time_s: self.wall_time,
                passed: self.passed(),
                exit_code: self.exit_code(),
                error: None,
                notes: &self.results.notes,
            },
            metrics: &self.results.metrics,
            assertions: &self.assertions,
            config: &self.config,
        };
        write_text(&dir.join(REPORT_FILE), &toml::to_string(&file).map_err(|e| Error::Format(e.to_string()))?)?;
        index.add(REPORT_FILE, "report", "metadata, metrics and assertions");
        index.write(dir)?;
        Ok(index)
    }
}

/// Report of a run that stopped with `err`: the config, the message and the exit code.
pub fn write_failure(dir: &Path, config: &ExperimentConfig, err: &Error, wall_time: f64) -> Result<()> {
    create_dir(dir)?;
    let metrics = BTreeMap::new();
    let hash = config.hash();
    let file = ReportFile {
        meta: Meta {
            version: VERSION,
            experiment: config.experiment.name(),
            config_hash: &hash,
            wall_time_s: wall_time,
            passed: false,
            exit_code: err.exit_code(),
            error: Some(err.to_string()),
            notes: &[],
        },
        metrics: &metrics,
        assertions: &[],
        config,
    };
    write_text(&dir.join(REPORT_FILE), &toml::to_string(&file).map_err(|e| Error::Format(e.to_string()))?)?;
    let mut index = ArtifactIndex::default();
    index.add(REPORT_FILE, "report", "failed run");
    index.write(dir)
}

/// Execute the config's pipeline and evaluate its assertions.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.check()?;
    let start = Instant::now();
    let results = execute(config)?;
    let assertions = check_assertions(&config.assertions, &results.metrics);
    Ok(ExperimentReport {
        config: config.clone(),
        config_hash: config.hash(),
        version: VERSION,
        wall_time: start.elapsed().as_secs_f64(),
        results,
        assertions,
    })
}

/// The scan-h pipeline on any config.
pub fn scan_h(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut c = config.clone();
    c.experiment = ExperimentKind::ScanH;
    run(&c)
}

/// Dry run: build the models and grids and check gaps and point budgets
/// without running the pipeline. Returns one line per check.
pub fn validate(config: &ExperimentConfig) -> Result<Vec<String>> {
    config.check()?;
    let mut lines = vec![format!("schema ok: {} experiment, config hash {}", config.experiment.name(), config.hash())];
    let pl = &config.pipeline;
    for h in config.h_values() {
        let model = config.model.build(h)?;
        let d = model.d();
        if config.experiment != ExperimentKind::StraightLine {
            let grid = config.grid.phase_grid(d)?;
            let n = match &model {
                crate::models::FiberModel::Matrix(m) => m.size(),
                crate::models::FiberModel::Pair(_) => config.grid.fiber_count,
            };
            let p = assemble_p_symbol(&model, &grid, n, pl.order.min(1))?;
            let c = Contour::from_symbol(p.p.coeff(0), pl.group, pl.contour_nodes, pl.gap_threshold)?;
            lines.push(format!("h = {h}: symbol gap {:.6e}, contour clearance {:.6e}", c.gap.min_gap, c.clearance()));
        }
        if matches!(config.experiment, ExperimentKind::PropagateGrid | ExperimentKind::Compare | ExperimentKind::StraightLine)
            || config.experiment == ExperimentKind::ScanH && !config.model.is_pair()
        {
            let g = TensorGrid::for_model(&model, config.grid.tensor_axes(d)?, config.grid.point_budget)?;
            lines.push(format!("h = {h}: tensor grid {:?} ({} points)", g.dims(), g.len()));
        }
    }
    Ok(lines)
}
