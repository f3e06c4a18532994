use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use radtree::estimators::EstimatorRecord;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands::{execute, Table};
use crate::config::{Format, RunConfig};

pub const RECORD_FILE: &str = "record.json";

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Resource(String),
    Io(String),
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Io(_) | CliError::Mismatch(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Resource(m) | CliError::Io(m) => f.write_str(m),
            CliError::Mismatch(m) => write!(f, "replay mismatch: {m}"),
        }
    }
}

impl From<radtree::Error> for CliError {
    fn from(e: radtree::Error) -> Self {
        if e.is_resource() {
            CliError::Resource(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Everything a run writes to `record.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub version: String,
    pub config: RunConfig,
    pub records: Vec<EstimatorRecord>,
    /// CSV files written next to this record.
    pub files: Vec<String>,
    pub runtime_ms: u64,
}

impl ExperimentRecord {
    /// Numeric results without wall-clock fields.
    pub fn payload(&self) -> Vec<Value> {
        self.records.iter().map(EstimatorRecord::payload).collect()
    }
}

pub struct Run {
    pub record: ExperimentRecord,
    pub tables: Vec<Table>,
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

/// Runs a resolved config on a pool of the requested size.
pub fn run(config: &RunConfig) -> Result<Run, CliError> {
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Resource(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| execute(config))?;
    let record = ExperimentRecord {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        records: outcome.records,
        files: outcome.tables.iter().map(|t| t.name.clone()).collect(),
        runtime_ms: start.elapsed().as_millis() as u64,
    };
    Ok(Run {
        record,
        tables: outcome.tables,
    })
}

fn write_files(dir: &Path, run: &Run) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for t in &run.tables {
        let p = dir.join(&t.name);
        fs::write(&p, &t.contents).map_err(|e| io_err(&p, e))?;
    }
    let p = dir.join(RECORD_FILE);
    let mut text = serde_json::to_string_pretty(&run.record).expect("record serialises");
    text.push('\n');
    fs::write(&p, text).map_err(|e| io_err(&p, e))
}

/// Writes the run's files and prints its summary.
pub fn emit(config: &RunConfig, run: &Run) -> Result<(), CliError> {
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    write_files(&dir, run)?;
    match config.format.unwrap_or(Format::Json) {
        Format::Json => {
            let v = Value::Array(run.record.records.iter().map(|r| r.values.clone()).collect());
            println!("{}", serde_json::to_string_pretty(&v).expect("values serialise"));
        }
        Format::Csv => {
            // the point list is long, so a simulation prints its edges
            let main = run.tables.iter().find(|t| t.name != "points.csv");
            if let Some(t) = main {
                print!("{}", t.contents);
            }
        }
    }
    Ok(())
}

/// Re-runs the config stored in `path` and compares numeric results and
/// CSV tables with what was recorded. New files go to `out` when given.
pub fn replay(path: &Path, out: Option<PathBuf>, workers: Option<usize>) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let old: ExperimentRecord =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let mut config = old.config.clone().resolve()?;
    if workers.is_some() {
        config.workers = workers;
    }
    if old.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "radtree: record written by version {}, replaying with {}",
            old.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let new = run(&config)?;
    if new.record.payload() != old.payload() {
        return Err(CliError::Mismatch("numeric results differ from the record".into()));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    for t in &new.tables {
        let p = dir.join(&t.name);
        if let Ok(prev) = fs::read_to_string(&p) {
            if prev != t.contents {
                return Err(CliError::Mismatch(format!("{} differs", p.display())));
            }
        }
    }
    if let Some(out) = out {
        write_files(&out, &new)?;
    }
    println!("replay of {} reproduced {} record(s)", path.display(), new.record.records.len());
    Ok(())
}
