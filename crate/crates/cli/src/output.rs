//! Report, CSV and metadata files.

use std::fs;
use std::path::Path;
use std::time::SystemTime;

use serde_json::{json, Value};

use crate::commands::Outcome;
use crate::config::{Config, SCHEMA};
use crate::{Args, RunError};

fn io(e: impl std::fmt::Display) -> RunError {
    RunError::Io(e.to_string())
}

/// The deterministic report: config echo, result and verdict. Nothing here
/// depends on the clock or the thread count.
pub fn report(cfg: &Config, outcome: &Outcome) -> Value {
    json!({
        "schema": SCHEMA,
        "command": cfg.command,
        "config": cfg.echo,
        "pass": outcome.pass,
        "budget_caveats": outcome.budget_caveats,
        "result": outcome.result,
    })
}

fn unix(t: SystemTime) -> f64 {
    t.duration_since(SystemTime::UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn write(dir: &Path, cfg: &Config, outcome: &Outcome, started: SystemTime, args: &Args) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io)?;
    let mut text = serde_json::to_string_pretty(&report(cfg, outcome)).map_err(io)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text).map_err(io)?;
    let mut files = vec!["report.json".to_string()];
    for t in &outcome.tables {
        let name = format!("{}.csv", t.name);
        let mut w = csv::Writer::from_path(dir.join(&name)).map_err(io)?;
        w.write_record(&t.header).map_err(io)?;
        for row in &t.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(io)?;
        files.push(name);
    }
    let finished = SystemTime::now();
    let meta = json!({
        "started_unix": unix(started),
        "finished_unix": unix(finished),
        "elapsed_seconds": unix(finished) - unix(started),
        "threads": rayon::current_num_threads(),
        "strict": args.strict,
        "config_path": args.config.display().to_string(),
        "version": env!("CARGO_PKG_VERSION"),
        "files": files,
    });
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta).map_err(io)? + "\n").map_err(io)?;
    Ok(())
}
