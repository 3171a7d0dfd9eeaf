//! Trajectory CSV, JSON summaries and reports, JSON-lines progress.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use skt_core::{CheckReport, FieldTrajectory, LayerReport};

use crate::CliError;

#[derive(Serialize)]
struct Row {
    t: f64,
    x: f64,
    u1: f64,
    u2: f64,
    v1: f64,
    v2: f64,
}

/// One row per snapshot and node, columns `t,x,u1,u2,v1,v2`, shortest
/// round-trip decimal floats.
pub fn write_trajectory_csv(path: &Path, traj: &FieldTrajectory) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for f in &traj.fields {
        for i in 0..f.grid.n {
            w.serialize(Row {
                t: f.t,
                x: f.grid.node(i),
                u1: f.u1[i],
                u2: f.u2[i],
                v1: f.v1[i],
                v2: f.v2[i],
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::config(format!("cannot write csv: {e}"))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::config(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `{name, statistic, tolerance, pass, details}` with details as an object.
pub fn report_json(r: &CheckReport) -> serde_json::Value {
    let details: serde_json::Map<String, serde_json::Value> =
        r.details.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
    serde_json::json!({
        "name": r.name,
        "statistic": r.statistic,
        "tolerance": r.tolerance,
        "pass": r.pass,
        "details": details,
    })
}

pub fn layer_json(r: &LayerReport) -> serde_json::Value {
    serde_json::json!({
        "layer": r.index,
        "t": r.t,
        "min_u": r.min_u,
        "max_u": r.max_u,
        "clips": r.clips,
        "clamps": r.clamps,
        "clamp_fraction": r.clamp_fraction(),
        "max_u_stderr": r.max_u_stderr(),
    })
}

/// Appends JSON records to a file, one per line, flushing each.
pub struct JsonLines {
    w: BufWriter<File>,
}

impl JsonLines {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        Ok(JsonLines {
            w: BufWriter::new(File::create(path)?),
        })
    }

    pub fn push(&mut self, value: &serde_json::Value) -> Result<(), CliError> {
        serde_json::to_writer(&mut self.w, value).map_err(|e| CliError::config(e.to_string()))?;
        writeln!(self.w)?;
        self.w.flush()?;
        Ok(())
    }
}
