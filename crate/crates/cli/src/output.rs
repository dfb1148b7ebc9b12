// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! On-disk formats. Every CSV has a fixed header:
//!
//! - convergence: `iter,loss,grad_inf_norm,wall_ms`
//! - schedule: a `# dt_ns=<dt> units=rad/ns channels=<m> steps=<N>` line, then
//!   one row of `N` amplitudes per control channel
//! - benchmarks: [`BENCH_HEADER`]
//!
//! Whole files are written to a temporary sibling and renamed into place.
//! Benchmark rows are appended and flushed one at a time.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use qoc_core::{ControlSchedule, ConvergenceRecord, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONVERGENCE_HEADER: &str = "iter,loss,grad_inf_norm,wall_ms";

pub const BENCH_HEADER: &str = "experiment,width,length,qubits,dim,steps,period,strategy,\
iterations,seed,status,total_ms,forward_ms,backward_ms,ms_per_iteration,peak_matrices,\
checkpoints,workspace_matrices,scratch_matrices,step_recomputations,linearizations,\
peak_bytes_estimate,rss_peak_bytes,loss_first,loss_last,loss_best,error";

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    ensure_dir(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub iter: usize,
    pub loss: f64,
    pub grad_inf_norm: f64,
    pub wall_ms: f64,
}

impl From<&ConvergenceRecord> for ConvergenceRow {
    fn from(r: &ConvergenceRecord) -> Self {
        Self {
            iter: r.iteration,
            loss: r.loss,
            grad_inf_norm: r.grad_inf_norm,
            wall_ms: r.wall_ms,
        }
    }
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>, header: &str) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header.split(','))
        .and_then(|_| rows.into_iter().try_for_each(|r| w.serialize(r)))
        .map_err(|e| CliError::Config(format!("csv encoding: {e}")))?;
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv encoding: {e}")))
}

pub fn convergence_csv(log: &[ConvergenceRecord]) -> CliResult<Vec<u8>> {
    csv_bytes(log.iter().map(ConvergenceRow::from), CONVERGENCE_HEADER)
}

pub fn write_convergence(path: &Path, log: &[ConvergenceRecord]) -> CliResult<()> {
    write_atomic(path, &convergence_csv(log)?)
}

pub fn read_convergence(path: &Path) -> CliResult<Vec<ConvergenceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(e.to_string()))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn schedule_csv(schedule: &ControlSchedule) -> String {
    let mut out = format!(
        "# dt_ns={} units=rad/ns channels={} steps={}\n",
        schedule.grid().dt(),
        schedule.channels(),
        schedule.steps()
    );
    for row in schedule.amplitudes().rows() {
        let cells: Vec<String> = row.iter().map(|g| g.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_schedule(path: &Path, schedule: &ControlSchedule) -> CliResult<()> {
    write_atomic(path, schedule_csv(schedule).as_bytes())
}

pub fn read_schedule(path: &Path) -> CliResult<ControlSchedule> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .map_err(|e| CliError::io(path, e))?;
    let field = |key: &str| -> CliResult<&str> {
        header
            .trim_start_matches('#')
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
            .ok_or_else(|| bad(format!("header lacks {key}")))
    };
    let dt: f64 = field("dt_ns")?.parse().map_err(|e| bad(format!("dt_ns: {e}")))?;
    let channels: usize = field("channels")?.parse().map_err(|e| bad(format!("channels: {e}")))?;
    let steps: usize = field("steps")?.parse().map_err(|e| bad(format!("steps: {e}")))?;
    if field("units")? != "rad/ns" {
        return Err(bad("amplitudes must be in rad/ns".into()));
    }

    let mut values = Vec::with_capacity(channels * steps);
    for line in lines {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        for cell in line.split(',') {
            values.push(cell.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?);
        }
    }
    let g = Array2::from_shape_vec((channels, steps), values)
        .map_err(|_| bad(format!("expected {channels} rows of {steps} values")))?;
    Ok(ControlSchedule::new(g, TimeGrid::new(steps, dt)?)?)
}

/// One benchmark row. Numeric fields are empty when the row failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub experiment: String,
    pub width: usize,
    pub length: usize,
    pub qubits: usize,
    pub dim: usize,
    pub steps: usize,
    pub period: Option<usize>,
    pub strategy: String,
    pub iterations: usize,
    pub seed: u64,
    /// `ok`, `error`, `over-budget` or `panic`.
    pub status: String,
    pub total_ms: Option<f64>,
    pub forward_ms: Option<f64>,
    pub backward_ms: Option<f64>,
    pub ms_per_iteration: Option<f64>,
    pub peak_matrices: Option<usize>,
    pub checkpoints: Option<usize>,
    pub workspace_matrices: Option<usize>,
    pub scratch_matrices: Option<usize>,
    pub step_recomputations: Option<usize>,
    pub linearizations: Option<usize>,
    pub peak_bytes_estimate: Option<u64>,
    /// Process peak resident set (VmHWM) after the row, when available.
    pub rss_peak_bytes: Option<u64>,
    pub loss_first: Option<f64>,
    pub loss_last: Option<f64>,
    pub loss_best: Option<f64>,
    pub error: Option<String>,
}

/// Append-only benchmark CSV.
pub struct BenchSink {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl BenchSink {
    pub fn create(path: &Path) -> CliResult<Self> {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(dir)?;
        }
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer
            .write_record(BENCH_HEADER.split(','))
            .and_then(|_| writer.flush().map_err(csv::Error::from))
            .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn append(&mut self, record: &BenchRecord) -> CliResult<()> {
        self.writer
            .serialize(record)
            .and_then(|_| self.writer.flush().map_err(csv::Error::from))
            .map_err(|e| CliError::io(&self.path, std::io::Error::other(e)))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

pub fn read_bench(path: &Path) -> CliResult<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(e.to_string()))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_round_trip() {
        let g = ndarray::array![[0.1, -2.5e-7, 3.0], [1.0 / 3.0, 0.0, -1e300]];
        let s = ControlSchedule::new(g, TimeGrid::new(3, 0.2).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_schedule(&path, &s).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# dt_ns=0.2 units=rad/ns channels=2 steps=3\n"));
        let back = read_schedule(&path).unwrap();
        assert_eq!(back.amplitudes(), s.amplitudes());
        assert_eq!(back.grid(), s.grid());
    }

    #[test]
    fn malformed_schedule_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, "# dt_ns=0.2 units=rad/ns channels=2 steps=3\n1,2,3\n").unwrap();
        assert!(read_schedule(&path).is_err());
        fs::write(&path, "# dt_ns=0.2 units=MHz channels=1 steps=1\n1\n").unwrap();
        assert!(read_schedule(&path).is_err());
    }

    #[test]
    fn convergence_round_trip() {
        let log = vec![ConvergenceRecord {
            iteration: 0,
            loss: 0.5,
            grad_inf_norm: 1e-3,
            wall_ms: 2.0,
            forward_ms: 1.0,
            backward_ms: 1.0,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_convergence(&path, &log).unwrap();
        let rows = read_convergence(&path).unwrap();
        assert_eq!(rows, vec![ConvergenceRow::from(&log[0])]);
    }
}
