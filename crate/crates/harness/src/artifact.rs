//! Artifact directories: data files stamped with the master seed, and a manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const MANIFEST: &str = "manifest.json";

/// Writes data files into one experiment's artifact directory.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    experiment_id: String,
    master_seed: u64,
    files: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn create(cfg: &ExperimentConfig) -> Result<Self> {
        let dir = cfg.artifact_dir();
        fs::create_dir_all(&dir).map_err(|e| HarnessError::output(&dir, e))?;
        Ok(Self {
            dir,
            experiment_id: cfg.experiment_id.clone(),
            master_seed: cfg.master_seed,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    /// CSV with a leading `# experiment-id=… master-seed=…` comment line.
    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut buf = format!("# experiment-id={} master-seed={}\n", self.experiment_id, self.master_seed).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| HarnessError::output(&path, std::io::Error::other(e));
            w.write_record(columns).map_err(io)?;
            for r in rows {
                w.write_record(r).map_err(io)?;
            }
            w.flush().map_err(|e| HarnessError::output(&path, e))?;
        }
        self.write(path, &buf)
    }

    /// JSON object `{experiment-id, master-seed, data}`.
    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<()> {
        let path = self.dir.join(name);
        let value = json!({
            "experiment-id": self.experiment_id,
            "master-seed": self.master_seed,
            "data": data,
        });
        let mut text = serde_json::to_string_pretty(&value).map_err(|e| HarnessError::output(&path, e.into()))?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        let mut f = fs::File::create(&path).map_err(|e| HarnessError::output(&path, e))?;
        f.write_all(bytes).map_err(|e| HarnessError::output(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Manifest {
    pub experiment_id: String,
    pub kind: String,
    pub master_seed: u64,
    pub chains: usize,
    pub threads: usize,
    pub code_version: String,
    pub wall_time_seconds: f64,
    pub config: Vec<(String, String)>,
    pub data_files: Vec<String>,
    pub plot_files: Vec<String>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(self).map_err(|e| HarnessError::output(&path, e.into()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| HarnessError::output(&path, e))
    }
}

pub fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect()
}

/// Reads a JSON artifact written by [`ArtifactWriter::json`] and returns its `data` member.
pub fn read_json_data(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::data(path, e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| HarnessError::data(path, e))?;
    v.get("data").cloned().ok_or_else(|| HarnessError::data(path, "missing `data` member"))
}

/// Reads a CSV artifact, skipping `#` comment lines; returns header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| HarnessError::data(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| HarnessError::data(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| HarnessError::data(path, e))?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

/// Numeric column by name.
pub fn column(path: &Path, header: &[String], rows: &[Vec<String>], name: &str) -> Result<Vec<f64>> {
    let idx = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| HarnessError::data(path, format!("missing column `{name}`")))?;
    rows.iter()
        .map(|r| {
            let cell = r.get(idx).map(String::as_str).unwrap_or("");
            if cell.is_empty() {
                Ok(f64::NAN)
            } else {
                cell.parse::<f64>()
                    .map_err(|e| HarnessError::data(path, format!("column `{name}`: {e}")))
            }
        })
        .collect()
}
