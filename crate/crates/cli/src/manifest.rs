//! `manifest.json`, written once per run.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

pub use crate::experiments::StageRecord;

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub config_path: String,
    pub config: BTreeMap<String, BTreeMap<String, String>>,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<String>,
    pub exit_code: i32,
    pub error: Option<String>,
}

impl Manifest {
    /// Writes a temporary file and renames it over `manifest.json`.
    pub fn write_atomic(&self, dir: &Path) -> io::Result<()> {
        let tmp = dir.join(".manifest.json.tmp");
        let json = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(&tmp, json + "\n")?;
        fs::rename(&tmp, dir.join("manifest.json"))
    }
}
