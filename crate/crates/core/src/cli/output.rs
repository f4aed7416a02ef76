use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub const TOOL: &str = "ehrforge";

/// Wrapper carried by every emitted report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEnvelope {
    pub tool: String,
    pub version: String,
    pub invocation: Vec<String>,
    pub seed: u64,
    pub definition: String,
    /// Dropped rows, skipped records and similar tallies.
    pub counters: BTreeMap<String, u64>,
    pub payload: Value,
}

impl ReportEnvelope {
    pub fn new(invocation: &[String], seed: u64, definition: impl Into<String>, payload: impl Serialize) -> Result<Self> {
        Ok(ReportEnvelope {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            invocation: invocation.to_vec(),
            seed,
            definition: definition.into(),
            counters: BTreeMap::new(),
            payload: serde_json::to_value(payload)?,
        })
    }

    pub fn counter(mut self, name: &str, value: u64) -> Self {
        self.counters.insert(name.into(), value);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        leaf => out.push((prefix.to_string(), scalar(leaf))),
    }
}

/// Payload as CSV. An array of flat objects becomes one row per element;
/// anything else becomes `field,value` rows keyed by dotted path.
pub fn payload_csv(payload: &Value) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let rows = payload.as_array().filter(|items| {
        !items.is_empty()
            && items
                .iter()
                .all(|i| i.as_object().is_some_and(|o| o.values().all(|v| !v.is_object() && !v.is_array())))
    });
    if let Some(items) = rows {
        let header: Vec<&String> = items[0].as_object().expect("checked object").keys().collect();
        w.write_record(&header)?;
        for item in items {
            let o = item.as_object().expect("checked object");
            w.write_record(header.iter().map(|h| o.get(*h).map(scalar).unwrap_or_default()))?;
        }
    } else {
        let mut pairs = Vec::new();
        flatten("", payload, &mut pairs);
        w.write_record(["field", "value"])?;
        for (k, v) in pairs {
            w.write_record([k, v])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<stdout>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Output directory written through a sibling staging directory, so that a
/// failed command leaves no partial files behind.
pub struct StagedDir {
    target: PathBuf,
    staging: PathBuf,
    committed: bool,
}

impl StagedDir {
    pub fn new(target: &Path) -> Result<StagedDir> {
        let name = target
            .file_name()
            .ok_or_else(|| Error::Usage(format!("output path {} has no directory name", target.display())))?;
        let staging = target.with_file_name(format!(".{}.partial-{}", name.to_string_lossy(), std::process::id()));
        if staging.exists() {
            std::fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        }
        std::fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        Ok(StagedDir {
            target: target.to_path_buf(),
            staging,
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.staging
    }

    /// Move every staged file into the target directory.
    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(&self.target).map_err(|e| Error::io(&self.target, e))?;
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&self.staging)
            .map_err(|e| Error::io(&self.staging, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(&self.staging, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        let mut moved = Vec::new();
        for from in entries {
            let to = self.target.join(from.file_name().expect("directory entry has a name"));
            std::fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
            moved.push(to);
        }
        std::fs::remove_dir(&self.staging).map_err(|e| Error::io(&self.staging, e))?;
        self.committed = true;
        Ok(moved)
    }
}

impl Drop for StagedDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = std::fs::remove_dir_all(&self.staging);
        }
    }
}
