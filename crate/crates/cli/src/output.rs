//! Output files are assembled in memory and written only after every
//! computation has succeeded, so a failing run leaves no partial results.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn read_input(path: &Path, digests: &mut Vec<InputDigest>) -> Result<Vec<u8>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    digests.push(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    });
    Ok(bytes)
}

/// Run-level metadata copied into every sidecar.
#[derive(Debug, Default)]
pub struct RunMeta {
    pub subcommand: String,
    pub inputs: Vec<InputDigest>,
    pub fields: Map<String, Value>,
}

impl RunMeta {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            ..Default::default()
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.fields.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn render(&self, file: &str, extra: &Map<String, Value>) -> Value {
        let mut obj = Map::new();
        obj.insert("tool".into(), json!("tvmg"));
        obj.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        obj.insert("subcommand".into(), json!(self.subcommand));
        obj.insert("file".into(), json!(file));
        for key in ["seed", "kernel", "bandwidth", "alpha", "bandwidth_mode", "prng"] {
            obj.insert(key.into(), self.fields.get(key).cloned().unwrap_or(Value::Null));
        }
        for (k, v) in self.fields.iter().chain(extra) {
            obj.insert(k.clone(), v.clone());
        }
        obj.insert("inputs".into(), serde_json::to_value(&self.inputs).unwrap_or(Value::Null));
        Value::Object(obj)
    }
}

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
    pub extra: Map<String, Value>,
    pub sidecar: bool,
}

#[derive(Default)]
pub struct Outputs {
    items: Vec<Artifact>,
}

impl Outputs {
    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> &mut Artifact {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        self.push(name, bytes, true)
    }

    pub fn raw_csv(&mut self, name: &str, bytes: Vec<u8>) -> &mut Artifact {
        self.push(name, bytes, true)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> &mut Artifact {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable report");
        bytes.push(b'\n');
        self.push(name, bytes, false)
    }

    fn push(&mut self, name: &str, bytes: Vec<u8>, sidecar: bool) -> &mut Artifact {
        self.items.push(Artifact {
            name: name.to_string(),
            bytes,
            extra: Map::new(),
            sidecar,
        });
        self.items.last_mut().expect("just pushed")
    }

    pub fn write(self, dir: &Path, meta: &RunMeta) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::new();
        for a in self.items {
            let path = dir.join(&a.name);
            fs::write(&path, &a.bytes).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
            if a.sidecar {
                let side = dir.join(format!("{}.meta.json", a.name));
                let mut text = serde_json::to_vec_pretty(&meta.render(&a.name, &a.extra)).expect("json");
                text.push(b'\n');
                fs::write(&side, text).map_err(|e| CliError::io(&side, e))?;
                written.push(side);
            }
        }
        Ok(written)
    }
}

impl Artifact {
    pub fn note(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.extra.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }
}

/// Shortest round-trip decimal form; `NaN`, `inf` and `-inf` for non-finite.
pub fn num(v: f64) -> String {
    format!("{v}")
}
