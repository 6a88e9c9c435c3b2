//! Run manifests and output helpers shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use pdqre::fmt::sig12;

#[derive(Clone, Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// What produced an output file.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    /// Seconds since the Unix epoch; only present when requested, so that
    /// reruns stay byte-identical by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &impl Serialize, timestamp: bool) -> Result<Self> {
        let created_unix = if timestamp {
            Some(SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs())
        } else {
            None
        };
        Ok(Self {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: round_json(serde_json::to_value(config)?),
            inputs: Vec::new(),
            created_unix,
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn add_bundled(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    /// Write `bytes` to `path` and the manifest next to it as `<path>.manifest.json`.
    pub fn write_with(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_file(path, bytes)?;
        let sidecar = sidecar_path(path);
        let mut doc = serde_json::to_value(self)?;
        doc["output"] = serde_json::json!({
            "path": path.display().to_string(),
            "sha256": sha256_hex(bytes),
        });
        write_file(&sidecar, &to_json_bytes(&doc)?)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Round every float in a JSON tree to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            sig12(x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_json_bytes(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&round_json(serde_json::to_value(v)?))?;
    out.push(b'\n');
    Ok(out)
}

pub fn opt(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_integers_and_trims_floats() {
        let v = serde_json::json!({"a": 1.0 / 3.0, "b": [2, 0.1], "c": "x"});
        let r = round_json(v);
        assert_eq!(r["a"].as_f64(), Some(0.333333333333));
        assert_eq!(r["b"][0].as_u64(), Some(2));
        assert_eq!(r["c"], "x");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/a.csv")), PathBuf::from("out/a.csv.manifest.json"));
    }
}
