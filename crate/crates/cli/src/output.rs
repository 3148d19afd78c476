//! Output files. Every file starts with the config digest and seed: CSV
//! files in a `#` comment row, JSON files in a `meta` object.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub config_digest: String,
    pub seed: u64,
}

impl Stamp {
    /// SHA-256 over the given parts, each followed by a newline.
    pub fn new(parts: &[&str], seed: u64) -> Self {
        let mut hasher = Sha256::new();
        for p in parts {
            hasher.update(p.as_bytes());
            hasher.update(b"\n");
        }
        Stamp {
            config_digest: hex::encode(hasher.finalize()),
            seed,
        }
    }

    pub fn header(&self) -> String {
        format!("# config_digest={} seed={}", self.config_digest, self.seed)
    }
}

/// A JSON document with a `meta` stamp next to its own fields.
#[derive(Debug, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub meta: Stamp,
    #[serde(flatten)]
    pub body: T,
}

pub struct OutDir {
    root: PathBuf,
    stamp: Stamp,
}

impl OutDir {
    pub fn create(root: &Path, stamp: Stamp) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            stamp,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn stamp(&self) -> &Stamp {
        &self.stamp
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Writes `body` (CSV with its own column header) under the stamp row.
    pub fn csv(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let mut text = self.stamp.header();
        text.push('\n');
        text.push_str(body);
        if !text.ends_with('\n') {
            text.push('\n');
        }
        self.write(name, &text)
    }

    pub fn json<T: Serialize>(&self, name: &str, body: T) -> Result<PathBuf, CliError> {
        let doc = Stamped {
            meta: self.stamp.clone(),
            body,
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("output documents serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

/// `key,value` rows for summary reports.
#[derive(Debug, Default)]
pub struct Report {
    rows: Vec<(String, String)>,
}

impl Report {
    pub fn add(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.rows.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.rows.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        for (k, v) in &self.rows {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}
