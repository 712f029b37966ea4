//! Artifact writing: CSV/JSON/SVG files under the output directory and the
//! versioned run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use curvflow::Result;
use serde_json::{json, Value};

use crate::config::Resolver;

pub const MANIFEST_SCHEMA: u32 = 1;

/// One failed assertion; `tag` names the display equation or proposition.
#[derive(Clone, Debug)]
pub struct Failure {
    pub tag: String,
    pub message: String,
}

impl Failure {
    pub fn new(tag: &str, message: impl Into<String>) -> Self {
        Self { tag: tag.to_string(), message: message.into() }
    }
}

/// Result of one suite: summary lines, failures and manifest fields.
#[derive(Debug, Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub failures: Vec<Failure>,
    pub fields: serde_json::Map<String, Value>,
    pub artifacts: Vec<String>,
}

impl Outcome {
    pub fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    pub fn check(&mut self, ok: bool, tag: &str, message: impl Into<String>) {
        if !ok {
            self.failures.push(Failure::new(tag, message));
        }
    }

    pub fn field(&mut self, key: &str, v: Value) {
        self.fields.insert(key.to_string(), v);
    }

    pub fn merge(&mut self, name: &str, other: Outcome) {
        self.summary.extend(other.summary.into_iter().map(|s| format!("[{name}] {s}")));
        self.failures.extend(other.failures);
        self.fields.insert(name.to_string(), Value::Object(other.fields));
        self.artifacts.extend(other.artifacts.into_iter().map(|a| format!("{name}/{a}")));
    }
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn sub(&self, name: &str) -> Result<Self> {
        Self::create(&self.root.join(name))
    }

    pub fn write(&self, out: &mut Outcome, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.root.join(name), contents)?;
        out.artifacts.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` and `summary.txt`.
    pub fn finish(&self, command: &str, cfg: &Resolver, out: &mut Outcome) -> Result<()> {
        let mut summary = String::new();
        for l in &out.summary {
            let _ = writeln!(summary, "{l}");
        }
        for f in &out.failures {
            let _ = writeln!(summary, "FAIL {}: {}", f.tag, f.message);
        }
        let _ = writeln!(summary, "{}", if out.failures.is_empty() { "verdict: PASS" } else { "verdict: FAIL" });
        self.write(out, "summary.txt", &summary)?;
        let mut artifacts = out.artifacts.clone();
        artifacts.push("manifest.json".into());
        artifacts.sort();
        let manifest = json!({
            "schema": MANIFEST_SCHEMA,
            "command": command,
            "config": cfg.resolved(),
            "config_hash": cfg.hash(),
            "results": Value::Object(out.fields.clone()),
            "failures": out.failures.iter().map(|f| json!({"tag": f.tag, "message": f.message})).collect::<Vec<_>>(),
            "verdict": if out.failures.is_empty() { "PASS" } else { "FAIL" },
            "artifacts": artifacts,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.root.join("manifest.json"), text)?;
        Ok(())
    }
}

/// RFC 4180 field quoting.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.17e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// JSON number, or null for non-finite values.
pub fn jnum(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}
