use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const SCHEMA: u32 = 1;

/// One reported number with the tolerance it was computed to and the
/// module that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub module: &'static str,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl Entry {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64, module: &'static str) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            module,
            detail: Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: impl Serialize) -> Self {
        self.detail = serde_json::to_value(detail).unwrap_or(Value::Null);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
    pub config: RunConfig,
    pub passed: bool,
    pub breaches: Vec<String>,
    pub entries: Vec<Entry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Value>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            schema: SCHEMA,
            command: config.command.map(|c| c.label()).unwrap_or("").to_string(),
            timestamp,
            config: config.clone(),
            passed: true,
            breaches: Vec::new(),
            entries: Vec::new(),
            criteria: None,
        }
    }

    pub fn push(&mut self, e: Entry) {
        self.entries.push(e);
    }

    /// Records an invariant violation when `ok` is false.
    pub fn require(&mut self, ok: bool, invariant: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.breaches.push(invariant.into());
        }
    }
}

/// A CSV table with fixed columns.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &'static str, header: &'static [&'static str]) -> Self {
        Self {
            file,
            header,
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn to_bytes(&self) -> std::io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

/// Writes to a temporary sibling, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("report");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

pub fn to_json(report: &Report) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serialises");
    bytes.push(b'\n');
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_fields() {
        let mut t = Table::new("x.csv", &["bump", "pos_mass"]);
        t.row(vec!["beta-power(2), s=1".into(), "0.5".into()]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "bump,pos_mass\n\"beta-power(2), s=1\",0.5\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn schema_field_present() {
        let r = Report::new(&RunConfig::default());
        let v: Value = serde_json::from_slice(&to_json(&r)).unwrap();
        assert_eq!(v["schema"], 1);
    }
}
