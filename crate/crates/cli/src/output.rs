//! Tables and reports written atomically into the output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use loglip_core::LogScalar;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tempfile::NamedTempFile;

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Column-major description of one output table.
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// `[sign, log10|x|]` cells for a LogScalar column pair `name_sign`, `name_log10`.
pub fn log_cells(x: LogScalar) -> [Value; 2] {
    if x.is_zero() {
        [json!(0), Value::Null]
    } else {
        [json!(x.sign()), json!(x.log10_abs())]
    }
}

pub struct Sink {
    dir: PathBuf,
    format: Format,
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            format,
        })
    }

    fn atomic(&mut self, file: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(file);
        let io = |e: std::io::Error| Failure::Runtime(format!("writing {}: {e}", path.display()));
        let mut tmp = NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(())
    }

    pub fn table(&mut self, t: &Table) -> Result<(), Failure> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let fail = |e: csv::Error| Failure::Runtime(format!("csv: {e}"));
                w.write_record(&t.columns).map_err(fail)?;
                for row in &t.rows {
                    w.write_record(row.iter().map(cell_text)).map_err(fail)?;
                }
                let bytes = w.into_inner().map_err(|e| Failure::Runtime(format!("csv: {e}")))?;
                self.atomic(&format!("{}.csv", t.name), &bytes)
            }
            Format::Json => {
                let v = json!({ "columns": t.columns, "rows": t.rows });
                self.json(&t.name, &v)
            }
        }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut bytes =
            serde_json::to_vec_pretty(value).map_err(|e| Failure::Runtime(format!("json: {e}")))?;
        bytes.push(b'\n');
        self.atomic(&format!("{name}.json"), &bytes)
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
