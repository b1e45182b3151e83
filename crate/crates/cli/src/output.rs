use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use bmop::rmt::fmt17;
use bmop::Error;
use clap::ValueEnum;
use serde_json::{json, Value};

pub const SCHEMA: &str = "bmop/1";

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Numeric table with '#' comment lines for CSV and a metadata object for JSON.
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub meta: Value,
}

pub struct Sink {
    path: Option<PathBuf>,
    format: Format,
}

impl Sink {
    pub fn new(path: Option<PathBuf>, format: Format) -> Self {
        Sink { path, format }
    }

    fn write(&self, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Error> {
        match &self.path {
            Some(p) => {
                let mut w = BufWriter::new(File::create(p)?);
                f(&mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                f(&mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }

    pub fn table(&self, t: &Table) -> Result<(), Error> {
        match self.format {
            Format::Csv => self.write(|w| {
                for c in &t.comments {
                    writeln!(w, "# {c}")?;
                }
                writeln!(w, "# {}", t.columns.join(","))?;
                for r in &t.rows {
                    writeln!(w, "{}", r.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(","))?;
                }
                Ok(())
            }),
            Format::Json => {
                let rows: Vec<Value> = t.rows.iter().map(|r| Value::Object(t.columns.iter().cloned().zip(r.iter().map(|v| json!(v))).collect())).collect();
                let mut doc = json!({ "schema": SCHEMA, "rows": rows });
                if let (Value::Object(d), Value::Object(m)) = (&mut doc, &t.meta) {
                    for (k, v) in m {
                        d.insert(k.clone(), v.clone());
                    }
                }
                self.json(&doc)
            }
        }
    }

    /// Reports are JSON whatever the table format.
    pub fn json(&self, v: &Value) -> Result<(), Error> {
        let text = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
        self.write(|w| writeln!(w, "{text}"))
    }
}
