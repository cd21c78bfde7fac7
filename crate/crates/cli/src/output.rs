use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use ergsq_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Writes one result, prefixed by the run configuration.
pub struct Emitter {
    format: Format,
    path: Option<PathBuf>,
    config: Value,
}

impl Emitter {
    pub fn new(format: Format, path: Option<PathBuf>, config: Value) -> Self {
        Emitter { format, path, config }
    }

    pub fn emit(&self, csv: &str, result: Value) -> Result<(), Failure> {
        let text = match self.format {
            Format::Csv => format!("# config={}\n{csv}", self.config),
            Format::Json => {
                let doc = json!({ "config": self.config, "result": result });
                serde_json::to_string_pretty(&doc).map_err(Error::from)? + "\n"
            }
        };
        match &self.path {
            Some(path) => std::fs::write(path, text).map_err(Error::from)?,
            None => match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(Error::from(e).into()),
                _ => {}
            },
        }
        Ok(())
    }
}
