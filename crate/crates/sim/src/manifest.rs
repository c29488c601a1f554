//! Run manifests: everything needed to reproduce an output file.

use std::fmt;

use crate::format::exact;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub subcommand: String,
    /// Parameter name and value, in the order they were given.
    pub params: Vec<(String, String)>,
    pub seed: u64,
    /// Hex SHA-256 of the moment table file, when one was used.
    pub table_checksum: Option<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            params: Vec::new(),
            seed,
            table_checksum: None,
            outputs: Vec::new(),
        }
    }

    pub fn param(mut self, name: &str, value: impl fmt::Display) -> Self {
        self.params.push((name.to_string(), value.to_string()));
        self
    }

    pub fn real(self, name: &str, value: f64) -> Self {
        self.param(name, exact(value))
    }

    pub fn list(self, name: &str, values: &[f64]) -> Self {
        let text: Vec<String> = values.iter().map(|&v| exact(v)).collect();
        self.param(name, text.join(","))
    }
}

/// A single `#`-prefixed line, `key=value` pairs separated by spaces.
impl fmt::Display for RunManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "# aloha {} command={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.subcommand,
            self.seed
        )?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        if let Some(sum) = &self.table_checksum {
            write!(f, " table_sha256={sum}")?;
        }
        if !self.outputs.is_empty() {
            write!(f, " out={}", self.outputs.join(","))?;
        }
        Ok(())
    }
}
