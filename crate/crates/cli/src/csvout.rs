//! Deterministic CSV emission: fixed column order, configurable precision,
//! comma delimiter, and a header comment carrying the tool version and the
//! hash of the fully resolved configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

pub struct CsvWriter {
    out_dir: PathBuf,
    precision: usize,
    config_hash: String,
}

impl CsvWriter {
    pub fn new(out_dir: &Path, precision: usize, resolved_config: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(resolved_config.as_bytes());
        let config_hash = hex::encode(hasher.finalize());
        Self { out_dir: out_dir.to_path_buf(), precision, config_hash }
    }

    pub fn fmt(&self, v: f64) -> String {
        format!("{:.*e}", self.precision, v)
    }

    /// Write one CSV file; `comments` become extra leading `#` lines.
    pub fn write(
        &self,
        name: &str,
        columns: &[&str],
        rows: &[Vec<String>],
        comments: &[String],
    ) -> Result<PathBuf, CliError> {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "# mtcorr {} config_sha256={}",
            env!("CARGO_PKG_VERSION"),
            self.config_hash
        );
        for c in comments {
            let _ = writeln!(body, "# {c}");
        }
        let _ = writeln!(body, "{}", columns.join(","));
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            let _ = writeln!(body, "{}", row.join(","));
        }
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::numeric(format!("cannot create {}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, body)
            .map_err(|e| CliError::numeric(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
