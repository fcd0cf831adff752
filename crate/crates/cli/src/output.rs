use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{io_error, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes result files into one directory, each prefixed with the same
/// provenance line.
pub struct OutputDir {
    dir: PathBuf,
    header: String,
}

impl OutputDir {
    pub fn create(dir: &Path, header: String) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            header,
        })
    }

    pub fn header(&self) -> &str {
        &self.header
    }

    /// Temp file in the target directory, then rename over the destination.
    pub fn write(&self, name: &str, body: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| io_error(&self.dir, e))?;
        tmp.write_all(self.header.as_bytes())
            .and_then(|_| tmp.write_all(b"\n"))
            .and_then(|_| tmp.write_all(body))
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| io_error(&path, e))?;
        tmp.persist(&path).map_err(|e| io_error(&path, e.error))?;
        Ok(path)
    }
}

/// Small CSV table built row by row.
pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header.iter().map(|s| s.as_ref())).expect("in-memory write");
        Self { w }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        self.w.write_record(cells.iter().map(|s| s.as_ref())).expect("in-memory write");
    }

    pub fn finish(self) -> Vec<u8> {
        self.w.into_inner().expect("in-memory flush")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// θ-type metrics: four decimals.
pub fn f4(v: f64) -> String {
    format!("{v:.4}")
}

/// IMSE-type metrics: scientific.
pub fn sci(v: f64) -> String {
    format!("{v:.4e}")
}
