//! Append-only line-delimited JSON log. State is rebuilt by replaying it.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub record_type: String,
    pub payload: Value,
    pub timestamp: u64,
}

#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    file: Option<File>,
}

impl Store {
    /// Reads existing records. A missing file is an empty store; it is
    /// created on the first append.
    pub fn open(path: impl Into<PathBuf>) -> std::io::Result<(Store, Vec<Record>)> {
        let path = path.into();
        let mut records = Vec::new();
        match File::open(&path) {
            Ok(f) => {
                for (i, line) in BufReader::new(f).lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let rec: Record = serde_json::from_str(&line).map_err(|e| {
                        std::io::Error::new(
                            std::io::ErrorKind::InvalidData,
                            format!("{}:{}: {e}", path.display(), i + 1),
                        )
                    })?;
                    records.push(rec);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok((Store { path, file: None }, records))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes and syncs one record before returning.
    pub fn append(&mut self, record: &Record) -> std::io::Result<()> {
        if self.file.is_none() {
            self.file = Some(open_private(&self.path)?);
        }
        let file = self.file.as_mut().unwrap();
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        file.write_all(&line)?;
        file.sync_data()
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        match self.file.as_mut() {
            Some(f) => f.sync_all(),
            None => Ok(()),
        }
    }
}

fn open_private(path: &Path) -> std::io::Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut opts = OpenOptions::new();
    opts.create(true).append(true);
    // Profiles are stored in recoverable form; keep the file owner-only.
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    opts.open(path)
}
