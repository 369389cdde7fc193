use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Serializes `rows` as CSV with a header row of field names.
pub fn write_csv<T: Serialize>(out: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_file(path, csv_string(rows)?.as_bytes())
}

/// Pretty JSON followed by a newline.
pub fn json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json_file<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_file(path, json_string(value)?.as_bytes())
}

/// `run.csv` -> `run.csv.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
