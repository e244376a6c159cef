//! Newline-delimited JSON helpers shared by the record files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Reads one record per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, IoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    parse_jsonl(BufReader::new(file), path)
}

pub fn parse_jsonl<T: DeserializeOwned>(reader: impl BufRead, path: &Path) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IoError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let err = |e| IoError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| IoError::io(path, e.into()))?;
        w.write_all(b"\n").map_err(err)?;
    }
    w.flush().map_err(err)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, IoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<(), IoError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::io(path, e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

/// Balanced `{...}` spans of `text`, innermost first. Callers try each as
/// JSON, which tolerates prose and code fences around a structured reply.
pub fn json_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for (i, ch) in text.char_indices() {
        match ch {
            '{' => stack.push(i),
            '}' => {
                if let Some(start) = stack.pop() {
                    out.push(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    out
}
