//! Line-delimited JSON helpers.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

pub fn read<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn write<T: Serialize, W: Write>(mut out: W, items: &[T]) -> Result<(), JsonlError> {
    for (i, item) in items.iter().enumerate() {
        serde_json::to_writer(&mut out, item).map_err(|source| JsonlError::Json { line: i + 1, source })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_bytes<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf, items).expect("serializing to memory");
    buf
}

pub fn read_file<T: DeserializeOwned>(path: &std::path::Path) -> Result<Vec<T>, JsonlError> {
    let f = std::fs::File::open(path)?;
    read(std::io::BufReader::new(f))
}

pub fn write_file<T: Serialize>(path: &std::path::Path, items: &[T]) -> Result<(), JsonlError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write(&mut f, items)?;
    f.flush()?;
    Ok(())
}
