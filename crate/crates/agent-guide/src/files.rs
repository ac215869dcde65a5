//! On-disk formats: catalog JSON, profile tables and JSONL traces.
//!
//! A trace file is one header line (persona, catalog, watermark flag, sampler
//! seed) followed by one `TraceRecord` per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use agent_guide_core::{BehaviorCatalog, ProfileTable, Trace, TraceHeader, TraceRecord};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace file has no header line")]
    MissingHeader,
    #[error(transparent)]
    Invalid(#[from] agent_guide_core::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FileError + '_ {
    move |source| FileError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_catalog(path: &Path) -> Result<BehaviorCatalog, FileError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| FileError::Json { line: 1, source })
}

pub fn write_catalog(path: &Path, catalog: &BehaviorCatalog) -> Result<(), FileError> {
    let text = serde_json::to_string_pretty(catalog).expect("catalog serializes");
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_profiles(path: &Path) -> Result<ProfileTable, FileError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| FileError::Json { line: 1, source })
}

pub fn encode_trace<W: Write>(mut w: W, trace: &Trace) -> std::io::Result<()> {
    serde_json::to_writer(&mut w, &trace.header)?;
    w.write_all(b"\n")?;
    for record in &trace.records {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn decode_trace<R: Read>(r: R) -> Result<Trace, FileError> {
    let mut lines = BufReader::new(r).lines().enumerate();
    let header: TraceHeader = loop {
        match lines.next() {
            None => return Err(FileError::MissingHeader),
            Some((i, line)) => {
                let line = line.map_err(|source| FileError::Io {
                    path: format!("line {}", i + 1),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line)
                    .map_err(|source| FileError::Json { line: i + 1, source })?;
            }
        }
    };
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|source| FileError::Io {
            path: format!("line {}", i + 1),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord =
            serde_json::from_str(&line).map_err(|source| FileError::Json { line: i + 1, source })?;
        records.push(record);
    }
    let trace = Trace { header, records };
    trace.validate()?;
    Ok(trace)
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<(), FileError> {
    let file = File::create(path).map_err(io_err(path))?;
    encode_trace(BufWriter::new(file), trace).map_err(io_err(path))
}

pub fn read_trace(path: &Path) -> Result<Trace, FileError> {
    let file = File::open(path).map_err(io_err(path))?;
    decode_trace(file)
}
