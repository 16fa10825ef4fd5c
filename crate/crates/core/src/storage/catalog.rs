//! Newline-delimited JSON document catalog.

use std::collections::HashSet;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub label: String,
    /// Row of this document in the embedding file.
    pub row: u32,
}

/// Reads every record, rejecting duplicate ids or rows. Blank lines are
/// skipped.
pub fn read_catalog(path: impl AsRef<Path>) -> Result<Vec<DocumentRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut ids = HashSet::new();
    let mut rows = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        if !ids.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        if !rows.insert(record.row) {
            return Err(Error::Corrupt(format!("row {} assigned twice", record.row)));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_catalog(path: impl AsRef<Path>, records: &[DocumentRecord]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    super::atomic_write(path.as_ref(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_optional_text_and_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ndjson");
        std::fs::write(
            &path,
            "{\"id\":\"a\",\"title\":\"A\",\"label\":\"sport\",\"row\":0}\n\n\
             {\"id\":\"b\",\"title\":\"B\",\"text\":\"body\",\"label\":\"tech\",\"row\":1}\n",
        )
        .unwrap();
        let recs = read_catalog(&path).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].text.as_deref(), Some("body"));

        std::fs::write(
            &path,
            "{\"id\":\"a\",\"title\":\"A\",\"label\":\"x\",\"row\":0}\n\
             {\"id\":\"a\",\"title\":\"B\",\"label\":\"x\",\"row\":1}\n",
        )
        .unwrap();
        assert!(matches!(read_catalog(&path), Err(Error::DuplicateId(id)) if id == "a"));

        std::fs::write(&path, "{\"id\":\"a\"}\n").unwrap();
        assert!(matches!(read_catalog(&path), Err(Error::Json { line: 1, .. })));
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ndjson");
        let recs = vec![DocumentRecord {
            id: "x".into(),
            title: "héllo".into(),
            text: None,
            label: "l".into(),
            row: 0,
        }];
        write_catalog(&path, &recs).unwrap();
        assert_eq!(read_catalog(&path).unwrap(), recs);
    }
}
