//! Inverted-index persistence.
//!
//! Flat text, one line per token: `token<TAB>frequency<TAB>id,id,id`,
//! sorted by token. Loading reproduces the in-memory index exactly; the
//! stored frequency must equal the posting count and both token order and
//! id order are validated.

use std::path::{Path, PathBuf};

use addrlink_core::index::InvertedIndex;
use addrlink_core::{RecordId, TokenKind};
use thiserror::Error;

use crate::ingest::{write_atomic, IngestError};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error(transparent)]
    Io(#[from] IngestError),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

pub fn save_index(index: &InvertedIndex, path: &Path) -> Result<(), PersistError> {
    let mut out = String::new();
    for (token, postings) in index.entries() {
        out.push_str(token);
        out.push('\t');
        out.push_str(&postings.frequency().to_string());
        out.push('\t');
        for (i, id) in postings.ids().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&id.to_string());
        }
        out.push('\n');
    }
    write_atomic(path, &out)?;
    Ok(())
}

pub fn load_index(path: &Path, kind: TokenKind) -> Result<InvertedIndex, PersistError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        PersistError::Io(IngestError::Read {
            path: path.to_path_buf(),
            source,
        })
    })?;
    let parse_err = |line: u64, message: String| PersistError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut entries = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let mut fields = row.split('\t');
        let (token, freq, ids) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(t), Some(f), Some(i), None) => (t, f, i),
            _ => return Err(parse_err(line, "expected 3 tab-separated fields".into())),
        };
        let freq: usize = freq
            .parse()
            .map_err(|_| parse_err(line, format!("invalid frequency `{freq}`")))?;
        let ids: Vec<RecordId> = ids
            .split(',')
            .map(|s| {
                s.parse::<u64>()
                    .map(RecordId)
                    .map_err(|_| parse_err(line, format!("invalid id `{s}`")))
            })
            .collect::<Result<_, _>>()?;
        if ids.len() != freq {
            return Err(parse_err(
                line,
                format!("frequency {freq} does not match {} ids", ids.len()),
            ));
        }
        entries.push((token.to_string(), ids));
    }
    InvertedIndex::from_entries(kind, entries)
        .map_err(|e| parse_err(0, e.to_string()))
}
