//! Dataset loading and pipeline output files.
//!
//! Input datasets are UTF-8 text, either one address per line or CSV with a
//! configurable address column (and optional id column). Ids default to the
//! 1-based row order, so a file is its own stable id space. Invalid UTF-8
//! is replaced rather than rejected — dirty data is the expected input —
//! and counted in the load summary.
//!
//! Output files are tab-separated with a header line and are written
//! atomically (temp file in the target directory, then rename).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use addrlink_core::evalgen::TruthSet;
use addrlink_core::linkage::{CandidatePair, Decision, MatchResult};
use addrlink_core::{AddressRecord, RecordId, SimilarityScore};
use thiserror::Error;

pub const MATCH_HEADER: &str = "left_id\tright_id\tscore\tdecision";
pub const TRUTH_HEADER: &str = "corrupted_id\treference_id";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed row: {message}")]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: column `{column}` not found in header")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}:{line}: duplicate id {id} (first seen at line {first})")]
    DuplicateId {
        path: PathBuf,
        line: u64,
        id: u64,
        first: u64,
    },
}

/// CSV column selector: a 0-based index or a header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSel {
    Index(usize),
    Name(String),
}

impl FromStr for ColumnSel {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSel::Index(i),
            Err(_) => ColumnSel::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetFormat {
    /// One address per line; ids are 1-based line numbers.
    Lines,
    /// CSV with an address column and an optional explicit id column.
    /// A header row is expected whenever a column is selected by name.
    Csv {
        address: ColumnSel,
        id: Option<ColumnSel>,
    },
}

#[derive(Debug)]
pub struct LoadedDataset {
    pub records: Vec<AddressRecord>,
    /// Ids of records whose text normalised to nothing; they are loaded
    /// (and counted) but can never produce tokens or matches.
    pub blank: Vec<RecordId>,
    /// Lines containing invalid UTF-8 byte sequences (replaced, not fatal).
    pub invalid_utf8_lines: usize,
}

impl LoadedDataset {
    fn collect(records: Vec<AddressRecord>, invalid_utf8_lines: usize) -> Self {
        let blank = records.iter().filter(|r| r.is_blank()).map(|r| r.id).collect();
        LoadedDataset {
            records,
            blank,
            invalid_utf8_lines,
        }
    }
}

pub fn load_dataset(path: &Path, format: &DatasetFormat) -> Result<LoadedDataset, IngestError> {
    match format {
        DatasetFormat::Lines => load_lines(path),
        DatasetFormat::Csv { address, id } => load_csv(path, address, id.as_ref()),
    }
}

fn read_lossy(path: &Path) -> Result<(String, usize), IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    match String::from_utf8(bytes) {
        Ok(text) => Ok((text, 0)),
        Err(e) => {
            let text = String::from_utf8_lossy(e.as_bytes()).into_owned();
            let invalid = text
                .lines()
                .filter(|l| l.contains(char::REPLACEMENT_CHARACTER))
                .count();
            Ok((text, invalid))
        }
    }
}

fn load_lines(path: &Path) -> Result<LoadedDataset, IngestError> {
    let (text, invalid) = read_lossy(path)?;
    let mut rows: Vec<&str> = text.split('\n').collect();
    if text.ends_with('\n') {
        rows.pop();
    }
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, row)| AddressRecord::new(RecordId(i as u64 + 1), row.trim_end_matches('\r')))
        .collect();
    Ok(LoadedDataset::collect(records, invalid))
}

fn load_csv(
    path: &Path,
    address: &ColumnSel,
    id: Option<&ColumnSel>,
) -> Result<LoadedDataset, IngestError> {
    let (text, invalid) = read_lossy(path)?;
    let has_headers = matches!(address, ColumnSel::Name(_))
        || matches!(id, Some(ColumnSel::Name(_)));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .from_reader(text.as_bytes());

    let resolve = |sel: &ColumnSel, headers: &csv::StringRecord| -> Result<usize, IngestError> {
        match sel {
            ColumnSel::Index(i) => Ok(*i),
            ColumnSel::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| IngestError::MissingColumn {
                    path: path.to_path_buf(),
                    column: name.clone(),
                }),
        }
    };
    let headers = if has_headers {
        reader
            .headers()
            .map_err(|e| csv_error(path, &e))?
            .clone()
    } else {
        csv::StringRecord::new()
    };
    let address_col = resolve(address, &headers)?;
    let id_col = id.map(|sel| resolve(sel, &headers)).transpose()?;

    let mut records = Vec::new();
    let mut seen: BTreeMap<u64, u64> = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, &e))?;
        let line = row
            .position()
            .map(|p| p.line())
            .unwrap_or(i as u64 + 1 + has_headers as u64);
        let field = |col: usize, what: &str| -> Result<&str, IngestError> {
            row.get(col).ok_or_else(|| IngestError::Malformed {
                path: path.to_path_buf(),
                line,
                message: format!("{what} column {col} out of range ({} fields)", row.len()),
            })
        };
        let raw = field(address_col, "address")?;
        let id_value = match id_col {
            Some(col) => {
                let s = field(col, "id")?;
                s.trim().parse::<u64>().map_err(|_| IngestError::Malformed {
                    path: path.to_path_buf(),
                    line,
                    message: format!("invalid id `{s}`"),
                })?
            }
            None => records.len() as u64 + 1,
        };
        if let Some(&first) = seen.get(&id_value) {
            return Err(IngestError::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: id_value,
                first,
            });
        }
        seen.insert(id_value, line);
        records.push(AddressRecord::new(RecordId(id_value), raw));
    }
    Ok(LoadedDataset::collect(records, invalid))
}

fn csv_error(path: &Path, e: &csv::Error) -> IngestError {
    IngestError::Malformed {
        path: path.to_path_buf(),
        line: e
            .position()
            .map(|p| p.line())
            .unwrap_or_default(),
        message: e.to_string(),
    }
}

/// Writes content to `path` atomically: a temp file in the same directory,
/// flushed, then renamed over the target.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), IngestError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let write_err = |source: std::io::Error| IngestError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))
        .map_err(write_err)?;
    tmp.write_all(content.as_bytes()).map_err(write_err)?;
    tmp.flush().map_err(write_err)?;
    tmp.persist(path).map_err(|e| write_err(e.error))?;
    Ok(())
}

/// One line per result: `left_id  right_id  score  decision`, sorted as
/// produced by the pipeline. Rejected rows are kept only when
/// `include_rejected` is set; an empty result set yields a header-only
/// file.
pub fn write_matches(
    results: &[MatchResult],
    path: &Path,
    include_rejected: bool,
) -> Result<(), IngestError> {
    let mut out = String::with_capacity(64 + results.len() * 32);
    out.push_str(MATCH_HEADER);
    out.push('\n');
    for m in results {
        if m.decision == Decision::Rejected && !include_rejected {
            continue;
        }
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            m.pair.left,
            m.pair.right,
            m.score.to_fixed6(),
            m.decision
        ));
    }
    write_atomic(path, &out)
}

/// Reads a match file back. Scores are the exact 6-decimal values from the
/// file; `best_for_left` is not serialised and comes back unset.
pub fn read_matches(path: &Path) -> Result<Vec<MatchResult>, IngestError> {
    let (text, _) = read_lossy(path)?;
    let malformed = |line: u64, message: String| IngestError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut results = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let line = i as u64 + 1;
        if i == 0 {
            if row != MATCH_HEADER {
                return Err(malformed(line, format!("expected header `{MATCH_HEADER}`")));
            }
            continue;
        }
        let fields: Vec<&str> = row.split('\t').collect();
        if fields.len() != 4 {
            return Err(malformed(line, format!("expected 4 fields, got {}", fields.len())));
        }
        let parse_id = |s: &str, what: &str| -> Result<RecordId, IngestError> {
            s.parse::<u64>()
                .map(RecordId)
                .map_err(|_| malformed(line, format!("invalid {what} `{s}`")))
        };
        let decision = match fields[3] {
            "accepted" => Decision::Accepted,
            "rejected" => Decision::Rejected,
            "not_found" => Decision::NotFound,
            other => return Err(malformed(line, format!("unknown decision `{other}`"))),
        };
        results.push(MatchResult {
            pair: CandidatePair {
                left: parse_id(fields[0], "left id")?,
                right: parse_id(fields[1], "right id")?,
            },
            score: SimilarityScore::parse_decimal(fields[2])
                .map_err(|e| malformed(line, format!("invalid score `{}`: {e}", fields[2])))?,
            decision,
            best_for_left: false,
        });
    }
    Ok(results)
}

/// `corrupted_id  reference_id` pairs with a header line.
pub fn write_truth(truth: &TruthSet, path: &Path) -> Result<(), IngestError> {
    let mut out = String::with_capacity(32 + truth.len() * 12);
    out.push_str(TRUTH_HEADER);
    out.push('\n');
    for (c, r) in truth.iter() {
        out.push_str(&format!("{c}\t{r}\n"));
    }
    write_atomic(path, &out)
}

pub fn read_truth(path: &Path) -> Result<TruthSet, IngestError> {
    let (text, _) = read_lossy(path)?;
    let malformed = |line: u64, message: String| IngestError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut pairs = Vec::new();
    for (i, row) in text.lines().enumerate() {
        let line = i as u64 + 1;
        if i == 0 {
            if row != TRUTH_HEADER {
                return Err(malformed(line, format!("expected header `{TRUTH_HEADER}`")));
            }
            continue;
        }
        let (c, r) = row
            .split_once('\t')
            .ok_or_else(|| malformed(line, "expected 2 fields".to_string()))?;
        let parse = |s: &str| -> Result<RecordId, IngestError> {
            s.parse::<u64>()
                .map(RecordId)
                .map_err(|_| malformed(line, format!("invalid id `{s}`")))
        };
        pairs.push((parse(c)?, parse(r)?));
    }
    TruthSet::new(pairs).map_err(|e| malformed(0, e.to_string()))
}

/// One raw address per line, the `Lines` dataset format.
pub fn write_lines(records: &[AddressRecord], path: &Path) -> Result<(), IngestError> {
    let mut out = String::with_capacity(records.len() * 32);
    for r in records {
        debug_assert!(!r.raw.contains('\n'));
        out.push_str(&r.raw);
        out.push('\n');
    }
    write_atomic(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use addrlink_core::linkage::Decision;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn lines_files_load_in_order_with_blank_flagging() {
        let dir = tmp();
        let path = dir.path().join("db.txt");
        fs::write(&path, "513 Elizabeth St\n\n45 Queen Rd\n").unwrap();
        let ds = load_dataset(&path, &DatasetFormat::Lines).unwrap();
        assert_eq!(ds.records.len(), 3);
        assert_eq!(ds.records[0].id, RecordId(1));
        assert_eq!(ds.records[2].id, RecordId(3));
        assert_eq!(ds.blank, [RecordId(2)]);
        assert_eq!(ds.invalid_utf8_lines, 0);
    }

    #[test]
    fn invalid_utf8_is_replaced_and_counted() {
        let dir = tmp();
        let path = dir.path().join("db.txt");
        fs::write(&path, b"caf\xE9 street\nplain road\n").unwrap();
        let ds = load_dataset(&path, &DatasetFormat::Lines).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.invalid_utf8_lines, 1);
        // the replacement character acts as a separator under normalisation
        assert_eq!(ds.records[0].normalized().as_str(), "CAF STREET");
    }

    #[test]
    fn csv_by_name_and_explicit_ids() {
        let dir = tmp();
        let path = dir.path().join("db.csv");
        fs::write(&path, "id,addr\n10,513 Elizabeth St\n20,45 Queen Rd\n").unwrap();
        let format = DatasetFormat::Csv {
            address: "addr".parse().unwrap(),
            id: Some("id".parse().unwrap()),
        };
        let ds = load_dataset(&path, &format).unwrap();
        assert_eq!(ds.records[0].id, RecordId(10));
        assert_eq!(ds.records[1].id, RecordId(20));
        assert_eq!(ds.records[1].raw, "45 Queen Rd");
    }

    #[test]
    fn csv_duplicate_ids_name_both_lines() {
        let dir = tmp();
        let path = dir.path().join("db.csv");
        fs::write(&path, "id,addr\n10,A St\n10,B Rd\n").unwrap();
        let format = DatasetFormat::Csv {
            address: "addr".parse().unwrap(),
            id: Some("id".parse().unwrap()),
        };
        let err = load_dataset(&path, &format).unwrap_err().to_string();
        assert!(err.contains(":3:"), "line missing in {err}");
        assert!(err.contains("duplicate id 10"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn csv_by_index_without_header() {
        let dir = tmp();
        let path = dir.path().join("db.csv");
        fs::write(&path, "513 Elizabeth St,extra\n45 Queen Rd,x\n").unwrap();
        let format = DatasetFormat::Csv {
            address: "0".parse().unwrap(),
            id: None,
        };
        let ds = load_dataset(&path, &format).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.records[0].raw, "513 Elizabeth St");
        assert_eq!(ds.records[0].id, RecordId(1));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tmp();
        let path = dir.path().join("db.csv");
        fs::write(&path, "id,addr\n10,A St\nnot-a-number,B Rd\n").unwrap();
        let format = DatasetFormat::Csv {
            address: "addr".parse().unwrap(),
            id: Some("id".parse().unwrap()),
        };
        let err = load_dataset(&path, &format).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
        assert!(err.contains("invalid id"), "{err}");

        let missing = DatasetFormat::Csv {
            address: "nope".parse().unwrap(),
            id: None,
        };
        let err = load_dataset(&path, &missing).unwrap_err().to_string();
        assert!(err.contains("column `nope` not found"), "{err}");
    }

    #[test]
    fn match_file_round_trip() {
        let dir = tmp();
        let path = dir.path().join("m.tsv");
        let results = vec![
            MatchResult {
                pair: CandidatePair {
                    left: RecordId(1),
                    right: RecordId(10),
                },
                score: SimilarityScore::from_ratio(3, 4),
                decision: Decision::Accepted,
                best_for_left: true,
            },
            MatchResult {
                pair: CandidatePair {
                    left: RecordId(2),
                    right: RecordId(20),
                },
                score: SimilarityScore::from_ratio(1, 2),
                decision: Decision::Rejected,
                best_for_left: false,
            },
            MatchResult {
                pair: CandidatePair {
                    left: RecordId(3),
                    right: RecordId(30),
                },
                score: SimilarityScore::from_ratio(2, 3),
                decision: Decision::NotFound,
                best_for_left: false,
            },
        ];
        write_matches(&results, &path, true).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "left_id\tright_id\tscore\tdecision\n\
             1\t10\t0.750000\taccepted\n\
             2\t20\t0.500000\trejected\n\
             3\t30\t0.666667\tnot_found\n"
        );
        let back = read_matches(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0].pair, results[0].pair);
        assert_eq!(back[0].score, SimilarityScore::from_ratio(3, 4));
        assert_eq!(back[2].decision, Decision::NotFound);

        // re-serialising the parsed rows reproduces the file byte for byte
        write_matches(&back, dir.path().join("m2.tsv").as_path(), true).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("m2.tsv")).unwrap(), text);

        // default output drops rejected rows; empty output is header-only
        write_matches(&results, &path, false).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        write_matches(&[], &path, false).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "left_id\tright_id\tscore\tdecision\n");
    }

    #[test]
    fn truth_file_round_trip() {
        let dir = tmp();
        let path = dir.path().join("truth.tsv");
        let truth = TruthSet::new(vec![
            (RecordId(2), RecordId(20)),
            (RecordId(1), RecordId(10)),
        ])
        .unwrap();
        write_truth(&truth, &path).unwrap();
        let back = read_truth(&path).unwrap();
        assert_eq!(back, truth);
    }

    #[test]
    fn lines_round_trip_preserves_ids_and_text() {
        let dir = tmp();
        let path = dir.path().join("out.txt");
        let records = vec![
            AddressRecord::new(RecordId(1), "513 Elizabeth St"),
            AddressRecord::new(RecordId(2), "45 Queen Rd"),
        ];
        write_lines(&records, &path).unwrap();
        let back = load_dataset(&path, &DatasetFormat::Lines).unwrap();
        assert_eq!(back.records, records);
    }

    #[test]
    fn unreadable_file_is_a_clean_error() {
        let err = load_dataset(Path::new("/nonexistent/db.txt"), &DatasetFormat::Lines)
            .unwrap_err()
            .to_string();
        assert!(err.contains("cannot read"), "{err}");
    }
}
