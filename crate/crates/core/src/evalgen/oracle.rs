//! All-pairs oracle for the linkage pipeline.
//!
//! Implements the same candidate rule, round-2 score and decision rules as
//! the production pipeline, but by exhaustive pairwise evaluation with its
//! own frequency counting, its own closed-form scoring
//! (`2m / (|a| + |b|)` from per-character counts) and its own ranking scan.
//! It shares only the tokenizer and the plain data types, so agreement with
//! the pipeline checks the indexing, joining, deduplication, merge-scoring
//! and decision code against an independent route.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::linkage::{CandidatePair, Decision, MatchResult};
use crate::record::{AddressRecord, RecordId};
use crate::similarity::{LinkageConfig, SimilarityScore};
use crate::tokenizer::tokens;

/// Default ceiling on `|left| * |right|`.
pub const DEFAULT_PAIR_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    Reference,
    Arbitrary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    PairCapExceeded { pairs: u64, cap: u64 },
    DuplicateRecordId(RecordId),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::PairCapExceeded { pairs, cap } => {
                write!(f, "{pairs} pairs exceed the brute-force cap of {cap}")
            }
            OracleError::DuplicateRecordId(id) => write!(f, "duplicate record id {id}"),
        }
    }
}

impl core::error::Error for OracleError {}

struct OracleRecord<'a> {
    record: &'a AddressRecord,
    round1: BTreeSet<String>,
    round2_counts: BTreeMap<String, u64>,
    round2_size: u64,
    numeric_counts: BTreeMap<&'a str, u64>,
    numeric_size: u64,
}

fn prepare<'a>(
    records: &'a [AddressRecord],
    cfg: &LinkageConfig,
) -> Result<Vec<OracleRecord<'a>>, OracleError> {
    let mut ids = BTreeSet::new();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        if !ids.insert(r.id) {
            return Err(OracleError::DuplicateRecordId(r.id));
        }
        let round1 = tokens(cfg.round1_kind, r.normalized())
            .runs()
            .map(|(t, _)| String::from(t))
            .collect();
        // Round-2 counts assembled directly from the token stream rather
        // than through the sorted-merge path.
        let mut round2_counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut round2_size = 0u64;
        for (t, c) in tokens(cfg.round2_kind, r.normalized()).runs() {
            *round2_counts.entry(String::from(t)).or_insert(0) += u64::from(c);
            round2_size += u64::from(c);
        }
        let mut numeric_counts: BTreeMap<&str, u64> = BTreeMap::new();
        let mut numeric_size = 0u64;
        for w in r.normalized().words() {
            if w.bytes().all(|b| b.is_ascii_digit()) {
                *numeric_counts.entry(w).or_insert(0) += 1;
                numeric_size += 1;
            }
        }
        out.push(OracleRecord {
            record: r,
            round1,
            round2_counts,
            round2_size,
            numeric_counts,
            numeric_size,
        });
    }
    Ok(out)
}

fn token_frequencies<'a>(prepared: &'a [OracleRecord<'a>]) -> BTreeMap<&'a str, u32> {
    let mut freq: BTreeMap<&str, u32> = BTreeMap::new();
    for p in prepared {
        for t in &p.round1 {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    freq
}

fn closed_form_score(a: &OracleRecord<'_>, b: &OracleRecord<'_>) -> SimilarityScore {
    let mut m = 0u64;
    for (t, ca) in &a.round2_counts {
        if let Some(cb) = b.round2_counts.get(t) {
            m += ca.min(cb);
        }
    }
    let total = a.round2_size + b.round2_size;
    if total == 0 {
        SimilarityScore::ZERO
    } else {
        SimilarityScore::from_ratio(2 * m, total)
    }
}

fn numeric_submultiset(a: &BTreeMap<&str, u64>, b: &BTreeMap<&str, u64>) -> bool {
    a.iter().all(|(t, ca)| b.get(t).copied().unwrap_or(0) >= *ca)
}

/// Exhaustive all-pairs linkage with the pipeline's semantics. Refuses to
/// run when `|left| * |right|` exceeds `pair_cap`.
pub fn brute_force_link(
    left: &[AddressRecord],
    right: &[AddressRecord],
    cfg: &LinkageConfig,
    mode: LinkMode,
    pair_cap: u64,
) -> Result<Vec<MatchResult>, OracleError> {
    let pairs = left.len() as u64 * right.len() as u64;
    if pairs > pair_cap {
        return Err(OracleError::PairCapExceeded {
            pairs,
            cap: pair_cap,
        });
    }
    let lefts = prepare(left, cfg)?;
    let rights = prepare(right, cfg)?;
    let left_freq = token_frequencies(&lefts);
    let right_freq = token_frequencies(&rights);
    let k = cfg.max_token_freq;

    // score every pair surviving the shared-distinctive-token rule
    let mut scored: Vec<(RecordId, RecordId, SimilarityScore)> = Vec::new();
    for l in &lefts {
        for r in &rights {
            let is_candidate = l.round1.iter().any(|t| {
                r.round1.contains(t)
                    && left_freq[t.as_str()] <= k
                    && right_freq[t.as_str()] <= k
            });
            if is_candidate {
                scored.push((l.record.id, r.record.id, closed_form_score(l, r)));
            }
        }
    }
    scored.sort_unstable_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| b.2.cmp(&a.2))
            .then_with(|| a.1.cmp(&b.1))
    });

    let results = match mode {
        LinkMode::Reference => {
            let mut best_seen: Option<RecordId> = None;
            scored
                .into_iter()
                .map(|(l, r, score)| {
                    let accepted = score > cfg.tau;
                    let best = accepted && best_seen != Some(l);
                    if best {
                        best_seen = Some(l);
                    }
                    MatchResult {
                        pair: CandidatePair { left: l, right: r },
                        score,
                        decision: if accepted {
                            Decision::Accepted
                        } else {
                            Decision::Rejected
                        },
                        best_for_left: best,
                    }
                })
                .collect()
        }
        LinkMode::Arbitrary => {
            let numeric_of = |records: &[OracleRecord<'_>], id: RecordId| -> usize {
                records.iter().position(|p| p.record.id == id).unwrap()
            };
            let mut out = Vec::new();
            let mut i = 0;
            while i < scored.len() {
                let group_left = scored[i].0;
                let mut end = i;
                while end < scored.len() && scored[end].0 == group_left {
                    end += 1;
                }
                let l = &lefts[numeric_of(&lefts, group_left)];
                let mut chosen = None;
                for &(_, rid, score) in scored[i..end].iter().take(cfg.top_n as usize) {
                    let r = &rights[numeric_of(&rights, rid)];
                    let consistent = if l.numeric_size <= r.numeric_size {
                        numeric_submultiset(&l.numeric_counts, &r.numeric_counts)
                    } else {
                        numeric_submultiset(&r.numeric_counts, &l.numeric_counts)
                    };
                    if consistent {
                        chosen = Some((rid, score));
                        break;
                    }
                }
                out.push(match chosen {
                    Some((rid, score)) => MatchResult {
                        pair: CandidatePair {
                            left: group_left,
                            right: rid,
                        },
                        score,
                        decision: Decision::Accepted,
                        best_for_left: true,
                    },
                    None => MatchResult {
                        pair: CandidatePair {
                            left: group_left,
                            right: scored[i].1,
                        },
                        score: scored[i].2,
                        decision: Decision::NotFound,
                        best_for_left: false,
                    },
                });
                i = end;
            }
            out
        }
    };
    Ok(results)
}
