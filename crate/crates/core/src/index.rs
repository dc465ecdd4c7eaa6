//! Inverted indexes from token bags.
//!
//! An index maps every distinct token of a dataset to the sorted list of
//! record ids containing it; the list length is the token's recurrency
//! (frequency). Indexes feed two paths: the single-query shortlist
//! ([`query_candidates`]) and the batch join performed by the linkage
//! pipeline. [`InvertedIndex::prune`] removes tokens recurring in more than
//! `k` records so that only distinctive tokens act as blocking keys.
//!
//! Builds may be partitioned across workers and the per-token postings
//! merged; once built an index is immutable and safe for unsynchronised
//! concurrent reads.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::record::{AddressRecord, RecordId};
use crate::tokenizer::{tokens, TokenBag, TokenKind};

/// Sorted, duplicate-free list of record ids for one token. A record is
/// listed at most once per token regardless of how many times the token
/// occurs in it; round 1 only needs the nonzero-overlap test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingList {
    ids: Vec<RecordId>,
}

impl PostingList {
    pub fn ids(&self) -> &[RecordId] {
        &self.ids
    }

    pub fn frequency(&self) -> usize {
        self.ids.len()
    }
}

/// Map from token to posting list over one token kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvertedIndex {
    kind: TokenKind,
    entries: BTreeMap<String, PostingList>,
}

impl InvertedIndex {
    pub fn token_kind(&self) -> TokenKind {
        self.kind
    }

    pub fn num_tokens(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&PostingList> {
        self.entries.get(token)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &PostingList)> {
        self.entries.iter().map(|(t, p)| (t.as_str(), p))
    }

    /// Sum of all posting-list lengths.
    pub fn total_postings(&self) -> u64 {
        self.entries.values().map(|p| p.frequency() as u64).sum()
    }

    /// Drops every token recurring in more than `max_freq` records. The
    /// comparison is inclusive: frequency equal to `max_freq` survives.
    pub fn prune(mut self, max_freq: u32) -> Self {
        self.entries
            .retain(|_, postings| postings.frequency() <= max_freq as usize);
        self
    }

    /// Rebuilds an index from `(token, ids)` entries, e.g. when loading a
    /// persisted index. Tokens must be strictly ascending and every id list
    /// sorted, duplicate-free and non-empty.
    pub fn from_entries(
        kind: TokenKind,
        entries: Vec<(String, Vec<RecordId>)>,
    ) -> Result<Self, IndexError> {
        let mut map = BTreeMap::new();
        let mut prev: Option<String> = None;
        for (token, ids) in entries {
            if let Some(p) = &prev {
                if *p >= token {
                    return Err(IndexError::UnsortedTokens { token });
                }
            }
            if ids.is_empty() {
                return Err(IndexError::EmptyPostings { token });
            }
            if !ids.windows(2).all(|w| w[0] < w[1]) {
                return Err(IndexError::UnsortedPostings { token });
            }
            prev = Some(token.clone());
            map.insert(token, PostingList { ids });
        }
        Ok(InvertedIndex { kind, entries: map })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexError {
    DuplicateRecordId(RecordId),
    UnsortedTokens { token: String },
    UnsortedPostings { token: String },
    EmptyPostings { token: String },
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::DuplicateRecordId(id) => write!(f, "duplicate record id {id}"),
            IndexError::UnsortedTokens { token } => {
                write!(f, "index entries out of order at token `{token}`")
            }
            IndexError::UnsortedPostings { token } => {
                write!(f, "unsorted or duplicate posting ids for token `{token}`")
            }
            IndexError::EmptyPostings { token } => {
                write!(f, "empty posting list for token `{token}`")
            }
        }
    }
}

impl core::error::Error for IndexError {}

/// Builds the inverted index of `records` over `kind` tokens. Each record
/// contributes its id once per distinct token. Duplicate record ids are
/// rejected.
pub fn build_index(records: &[AddressRecord], kind: TokenKind) -> Result<InvertedIndex, IndexError> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.id) {
            return Err(IndexError::DuplicateRecordId(r.id));
        }
    }

    let mut entries: BTreeMap<String, Vec<RecordId>> = BTreeMap::new();
    for r in records {
        let bag = tokens(kind, r.normalized());
        for (token, _) in bag.runs() {
            entries.entry(token.to_string()).or_default().push(r.id);
        }
    }
    // Input order need not follow id order; posting lists are sorted once
    // at the end. Ids are unique so no dedup is needed.
    let entries = entries
        .into_iter()
        .map(|(token, mut ids)| {
            ids.sort_unstable();
            (token, PostingList { ids })
        })
        .collect();
    Ok(InvertedIndex { kind, entries })
}

/// Single-query candidate counts: every query token present in the index
/// adds its query-side multiplicity to each id on its posting list. Tokens
/// unknown to the index are ignored; an all-unknown query yields an empty
/// map. A positive count means the query and the record share at least one
/// token.
pub fn query_candidates(idx: &InvertedIndex, query: &TokenBag) -> BTreeMap<RecordId, u64> {
    assert_eq!(
        idx.token_kind(),
        query.kind(),
        "query bag kind must match the index"
    );
    let mut overlap: BTreeMap<RecordId, u64> = BTreeMap::new();
    for (token, count) in query.runs() {
        if let Some(postings) = idx.get(token) {
            for &id in postings.ids() {
                *overlap.entry(id).or_insert(0) += u64::from(count);
            }
        }
    }
    overlap
}
