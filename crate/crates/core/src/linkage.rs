//! The batch linkage pipeline.
//!
//! Two datasets are indexed over the round-1 token kind, both indexes are
//! recurrency-pruned, and the indexes are joined on their common tokens.
//! Every cross pair selected by a surviving token becomes a candidate
//! (deduplicated globally, as candidate generation materialises pairs
//! before scoring so no pair is scored twice). Candidates are then scored
//! with the round-2 similarity and decided:
//!
//! * reference mode ([`link_reference`]) accepts a pair when its score
//!   strictly exceeds `tau` and flags the best accepted match per left
//!   record;
//! * arbitrary mode ([`link_arbitrary`]) ranks each left record's
//!   candidates by score and accepts the first of the top `n` whose numeric
//!   tokens are consistent with the query, reporting `NotFound` otherwise.
//!
//! Join and pair generation may be partitioned by token and scoring by left
//! id; all stages are pure over immutable inputs, and output is
//! deterministic regardless of worker count.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::iter::Peekable;

use crate::index::{build_index, IndexError, InvertedIndex, PostingList};
use crate::record::{AddressRecord, RecordId};
use crate::similarity::{
    bag_similarity, numeric_consistent, ConfigError, LinkageConfig, SimilarityScore,
};
use crate::tokenizer::{tokens, TokenBag, TokenKind};

/// A (left, right) id pair surviving round-1 blocking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidatePair {
    pub left: RecordId,
    pub right: RecordId,
}

/// Outcome attached to a scored pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Accepted,
    Rejected,
    /// Arbitrary mode only: none of the top-ranked candidates for this left
    /// record had consistent numeric tokens.
    NotFound,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::Accepted => "accepted",
            Decision::Rejected => "rejected",
            Decision::NotFound => "not_found",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A candidate pair with its round-2 score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoredPair {
    pub pair: CandidatePair,
    pub score: SimilarityScore,
}

/// A decided pair. `best_for_left` marks the highest-scoring accepted match
/// of its left record (reference mode) or the emitted row (arbitrary mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchResult {
    pub pair: CandidatePair,
    pub score: SimilarityScore,
    pub decision: Decision,
    pub best_for_left: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkageError {
    Index(IndexError),
    Config(ConfigError),
    /// A candidate pair references an id absent from the records; this
    /// indicates data corruption upstream.
    DanglingId { id: RecordId, side: &'static str },
    EmptyTaus,
    TausNotAscending,
}

impl fmt::Display for LinkageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkageError::Index(e) => write!(f, "index error: {e}"),
            LinkageError::Config(e) => write!(f, "invalid config: {e}"),
            LinkageError::DanglingId { id, side } => {
                write!(f, "candidate pair references unknown {side} id {id}")
            }
            LinkageError::EmptyTaus => write!(f, "threshold sweep needs at least one tau"),
            LinkageError::TausNotAscending => {
                write!(f, "sweep thresholds must be strictly ascending in (0, 1]")
            }
        }
    }
}

impl core::error::Error for LinkageError {}

impl From<IndexError> for LinkageError {
    fn from(e: IndexError) -> Self {
        LinkageError::Index(e)
    }
}

impl From<ConfigError> for LinkageError {
    fn from(e: ConfigError) -> Self {
        LinkageError::Config(e)
    }
}

/// One token present in both indexes, with both posting lists.
#[derive(Debug, Clone, Copy)]
pub struct JoinedToken<'a> {
    pub token: &'a str,
    pub left: &'a PostingList,
    pub right: &'a PostingList,
}

/// Streams the tokens common to two pruned indexes in ascending token
/// order; tokens present in only one index are skipped.
pub fn join_indexes<'a>(left: &'a InvertedIndex, right: &'a InvertedIndex) -> JoinIter<'a> {
    assert_eq!(
        left.token_kind(),
        right.token_kind(),
        "joined indexes must share a token kind"
    );
    JoinIter {
        left: (Box::new(left.entries()) as IndexEntries<'a>).peekable(),
        right: (Box::new(right.entries()) as IndexEntries<'a>).peekable(),
    }
}

type IndexEntries<'a> = Box<dyn Iterator<Item = (&'a str, &'a PostingList)> + 'a>;

pub struct JoinIter<'a> {
    left: Peekable<IndexEntries<'a>>,
    right: Peekable<IndexEntries<'a>>,
}

impl<'a> Iterator for JoinIter<'a> {
    type Item = JoinedToken<'a>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (&(lt, lp), &(rt, rp)) = match (self.left.peek(), self.right.peek()) {
                (Some(l), Some(r)) => (l, r),
                _ => return None,
            };
            match lt.cmp(rt) {
                Ordering::Equal => {
                    self.left.next();
                    self.right.next();
                    return Some(JoinedToken {
                        token: lt,
                        left: lp,
                        right: rp,
                    });
                }
                Ordering::Less => {
                    self.left.next();
                }
                Ordering::Greater => {
                    self.right.next();
                }
            }
        }
    }
}

/// Materialises the deduplicated candidate set: the union over joined
/// tokens of left x right posting cross products. Returned ascending by
/// (left, right) with every pair exactly once, however many tokens
/// co-selected it.
pub fn candidate_pairs<'a>(joined: impl IntoIterator<Item = JoinedToken<'a>>) -> Vec<CandidatePair> {
    let mut pairs = Vec::new();
    for jt in joined {
        for &l in jt.left.ids() {
            for &r in jt.right.ids() {
                pairs.push(CandidatePair { left: l, right: r });
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Scores candidate pairs against the two record sets. Round-2 bags are
/// built once per record up front, so individual pairs can be scored
/// cheaply and in parallel: the scorer is immutable and `Sync`.
pub struct PairScorer<'a> {
    left: RecordLookup<'a>,
    right: RecordLookup<'a>,
    left_bags: Vec<TokenBag>,
    right_bags: Vec<TokenBag>,
}

struct RecordLookup<'a> {
    records: &'a [AddressRecord],
    by_id: BTreeMap<RecordId, usize>,
    side: &'static str,
}

impl<'a> RecordLookup<'a> {
    fn new(records: &'a [AddressRecord], side: &'static str) -> Self {
        let by_id = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id, i))
            .collect();
        RecordLookup {
            records,
            by_id,
            side,
        }
    }

    fn index_of(&self, id: RecordId) -> Result<usize, LinkageError> {
        self.by_id.get(&id).copied().ok_or(LinkageError::DanglingId {
            id,
            side: self.side,
        })
    }

    fn get(&self, id: RecordId) -> Result<&'a AddressRecord, LinkageError> {
        self.index_of(id).map(|i| &self.records[i])
    }
}

impl<'a> PairScorer<'a> {
    pub fn new(left: &'a [AddressRecord], right: &'a [AddressRecord], cfg: &LinkageConfig) -> Self {
        let bags = |records: &[AddressRecord]| {
            records
                .iter()
                .map(|r| tokens(cfg.round2_kind, r.normalized()))
                .collect()
        };
        PairScorer {
            left: RecordLookup::new(left, "left"),
            right: RecordLookup::new(right, "right"),
            left_bags: bags(left),
            right_bags: bags(right),
        }
    }

    pub fn score(&self, pair: CandidatePair) -> Result<ScoredPair, LinkageError> {
        let l = self.left.index_of(pair.left)?;
        let r = self.right.index_of(pair.right)?;
        let score = bag_similarity(&self.left_bags[l], &self.right_bags[r]);
        Ok(ScoredPair { pair, score })
    }
}

/// Scores every candidate pair with the round-2 similarity of the two
/// normalised texts. A pair referencing an unknown id is a hard error.
pub fn score_pairs(
    pairs: &[CandidatePair],
    left: &[AddressRecord],
    right: &[AddressRecord],
    cfg: &LinkageConfig,
) -> Result<Vec<ScoredPair>, LinkageError> {
    let scorer = PairScorer::new(left, right, cfg);
    pairs.iter().map(|&p| scorer.score(p)).collect()
}

/// Orders results by (left id, score descending, right id).
fn sort_scored(scored: &mut [ScoredPair]) {
    scored.sort_unstable_by(|a, b| {
        a.pair
            .left
            .cmp(&b.pair.left)
            .then_with(|| b.score.cmp(&a.score))
            .then_with(|| a.pair.right.cmp(&b.pair.right))
    });
}

/// Reference-mode decisions: accept when the score strictly exceeds `tau`,
/// flag the best accepted match per left record. Returns one row per
/// candidate pair, accepted and rejected alike, sorted by
/// (left, score descending, right); callers typically surface only the
/// accepted rows.
pub fn decide_reference(mut scored: Vec<ScoredPair>, cfg: &LinkageConfig) -> Vec<MatchResult> {
    sort_scored(&mut scored);
    let mut results = Vec::with_capacity(scored.len());
    let mut best_seen_for: Option<RecordId> = None;
    for sp in scored {
        let accepted = sp.score > cfg.tau;
        let best = accepted && best_seen_for != Some(sp.pair.left);
        if best {
            best_seen_for = Some(sp.pair.left);
        }
        results.push(MatchResult {
            pair: sp.pair,
            score: sp.score,
            decision: if accepted {
                Decision::Accepted
            } else {
                Decision::Rejected
            },
            best_for_left: best,
        });
    }
    results
}

/// Arbitrary-mode decisions. Per left record, candidates are ranked by
/// score descending (ties by ascending right id) and the top `n` scanned in
/// order; the first whose numeric tokens are consistent with the left
/// record decides the outcome. If none qualifies the left record yields a
/// single `NotFound` row carrying its top-ranked candidate.
pub fn decide_arbitrary(
    mut scored: Vec<ScoredPair>,
    left: &[AddressRecord],
    right: &[AddressRecord],
    cfg: &LinkageConfig,
) -> Result<Vec<MatchResult>, LinkageError> {
    sort_scored(&mut scored);
    let left_lookup = RecordLookup::new(left, "left");
    let right_lookup = RecordLookup::new(right, "right");
    let mut right_numeric: BTreeMap<RecordId, TokenBag> = BTreeMap::new();

    let mut results = Vec::new();
    let mut i = 0;
    while i < scored.len() {
        let group_left = scored[i].pair.left;
        let mut end = i;
        while end < scored.len() && scored[end].pair.left == group_left {
            end += 1;
        }

        let left_numeric = tokens(
            TokenKind::Numeric,
            left_lookup.get(group_left)?.normalized(),
        );
        let mut chosen = None;
        for sp in &scored[i..end.min(i + cfg.top_n as usize)] {
            let rn = match right_numeric.entry(sp.pair.right) {
                alloc::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
                alloc::collections::btree_map::Entry::Vacant(v) => v.insert(tokens(
                    TokenKind::Numeric,
                    right_lookup.get(sp.pair.right)?.normalized(),
                )),
            };
            if numeric_consistent(&left_numeric, rn) {
                chosen = Some(*sp);
                break;
            }
        }

        results.push(match chosen {
            Some(sp) => MatchResult {
                pair: sp.pair,
                score: sp.score,
                decision: Decision::Accepted,
                best_for_left: true,
            },
            None => MatchResult {
                pair: scored[i].pair,
                score: scored[i].score,
                decision: Decision::NotFound,
                best_for_left: false,
            },
        });
        i = end;
    }
    Ok(results)
}

fn blocked_candidates(
    left: &[AddressRecord],
    right: &[AddressRecord],
    cfg: &LinkageConfig,
) -> Result<Vec<CandidatePair>, LinkageError> {
    let left_idx = build_index(left, cfg.round1_kind)?.prune(cfg.max_token_freq);
    let right_idx = build_index(right, cfg.round1_kind)?.prune(cfg.max_token_freq);
    Ok(candidate_pairs(join_indexes(&left_idx, &right_idx)))
}

/// Full reference-mode pipeline: index, prune, join, dedup, score, decide.
pub fn link_reference(
    left: &[AddressRecord],
    right: &[AddressRecord],
    cfg: &LinkageConfig,
) -> Result<Vec<MatchResult>, LinkageError> {
    cfg.validate()?;
    let pairs = blocked_candidates(left, right, cfg)?;
    let scored = score_pairs(&pairs, left, right, cfg)?;
    Ok(decide_reference(scored, cfg))
}

/// Full arbitrary-mode pipeline: as [`link_reference`] but decided by the
/// ranked numeric-consistency scan instead of a bare threshold.
pub fn link_arbitrary(
    left: &[AddressRecord],
    right: &[AddressRecord],
    cfg: &LinkageConfig,
) -> Result<Vec<MatchResult>, LinkageError> {
    cfg.validate()?;
    let pairs = blocked_candidates(left, right, cfg)?;
    let scored = score_pairs(&pairs, left, right, cfg)?;
    decide_arbitrary(scored, left, right, cfg)
}

/// Per-threshold accepted counts from one scored run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepEntry {
    pub tau: SimilarityScore,
    pub accepted_count: usize,
    /// Accepted at the lowest threshold but not at this one — the
    /// false-negative proxy when no ground truth exists. Empty for the
    /// lowest threshold itself.
    pub lost_vs_lowest: Vec<CandidatePair>,
}

/// Runs the reference pipeline once (scores do not depend on `tau`) and
/// derives each threshold's accepted set by filtering. Thresholds must be
/// strictly ascending in `(0, 1]`; accepted sets are nested downward.
pub fn threshold_sweep(
    left: &[AddressRecord],
    right: &[AddressRecord],
    cfg: &LinkageConfig,
    taus: &[SimilarityScore],
) -> Result<SweepReport, LinkageError> {
    if taus.is_empty() {
        return Err(LinkageError::EmptyTaus);
    }
    if taus.iter().any(|t| t.is_zero()) || !taus.windows(2).all(|w| w[0] < w[1]) {
        return Err(LinkageError::TausNotAscending);
    }
    cfg.validate()?;

    let pairs = blocked_candidates(left, right, cfg)?;
    let mut scored = score_pairs(&pairs, left, right, cfg)?;
    sort_scored(&mut scored);

    let accepted_at = |tau: SimilarityScore| -> Vec<CandidatePair> {
        let mut v: Vec<CandidatePair> = scored
            .iter()
            .filter(|sp| sp.score > tau)
            .map(|sp| sp.pair)
            .collect();
        v.sort_unstable();
        v
    };

    let lowest = accepted_at(taus[0]);
    let entries = taus
        .iter()
        .map(|&tau| {
            let accepted = accepted_at(tau);
            let lost_vs_lowest = lowest
                .iter()
                .filter(|p| accepted.binary_search(p).is_err())
                .copied()
                .collect();
            SweepEntry {
                tau,
                accepted_count: accepted.len(),
                lost_vs_lowest,
            }
        })
        .collect();
    Ok(SweepReport { entries })
}
