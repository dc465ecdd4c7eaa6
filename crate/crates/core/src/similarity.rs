//! Scoring between token bags.
//!
//! The shipped similarity is the common-over-total ratio of a single
//! synchronised pass over two sorted bags: matching tokens add 2 to both
//! the common and the total count, non-matching tokens add 1 to the total,
//! so the result is `2m / (|a| + |b|)` where `m` is the multiset
//! intersection size. It runs in `O(|a| + |b|)` and is exposed as
//! [`bag_similarity`] and as the [`Dice`] scorer; the set-theoretic
//! intersection-over-union form is available as [`Jaccard`] behind the same
//! [`BagScorer`] seam. Both are monotone transforms of each other, so they
//! rank candidates identically and differ only in threshold calibration.
//!
//! Scores are exact reduced fractions, which keeps comparisons, sorting and
//! 6-decimal serialisation fully deterministic.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;

use crate::record::AddressRecord;
use crate::tokenizer::{tokens, TokenBag, TokenKind};

/// A similarity in `[0, 1]`, stored as an exact reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimilarityScore {
    num: u64,
    den: u64,
}

impl SimilarityScore {
    pub const ZERO: SimilarityScore = SimilarityScore { num: 0, den: 1 };
    pub const ONE: SimilarityScore = SimilarityScore { num: 1, den: 1 };

    /// Builds `num/den` reduced to lowest terms. Panics if `den` is zero or
    /// the ratio exceeds 1.
    pub fn from_ratio(num: u64, den: u64) -> Self {
        assert!(den > 0, "similarity denominator must be positive");
        assert!(num <= den, "similarity {num}/{den} exceeds 1");
        let g = gcd(num, den);
        SimilarityScore {
            num: num / g,
            den: den / g,
        }
    }

    pub fn ratio(&self) -> (u64, u64) {
        (self.num, self.den)
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    /// Decimal rendering with exactly six fractional digits, rounding
    /// half-to-even on exact ties.
    pub fn to_fixed6(&self) -> String {
        let scaled = self.num as u128 * 1_000_000;
        let den = self.den as u128;
        let mut q = scaled / den;
        let r = scaled % den;
        match (2 * r).cmp(&den) {
            Ordering::Greater => q += 1,
            Ordering::Equal if q % 2 == 1 => q += 1,
            _ => {}
        }
        alloc::format!("{}.{:06}", q / 1_000_000, q % 1_000_000)
    }

    /// Parses a plain decimal such as `0.7`, `1`, or `0.843750` into the
    /// exact fraction it denotes.
    pub fn parse_decimal(s: &str) -> Result<Self, ParseScoreError> {
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseScoreError::Empty);
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(ParseScoreError::InvalidDigit);
        }
        if frac_part.len() > 18 {
            return Err(ParseScoreError::TooManyDigits);
        }
        let int: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| ParseScoreError::OutOfRange)?
        };
        let den = 10u64.pow(frac_part.len() as u32);
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| ParseScoreError::OutOfRange)?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or(ParseScoreError::OutOfRange)?;
        if num > den {
            return Err(ParseScoreError::OutOfRange);
        }
        Ok(SimilarityScore::from_ratio(num, den))
    }
}

impl PartialOrd for SimilarityScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimilarityScore {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for SimilarityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fixed6())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b.max(1);
    }
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseScoreError {
    Empty,
    InvalidDigit,
    TooManyDigits,
    OutOfRange,
}

impl fmt::Display for ParseScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseScoreError::Empty => write!(f, "empty similarity value"),
            ParseScoreError::InvalidDigit => write!(f, "similarity must be a plain decimal"),
            ParseScoreError::TooManyDigits => write!(f, "more than 18 fractional digits"),
            ParseScoreError::OutOfRange => write!(f, "similarity must lie in [0, 1]"),
        }
    }
}

impl core::error::Error for ParseScoreError {}

/// Tunables of a linkage run.
#[derive(Debug, Clone)]
pub struct LinkageConfig {
    /// Acceptance threshold for reference-mode linkage; a pair is accepted
    /// when its score strictly exceeds `tau`.
    pub tau: SimilarityScore,
    /// Recurrency cutoff `k`: index tokens occurring in more than `k`
    /// records are not used as blocking keys. Inclusive (frequency == k
    /// survives).
    pub max_token_freq: u32,
    /// Token kind used for blocking (round 1).
    pub round1_kind: TokenKind,
    /// Token kind used for scoring shortlisted pairs (round 2).
    pub round2_kind: TokenKind,
    /// Number of top-ranked candidates scanned for numeric consistency when
    /// linking arbitrary datasets.
    pub top_n: u32,
}

impl Default for LinkageConfig {
    fn default() -> Self {
        LinkageConfig {
            tau: SimilarityScore::from_ratio(7, 10),
            max_token_freq: 100,
            round1_kind: TokenKind::Phrase,
            round2_kind: TokenKind::Character,
            top_n: 3,
        }
    }
}

impl LinkageConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tau.is_zero() {
            return Err(ConfigError::ZeroTau);
        }
        if self.max_token_freq == 0 {
            return Err(ConfigError::ZeroMaxTokenFreq);
        }
        if self.top_n == 0 {
            return Err(ConfigError::ZeroTopN);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigError {
    ZeroTau,
    ZeroMaxTokenFreq,
    ZeroTopN,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::ZeroTau => write!(f, "tau must be positive"),
            ConfigError::ZeroMaxTokenFreq => write!(f, "max token frequency must be at least 1"),
            ConfigError::ZeroTopN => write!(f, "top-n must be at least 1"),
        }
    }
}

impl core::error::Error for ConfigError {}

/// Similarity of two sorted bags of the same kind via one synchronised
/// merge pass; returns `2m / (|a| + |b|)`. Two empty bags score 0 (an empty
/// address identifies nothing).
///
/// Panics if the bag kinds differ; that is a caller bug.
pub fn bag_similarity(a: &TokenBag, b: &TokenBag) -> SimilarityScore {
    assert_eq!(a.kind(), b.kind(), "cannot compare bags of different kinds");
    let mut common: u64 = 0;
    let mut total: u64 = 0;

    let mut ia = a.runs().peekable();
    let mut ib = b.runs().peekable();
    loop {
        match (ia.peek(), ib.peek()) {
            (Some(&(ta, ca)), Some(&(tb, cb))) => match ta.cmp(tb) {
                Ordering::Equal => {
                    common += 2 * u64::from(ca.min(cb));
                    total += u64::from(ca) + u64::from(cb);
                    ia.next();
                    ib.next();
                }
                Ordering::Less => {
                    total += u64::from(ca);
                    ia.next();
                }
                Ordering::Greater => {
                    total += u64::from(cb);
                    ib.next();
                }
            },
            (Some(&(_, ca)), None) => {
                total += u64::from(ca);
                ia.next();
            }
            (None, Some(&(_, cb))) => {
                total += u64::from(cb);
                ib.next();
            }
            (None, None) => break,
        }
    }

    if total == 0 {
        SimilarityScore::ZERO
    } else {
        SimilarityScore::from_ratio(common, total)
    }
}

/// True when the two bags have at least one token in common.
pub fn bags_share_token(a: &TokenBag, b: &TokenBag) -> bool {
    let mut ia = a.runs().peekable();
    let mut ib = b.runs().peekable();
    while let (Some(&(ta, _)), Some(&(tb, _))) = (ia.peek(), ib.peek()) {
        match ta.cmp(tb) {
            Ordering::Equal => return true,
            Ordering::Less => {
                ia.next();
            }
            Ordering::Greater => {
                ib.next();
            }
        }
    }
    false
}

fn multiset_intersection(a: &TokenBag, b: &TokenBag) -> u64 {
    let mut m = 0u64;
    let mut ia = a.runs().peekable();
    let mut ib = b.runs().peekable();
    while let (Some(&(ta, ca)), Some(&(tb, cb))) = (ia.peek(), ib.peek()) {
        match ta.cmp(tb) {
            Ordering::Equal => {
                m += u64::from(ca.min(cb));
                ia.next();
                ib.next();
            }
            Ordering::Less => {
                ia.next();
            }
            Ordering::Greater => {
                ib.next();
            }
        }
    }
    m
}

/// True iff one numeric bag is a sub-multiset of the other (every token's
/// count on the smaller side is covered by the larger side). Reflexive and
/// symmetric, not transitive.
pub fn numeric_consistent(a: &TokenBag, b: &TokenBag) -> bool {
    debug_assert_eq!(a.kind(), TokenKind::Numeric);
    debug_assert_eq!(b.kind(), TokenKind::Numeric);
    let m = multiset_intersection(a, b);
    m == a.size() || m == b.size()
}

/// Pluggable round-2 similarity.
pub trait BagScorer {
    fn score(&self, a: &TokenBag, b: &TokenBag) -> SimilarityScore;
}

/// The default scorer: the merge-based common-over-total ratio.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dice;

impl BagScorer for Dice {
    fn score(&self, a: &TokenBag, b: &TokenBag) -> SimilarityScore {
        bag_similarity(a, b)
    }
}

/// Multiset intersection over union, `m / (|a| + |b| - m)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jaccard;

impl BagScorer for Jaccard {
    fn score(&self, a: &TokenBag, b: &TokenBag) -> SimilarityScore {
        assert_eq!(a.kind(), b.kind(), "cannot compare bags of different kinds");
        let m = multiset_intersection(a, b);
        let union = a.size() + b.size() - m;
        if union == 0 {
            SimilarityScore::ZERO
        } else {
            SimilarityScore::from_ratio(m, union)
        }
    }
}

/// The two-round composite score: the round-2 similarity when the round-1
/// bags share at least one token, else zero.
pub fn two_round_score(x: &AddressRecord, y: &AddressRecord, cfg: &LinkageConfig) -> SimilarityScore {
    two_round_score_with(&Dice, x, y, cfg)
}

/// [`two_round_score`] with a caller-chosen round-2 scorer.
pub fn two_round_score_with<S: BagScorer>(
    scorer: &S,
    x: &AddressRecord,
    y: &AddressRecord,
    cfg: &LinkageConfig,
) -> SimilarityScore {
    let bx = tokens(cfg.round1_kind, x.normalized());
    let by = tokens(cfg.round1_kind, y.normalized());
    if !bags_share_token(&bx, &by) {
        return SimilarityScore::ZERO;
    }
    scorer.score(
        &tokens(cfg.round2_kind, x.normalized()),
        &tokens(cfg.round2_kind, y.normalized()),
    )
}
