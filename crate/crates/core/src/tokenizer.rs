//! Tokenisation of free-text addresses into bag-of-token views.
//!
//! Every view shares one normalisation rule: letters are uppercased and any
//! maximal run of characters outside `A-Z0-9` collapses into a single
//! space. Non-ASCII characters (accented letters included) are separators.
//! On top of the normalised text four views are defined:
//!
//! * [`word_tokens`] — multiset of space-separated words;
//! * [`char_tokens`] — multiset of all non-space characters;
//! * [`phrase_tokens`] — set of adjacent ordered word pairs (distinctive,
//!   used for blocking);
//! * [`numeric_tokens`] — multiset of all-digit words (used for the
//!   numeric-consistency check when linking arbitrary datasets).
//!
//! All tokenizers are pure functions of the normalised text.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Uppercase alphanumeric words separated by single spaces, no leading or
/// trailing space. The alphabet is exactly `{A-Z, 0-9, space}` and
/// normalisation is idempotent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalizedText(String);

impl NormalizedText {
    pub fn new(raw: &str) -> Self {
        let mut out = String::with_capacity(raw.len());
        for c in raw.chars() {
            if c.is_ascii_alphanumeric() {
                out.push(c.to_ascii_uppercase());
            } else if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
            }
        }
        if out.ends_with(' ') {
            out.pop();
        }
        NormalizedText(out)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ').filter(|w| !w.is_empty())
    }
}

impl fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Normalise raw text; empty or all-separator input yields the empty text.
pub fn normalize(raw: &str) -> NormalizedText {
    NormalizedText::new(raw)
}

/// The four token views. `Phrase` bags have set semantics (every count is
/// 1); the other kinds keep true multiplicities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Word,
    Character,
    Phrase,
    Numeric,
}

impl TokenKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TokenKind::Word => "word",
            TokenKind::Character => "char",
            TokenKind::Phrase => "phrase",
            TokenKind::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTokenKind(pub String);

impl fmt::Display for UnknownTokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown token kind `{}` (expected word, char, phrase or numeric)",
            self.0
        )
    }
}

impl core::error::Error for UnknownTokenKind {}

impl FromStr for TokenKind {
    type Err = UnknownTokenKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word" => Ok(TokenKind::Word),
            "char" | "character" => Ok(TokenKind::Character),
            "phrase" => Ok(TokenKind::Phrase),
            "numeric" => Ok(TokenKind::Numeric),
            other => Err(UnknownTokenKind(other.to_string())),
        }
    }
}

/// A sorted multiset of tokens, stored as `(token, count)` runs with the
/// tokens strictly ascending and every count at least 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenBag {
    kind: TokenKind,
    runs: Vec<(String, u32)>,
}

impl TokenBag {
    /// Collects arbitrary tokens into a bag, counting duplicates.
    pub fn from_tokens<I, S>(kind: TokenKind, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.into()).or_insert(0) += 1;
        }
        TokenBag::from_counts(kind, counts)
    }

    fn from_counts(kind: TokenKind, counts: BTreeMap<String, u32>) -> Self {
        TokenBag {
            kind,
            runs: counts.into_iter().collect(),
        }
    }

    fn empty(kind: TokenKind) -> Self {
        TokenBag {
            kind,
            runs: Vec::new(),
        }
    }

    pub fn kind(&self) -> TokenKind {
        self.kind
    }

    /// Total token count with multiplicity.
    pub fn size(&self) -> u64 {
        self.runs.iter().map(|(_, c)| u64::from(*c)).sum()
    }

    /// Number of distinct tokens.
    pub fn distinct(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn runs(&self) -> impl Iterator<Item = (&str, u32)> {
        self.runs.iter().map(|(t, c)| (t.as_str(), *c))
    }

    pub fn count_of(&self, token: &str) -> u32 {
        self.runs
            .binary_search_by(|(t, _)| t.as_str().cmp(token))
            .map(|i| self.runs[i].1)
            .unwrap_or(0)
    }
}

/// Multiset of space-separated words.
pub fn word_tokens(text: &NormalizedText) -> TokenBag {
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    for w in text.words() {
        *counts.entry(w.to_string()).or_insert(0) += 1;
    }
    TokenBag::from_counts(TokenKind::Word, counts)
}

/// Multiset of all non-space characters, with true multiplicities.
pub fn char_tokens(text: &NormalizedText) -> TokenBag {
    // The normalised alphabet is exactly 0-9A-Z, so a fixed counting array
    // suffices and the emission order below is ascending byte order.
    let mut counts = [0u32; 36];
    for &b in text.as_str().as_bytes() {
        match b {
            b'0'..=b'9' => counts[(b - b'0') as usize] += 1,
            b'A'..=b'Z' => counts[10 + (b - b'A') as usize] += 1,
            b' ' => {}
            other => unreachable!("normalised text contains byte {other}"),
        }
    }
    let mut runs = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            let ch = if i < 10 {
                (b'0' + i as u8) as char
            } else {
                (b'A' + (i - 10) as u8) as char
            };
            runs.push((ch.to_string(), c));
        }
    }
    TokenBag {
        kind: TokenKind::Character,
        runs,
    }
}

/// Set of all adjacent ordered word pairs `"W_i W_{i+1}"`. A single-word
/// text degenerates to the word itself (so one-word addresses still carry a
/// blocking key); empty text yields the empty bag.
pub fn phrase_tokens(text: &NormalizedText) -> TokenBag {
    let words: Vec<&str> = text.words().collect();
    match words.len() {
        0 => TokenBag::empty(TokenKind::Phrase),
        1 => TokenBag {
            kind: TokenKind::Phrase,
            runs: alloc::vec![(words[0].to_string(), 1)],
        },
        _ => {
            let mut set = BTreeSet::new();
            for pair in words.windows(2) {
                set.insert(format!("{} {}", pair[0], pair[1]));
            }
            TokenBag {
                kind: TokenKind::Phrase,
                runs: set.into_iter().map(|t| (t, 1)).collect(),
            }
        }
    }
}

/// Multiset of words consisting entirely of digits, compared as exact
/// strings (`"03"` and `"3"` are different tokens). Words with embedded
/// digits such as `U123` do not contribute.
pub fn numeric_tokens(text: &NormalizedText) -> TokenBag {
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    for w in text.words() {
        if w.bytes().all(|b| b.is_ascii_digit()) {
            *counts.entry(w.to_string()).or_insert(0) += 1;
        }
    }
    TokenBag::from_counts(TokenKind::Numeric, counts)
}

/// Dispatch to the tokenizer for `kind`.
pub fn tokens(kind: TokenKind, text: &NormalizedText) -> TokenBag {
    match kind {
        TokenKind::Word => word_tokens(text),
        TokenKind::Character => char_tokens(text),
        TokenKind::Phrase => phrase_tokens(text),
        TokenKind::Numeric => numeric_tokens(text),
    }
}
