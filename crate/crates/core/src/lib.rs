//! Batch record linkage for free-text addresses.
//!
//! Addresses are compared without standardisation: each address becomes a
//! bag of tokens (words, characters, adjacent-word phrases, or numeric
//! words), candidate pairs are generated by joining recurrency-pruned
//! inverted indexes over distinctive phrase tokens, and surviving pairs are
//! scored with a tolerant character-level similarity. The [`evalgen`]
//! module provides a synthetic-corpus harness with ground truth and a
//! brute-force oracle for validating the pipeline end to end.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `addrlink-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod evalgen;
pub mod index;
pub mod linkage;
pub mod record;
pub mod similarity;
pub mod tokenizer;

pub use record::{AddressRecord, RecordId};
pub use similarity::{bag_similarity, LinkageConfig, SimilarityScore};
pub use tokenizer::{normalize, NormalizedText, TokenBag, TokenKind};
