//! Synthetic-corpus evaluation harness.
//!
//! Real address datasets large enough to exercise the pipeline are rarely
//! shareable, so this module generates reference corpora with known ground
//! truth, corrupts them with the data-quality defects the pipeline is meant
//! to survive (typos, dropped suburb/state/postcode, abbreviation variants,
//! reordering, duplicated words), and evaluates linkage output against the
//! truth. [`brute_force_link`] is the all-pairs oracle used to validate the
//! production pipeline exactly.

mod corpus;
mod metrics;
mod oracle;
mod rng;

pub use corpus::{
    corrupt, generate_reference, CorruptionProfile, GenError, TruthSet, TruthSetError,
};
pub use metrics::{evaluate_arbitrary, evaluate_reference, ArbitraryMetrics, TauMetrics};
pub use oracle::{brute_force_link, LinkMode, OracleError, DEFAULT_PAIR_CAP};
