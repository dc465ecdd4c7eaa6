//! Precision/recall evaluation of linkage output against ground truth.

use alloc::vec::Vec;

use super::corpus::TruthSet;
use crate::linkage::{Decision, MatchResult};
use crate::similarity::SimilarityScore;

/// Reference-mode metrics at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct TauMetrics {
    pub tau: SimilarityScore,
    pub accepted: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    /// Fraction of truth links not recovered (`1 - recall`).
    pub missed_rate: f64,
    /// Set when a convention filled in an undefined ratio (no accepted
    /// links, or an empty truth set).
    pub degenerate: bool,
}

/// Evaluates reference-mode results at each threshold. Acceptance is
/// re-derived from the stored scores (`score > tau`), so a single scored
/// run — including its rejected rows — can be evaluated at many
/// thresholds; results must therefore carry every candidate scored at or
/// below the lowest threshold of interest.
///
/// Conventions: with no accepted links precision is 1.0 (there are no
/// false positives); with an empty truth set recall is 1.0. Both cases set
/// the `degenerate` flag.
pub fn evaluate_reference(
    results: &[MatchResult],
    truth: &TruthSet,
    taus: &[SimilarityScore],
) -> Vec<TauMetrics> {
    taus.iter()
        .map(|&tau| {
            let mut accepted = 0usize;
            let mut true_positives = 0usize;
            for m in results {
                if m.score > tau {
                    accepted += 1;
                    if truth.reference_of(m.pair.left) == Some(m.pair.right) {
                        true_positives += 1;
                    }
                }
            }
            let false_positives = accepted - true_positives;
            let false_negatives = truth.len() - true_positives;
            let no_accepted = accepted == 0;
            let no_truth = truth.is_empty();
            TauMetrics {
                tau,
                accepted,
                true_positives,
                false_positives,
                false_negatives,
                precision: if no_accepted {
                    1.0
                } else {
                    true_positives as f64 / accepted as f64
                },
                recall: if no_truth {
                    1.0
                } else {
                    true_positives as f64 / truth.len() as f64
                },
                missed_rate: if no_truth {
                    0.0
                } else {
                    false_negatives as f64 / truth.len() as f64
                },
                degenerate: no_accepted || no_truth,
            }
        })
        .collect()
}

/// Arbitrary-mode trichotomy over the truth population: correctly linked,
/// incorrectly linked, and not linked at all.
#[derive(Debug, Clone, PartialEq)]
pub struct ArbitraryMetrics {
    /// Number of truth records evaluated.
    pub total: usize,
    pub accepted_correct: usize,
    pub accepted_incorrect: usize,
    pub not_found: usize,
    pub frac_correct: f64,
    pub frac_incorrect: f64,
    pub frac_not_found: f64,
}

/// Evaluates arbitrary-mode results. Every truth record whose id never
/// appears as an accepted left — including records that produced no
/// candidates at all — counts as not found.
pub fn evaluate_arbitrary(results: &[MatchResult], truth: &TruthSet) -> ArbitraryMetrics {
    let mut accepted_correct = 0usize;
    let mut accepted_incorrect = 0usize;
    for m in results {
        if m.decision != Decision::Accepted {
            continue;
        }
        match truth.reference_of(m.pair.left) {
            Some(expected) if expected == m.pair.right => accepted_correct += 1,
            Some(_) => accepted_incorrect += 1,
            // left records outside the truth population are not evaluable
            None => {}
        }
    }
    let total = truth.len();
    let not_found = total - accepted_correct - accepted_incorrect;
    let frac = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    ArbitraryMetrics {
        total,
        accepted_correct,
        accepted_incorrect,
        not_found,
        frac_correct: frac(accepted_correct),
        frac_incorrect: frac(accepted_incorrect),
        frac_not_found: frac(not_found),
    }
}
