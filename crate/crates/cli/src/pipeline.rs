//! Parallel pipeline driver.
//!
//! Composes the same core stages as `link_reference`/`link_arbitrary` but
//! scores candidate pairs on a rayon pool. Scoring is a pure order-
//! preserving map, so output is byte-identical whatever the worker count —
//! including the single-threaded core path itself.

use std::time::{Duration, Instant};

use addrlink_core::index::build_index;
use addrlink_core::linkage::{
    candidate_pairs, decide_arbitrary, decide_reference, join_indexes, LinkageError, MatchResult,
    PairScorer, ScoredPair,
};
use addrlink_core::{AddressRecord, LinkageConfig};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    Reference,
    Arbitrary,
}

#[derive(Debug, Default)]
pub struct LinkStats {
    pub candidate_pairs: usize,
    pub stages: Vec<(&'static str, Duration)>,
}

/// Builds a rayon pool with `threads` workers (0 = rayon's default).
pub fn thread_pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Runs the full pipeline with per-stage timings, scoring in parallel.
pub fn link_with_stats(
    left: &[AddressRecord],
    right: &[AddressRecord],
    cfg: &LinkageConfig,
    mode: LinkMode,
    threads: usize,
) -> Result<(Vec<MatchResult>, LinkStats), LinkageError> {
    cfg.validate()?;
    let mut stats = LinkStats::default();
    let stage = |stats: &mut LinkStats, name, t0: Instant| {
        stats.stages.push((name, t0.elapsed()));
    };

    let t0 = Instant::now();
    let left_idx = build_index(left, cfg.round1_kind)?.prune(cfg.max_token_freq);
    let right_idx = build_index(right, cfg.round1_kind)?.prune(cfg.max_token_freq);
    stage(&mut stats, "index+prune", t0);

    let t0 = Instant::now();
    let pairs = candidate_pairs(join_indexes(&left_idx, &right_idx));
    drop(left_idx);
    drop(right_idx);
    stats.candidate_pairs = pairs.len();
    stage(&mut stats, "join+pairs", t0);

    let t0 = Instant::now();
    let scorer = PairScorer::new(left, right, cfg);
    let scored: Result<Vec<ScoredPair>, LinkageError> = thread_pool(threads)
        .install(|| pairs.par_iter().map(|&p| scorer.score(p)).collect());
    let scored = scored?;
    drop(scorer);
    drop(pairs);
    stage(&mut stats, "score", t0);

    let t0 = Instant::now();
    let results = match mode {
        LinkMode::Reference => decide_reference(scored, cfg),
        LinkMode::Arbitrary => decide_arbitrary(scored, left, right, cfg)?,
    };
    stage(&mut stats, "decide", t0);
    Ok((results, stats))
}

/// Resident set size of this process in MiB: the high-water mark when the
/// kernel exposes it, otherwise the current value.
pub fn peak_rss_mib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let field = |name: &str| -> Option<u64> {
        let line = status.lines().find(|l| l.starts_with(name))?;
        line.split_whitespace().nth(1)?.parse().ok()
    };
    field("VmHWM:").or_else(|| field("VmRSS:")).map(|kib| kib / 1024)
}

#[cfg(test)]
mod tests {
    use super::*;
    use addrlink_core::evalgen::{corrupt, generate_reference, CorruptionProfile};
    use addrlink_core::linkage::{link_arbitrary, link_reference};

    #[test]
    fn parallel_output_equals_single_threaded_core() {
        let reference = generate_reference(5, 400).unwrap();
        let profile = CorruptionProfile::mild(crate::default_synonyms(), 6);
        let (corrupted, _) = corrupt(&reference, &profile);
        let cfg = LinkageConfig::default();

        let (par_ref, stats) =
            link_with_stats(&corrupted, &reference, &cfg, LinkMode::Reference, 4).unwrap();
        assert_eq!(par_ref, link_reference(&corrupted, &reference, &cfg).unwrap());
        assert!(stats.candidate_pairs > 0);
        assert_eq!(stats.stages.len(), 4);

        let (par_arb, _) =
            link_with_stats(&corrupted, &reference, &cfg, LinkMode::Arbitrary, 3).unwrap();
        assert_eq!(par_arb, link_arbitrary(&corrupted, &reference, &cfg).unwrap());

        // worker count does not change output
        let (one_thread, _) =
            link_with_stats(&corrupted, &reference, &cfg, LinkMode::Reference, 1).unwrap();
        assert_eq!(par_ref, one_thread);
    }

    #[test]
    fn rss_probe_works_on_linux() {
        if cfg!(target_os = "linux") {
            assert!(peak_rss_mib().unwrap() > 0);
        }
    }
}
