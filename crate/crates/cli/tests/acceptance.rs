//! Acceptance suite: one test per engineering requirement. Each test
//! prints a single `acceptance <name>: PASS/FAIL` line with the measured
//! values, and the suite as a whole is the release gate.

use std::sync::OnceLock;
use std::time::Instant;

use addrlink_core::evalgen::{
    brute_force_link, corrupt, evaluate_reference, generate_reference, CorruptionProfile,
    LinkMode, DEFAULT_PAIR_CAP,
};
use addrlink_core::linkage::{
    link_arbitrary, link_reference, score_pairs, threshold_sweep, CandidatePair,
};
use addrlink_core::similarity::bag_similarity;
use addrlink_core::tokenizer::{phrase_tokens, TokenBag};
use addrlink_core::{AddressRecord, LinkageConfig, RecordId, SimilarityScore, TokenKind};
use addrlink_cli::default_synonyms;
use addrlink_cli::pipeline::{link_with_stats, peak_rss_mib, LinkMode as CliLinkMode};

// ---------------------------------------------------------------------
// shared helpers

/// Deterministic xorshift stream for test-local randomness.
struct TestRng(u64);

impl TestRng {
    fn new(seed: u64) -> Self {
        TestRng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1)
    }

    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }
}

/// Closed-form reference for the merge scorer: 2 * multiset-intersection
/// over total size, from per-token minimum counts.
fn closed_form(a: &TokenBag, b: &TokenBag) -> SimilarityScore {
    let mut m = 0u64;
    for (tok, ca) in a.runs() {
        m += u64::from(ca.min(b.count_of(tok)));
    }
    let total = a.size() + b.size();
    if total == 0 {
        SimilarityScore::ZERO
    } else {
        SimilarityScore::from_ratio(2 * m, total)
    }
}

struct Instance {
    label: String,
    left: Vec<AddressRecord>,
    right: Vec<AddressRecord>,
    cfg: LinkageConfig,
}

/// Fifty seeded instances: dense random-vocabulary sets plus corrupted
/// synthetic corpora, up to 1,000 x 1,000 records.
fn oracle_instances() -> &'static [Instance] {
    static INSTANCES: OnceLock<Vec<Instance>> = OnceLock::new();
    INSTANCES.get_or_init(|| {
        let mut instances = Vec::new();

        // 20 dense-vocabulary instances across pruning/threshold settings
        let vocab = ["1", "2", "3", "45", "KEL", "MAR", "BROOK", "ST", "RD", "VIC"];
        for seed in 0..20u64 {
            let mut rng = TestRng::new(seed + 1);
            let make = |id0: u64, n: usize, rng: &mut TestRng| -> Vec<AddressRecord> {
                (0..n)
                    .map(|i| {
                        let len = 1 + rng.below(6);
                        let text = (0..len)
                            .map(|_| vocab[rng.below(vocab.len())])
                            .collect::<Vec<_>>()
                            .join(" ");
                        AddressRecord::new(RecordId(id0 + i as u64), text)
                    })
                    .collect()
            };
            let left = make(1, 40 + rng.below(40), &mut rng);
            let right = make(10_001, 40 + rng.below(40), &mut rng);
            let cfg = LinkageConfig {
                tau: SimilarityScore::from_ratio(5 + seed % 4, 10),
                max_token_freq: [1, 2, 5, 100][(seed % 4) as usize],
                top_n: 1 + (seed % 3) as u32,
                ..LinkageConfig::default()
            };
            instances.push(Instance {
                label: format!("dense vocabulary #{seed}"),
                left,
                right,
                cfg,
            });
        }

        // 30 corrupted corpora of increasing size, varying profiles
        for (i, (n, seed)) in [
            (50, 100u64),
            (50, 101),
            (80, 102),
            (80, 103),
            (120, 104),
            (120, 105),
            (120, 106),
            (200, 107),
            (200, 108),
            (200, 109),
            (300, 110),
            (300, 111),
            (300, 112),
            (400, 113),
            (400, 114),
            (500, 115),
            (500, 116),
            (500, 117),
            (600, 118),
            (600, 119),
            (700, 120),
            (700, 121),
            (800, 122),
            (800, 123),
            (900, 124),
            (900, 125),
            (1000, 126),
            (1000, 127),
            (1000, 128),
            (1000, 129),
        ]
        .into_iter()
        .enumerate()
        {
            let reference = generate_reference(seed, n).unwrap();
            let mut profile = if i % 3 == 0 {
                CorruptionProfile::mild(default_synonyms(), seed + 5_000)
            } else {
                // heavier, uneven corruption
                CorruptionProfile {
                    typo: 0.4,
                    drop_suburb: 0.2,
                    drop_state: 0.3,
                    drop_postcode: 0.2,
                    abbreviation: 0.3,
                    reorder: 0.3,
                    duplicate: 0.2,
                    synonyms: default_synonyms(),
                    seed: seed + 5_000,
                }
            };
            if i % 5 == 0 {
                profile.typo = 1.0;
            }
            let (corrupted, _) = corrupt(&reference, &profile);
            let right: Vec<AddressRecord> = reference
                .iter()
                .map(|r| AddressRecord::new(RecordId(r.id.0 + 700_000), r.raw.clone()))
                .collect();
            let cfg = LinkageConfig {
                max_token_freq: [100, 3, 10][i % 3],
                ..LinkageConfig::default()
            };
            instances.push(Instance {
                label: format!("corrupted corpus n={n} seed={seed}"),
                left: corrupted,
                right,
                cfg,
            });
        }

        assert_eq!(instances.len(), 50);
        instances
    })
}

/// Independent per-side phrase frequencies: records containing each token.
fn phrase_frequencies(
    records: &[AddressRecord],
) -> std::collections::BTreeMap<String, usize> {
    let mut freq = std::collections::BTreeMap::new();
    for r in records {
        for (tok, _) in phrase_tokens(r.normalized()).runs() {
            *freq.entry(tok.to_string()).or_insert(0) += 1;
        }
    }
    freq
}

// ---------------------------------------------------------------------
// the criteria

#[test]
fn golden_worked_example() {
    let a = TokenBag::from_tokens(TokenKind::Word, ["this", "is", "an", "example"]);
    let b = TokenBag::from_tokens(TokenKind::Word, ["this", "is", "another", "example"]);
    let t0 = Instant::now();
    let score = bag_similarity(&a, &b);
    let elapsed = t0.elapsed();
    assert_eq!(score, SimilarityScore::from_ratio(6, 8));
    assert_eq!(score.value(), 0.75);
    assert!(elapsed.as_micros() < 1_000, "took {elapsed:?}");
    println!("acceptance golden_worked_example: PASS — 6/8 = 0.75 exactly, {elapsed:?}");
}

#[test]
fn merge_equals_closed_form_oracle() {
    let t0 = Instant::now();

    // exhaustive: every multiset over a 3-symbol alphabet up to size 4
    let symbols = ["A", "B", "C"];
    let mut bags: Vec<TokenBag> = Vec::new();
    for a in 0..=4usize {
        for b in 0..=4 - a {
            for c in 0..=4 - a - b {
                let mut toks: Vec<&str> = Vec::new();
                toks.extend(std::iter::repeat_n(symbols[0], a));
                toks.extend(std::iter::repeat_n(symbols[1], b));
                toks.extend(std::iter::repeat_n(symbols[2], c));
                bags.push(TokenBag::from_tokens(TokenKind::Word, toks));
            }
        }
    }
    assert_eq!(bags.len(), 35);
    let mut exhaustive_span = 0usize;
    for x in &bags {
        for y in &bags {
            assert_eq!(bag_similarity(x, y), closed_form(x, y));
            exhaustive_span += 1;
        }
    }

    // 10,000 seeded random pairs over a larger vocabulary
    let vocab = ["A", "B", "C", "AB", "1", "22", "Z9"];
    let mut rng = TestRng::new(20_260_811);
    let mut random_pairs = 0usize;
    for _ in 0..10_000 {
        let make = |rng: &mut TestRng| {
            let len = rng.below(13);
            TokenBag::from_tokens(
                TokenKind::Word,
                (0..len).map(|_| vocab[rng.below(vocab.len())]),
            )
        };
        let x = make(&mut rng);
        let y = make(&mut rng);
        assert_eq!(bag_similarity(&x, &y), closed_form(&x, &y));
        random_pairs += 1;
    }

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    println!(
        "acceptance merge_equals_closed_form_oracle: PASS — {exhaustive_span} exhaustive + {random_pairs} random pairs, exact, {elapsed:?}"
    );
}

#[test]
fn pipeline_equals_brute_force_oracle() {
    let t0 = Instant::now();
    let mut checked = 0usize;
    for inst in oracle_instances() {
        let reference = link_reference(&inst.left, &inst.right, &inst.cfg).unwrap();
        let oracle_ref = brute_force_link(
            &inst.left,
            &inst.right,
            &inst.cfg,
            LinkMode::Reference,
            DEFAULT_PAIR_CAP,
        )
        .unwrap();
        assert_eq!(reference, oracle_ref, "reference mode diverged on {}", inst.label);

        let arbitrary = link_arbitrary(&inst.left, &inst.right, &inst.cfg).unwrap();
        let oracle_arb = brute_force_link(
            &inst.left,
            &inst.right,
            &inst.cfg,
            LinkMode::Arbitrary,
            DEFAULT_PAIR_CAP,
        )
        .unwrap();
        assert_eq!(arbitrary, oracle_arb, "arbitrary mode diverged on {}", inst.label);
        checked += 1;
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
    println!(
        "acceptance pipeline_equals_brute_force_oracle: PASS — {checked} instances, both modes, exact equality, {elapsed:?}"
    );
}

#[test]
fn blocking_soundness_and_completeness() {
    let mut pairs_checked = 0usize;
    for inst in oracle_instances() {
        let k = inst.cfg.max_token_freq as usize;
        let left_freq = phrase_frequencies(&inst.left);
        let right_freq = phrase_frequencies(&inst.right);
        let surviving_shared = |l: &AddressRecord, r: &AddressRecord| -> bool {
            phrase_tokens(l.normalized()).runs().any(|(tok, _)| {
                phrase_tokens(r.normalized()).count_of(tok) > 0
                    && left_freq[tok] <= k
                    && right_freq[tok] <= k
            })
        };

        let results = link_reference(&inst.left, &inst.right, &inst.cfg).unwrap();
        let candidate_set: std::collections::BTreeSet<CandidatePair> =
            results.iter().map(|m| m.pair).collect();

        // soundness: no emitted pair without a shared surviving token
        for m in &results {
            let l = inst.left.iter().find(|r| r.id == m.pair.left).unwrap();
            let r = inst.right.iter().find(|r| r.id == m.pair.right).unwrap();
            assert!(
                surviving_shared(l, r),
                "unsound candidate {:?} on {}",
                m.pair,
                inst.label
            );
        }

        // completeness: no missed pair that has a shared surviving token
        for l in &inst.left {
            for r in &inst.right {
                pairs_checked += 1;
                if surviving_shared(l, r) {
                    assert!(
                        candidate_set.contains(&CandidatePair {
                            left: l.id,
                            right: r.id
                        }),
                        "missed pair ({}, {}) on {}",
                        l.id,
                        r.id,
                        inst.label
                    );
                }
            }
        }
    }
    println!(
        "acceptance blocking_soundness_and_completeness: PASS — {pairs_checked} pairs checked across 50 instances, zero violations"
    );
}

#[test]
fn threshold_nesting() {
    let taus = [
        SimilarityScore::from_ratio(6, 10),
        SimilarityScore::from_ratio(7, 10),
        SimilarityScore::from_ratio(8, 10),
    ];
    let mut corpora = 0usize;
    for seed in [1u64, 2, 3, 4, 5, 6] {
        let reference = generate_reference(seed, 800).unwrap();
        let (corrupted, truth) = corrupt(
            &reference,
            &CorruptionProfile::mild(default_synonyms(), seed + 77),
        );

        let cfg = LinkageConfig {
            tau: taus[0],
            ..LinkageConfig::default()
        };
        let results = link_reference(&corrupted, &reference, &cfg).unwrap();
        let accepted_at = |tau: SimilarityScore| -> std::collections::BTreeSet<CandidatePair> {
            results
                .iter()
                .filter(|m| m.score > tau)
                .map(|m| m.pair)
                .collect()
        };
        let a6 = accepted_at(taus[0]);
        let a7 = accepted_at(taus[1]);
        let a8 = accepted_at(taus[2]);
        assert!(a8.is_subset(&a7), "accepted(0.8) not within accepted(0.7)");
        assert!(a7.is_subset(&a6), "accepted(0.7) not within accepted(0.6)");

        // the sweep reports the same sets and the same losses
        let report = threshold_sweep(&corrupted, &reference, &cfg, &taus).unwrap();
        assert_eq!(report.entries[0].accepted_count, a6.len());
        assert_eq!(report.entries[1].accepted_count, a7.len());
        assert_eq!(report.entries[2].accepted_count, a8.len());
        let lost7: Vec<CandidatePair> = a6.difference(&a7).copied().collect();
        let lost8: Vec<CandidatePair> = a6.difference(&a8).copied().collect();
        assert_eq!(report.entries[1].lost_vs_lowest, lost7);
        assert_eq!(report.entries[2].lost_vs_lowest, lost8);

        // recall is non-increasing in tau
        let metrics = evaluate_reference(&results, &truth, &taus);
        assert!(metrics.windows(2).all(|w| w[0].recall >= w[1].recall));
        corpora += 1;
    }
    println!(
        "acceptance threshold_nesting: PASS — nested accepted sets and non-increasing recall on {corpora} corpora"
    );
}

#[test]
fn identity_corruption_full_recall() {
    let reference = generate_reference(42, 2_000).unwrap();
    let (copy, truth) = corrupt(&reference, &CorruptionProfile::identity(9));
    let cfg = LinkageConfig::default(); // tau = 0.7
    let results = link_reference(&copy, &reference, &cfg).unwrap();
    let m = &evaluate_reference(&results, &truth, &[cfg.tau])[0];
    assert_eq!(m.recall, 1.0, "recall {}", m.recall);
    assert_eq!(m.false_negatives, 0);
    println!(
        "acceptance identity_corruption_full_recall: PASS — recall = 1.0 exactly at tau 0.7 over {} records",
        truth.len()
    );
}

#[test]
fn mild_corruption_recall_floor() {
    let t0 = Instant::now();
    let reference = generate_reference(20_260_811, 10_000).unwrap();
    let (corrupted, truth) = corrupt(
        &reference,
        &CorruptionProfile::mild(default_synonyms(), 7),
    );
    let cfg = LinkageConfig::default();
    let results = link_reference(&corrupted, &reference, &cfg).unwrap();
    let m = &evaluate_reference(&results, &truth, &[cfg.tau])[0];
    assert!(
        m.recall >= 0.9,
        "recall {:.4} below the 0.9 floor",
        m.recall
    );
    println!(
        "acceptance mild_corruption_recall_floor: PASS — recall {:.4} (floor 0.9), precision {:.4}, {} accepted, 10,000 records, {:?}",
        m.recall,
        m.precision,
        m.accepted,
        t0.elapsed()
    );
}

#[test]
fn million_record_runtime() {
    let budget_secs = 600.0;
    let t_total = Instant::now();

    let t0 = Instant::now();
    let reference = generate_reference(1, 1_000_000).unwrap();
    let (corrupted, _) = corrupt(
        &reference,
        &CorruptionProfile::mild(default_synonyms(), 2),
    );
    let gen_secs = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let (results, stats) = link_with_stats(
        &corrupted,
        &reference,
        &LinkageConfig::default(),
        CliLinkMode::Reference,
        0,
    )
    .unwrap();
    let link_secs = t0.elapsed().as_secs_f64();
    let rss = peak_rss_mib().unwrap_or(0);
    let cores = std::thread::available_parallelism().map_or(0, |n| n.get());

    assert!(
        link_secs <= budget_secs,
        "link took {link_secs:.1}s, budget {budget_secs}s"
    );
    assert!(rss <= 16 * 1024, "rss {rss} MiB exceeds 16 GiB");
    println!(
        "acceptance million_record_runtime: PASS — 1,000,000 x 1,000,000 records linked in {link_secs:.1}s \
         (budget 600s; gen {gen_secs:.1}s, total {:.1}s, {} candidate pairs, {} results, rss {rss} MiB, {cores} cores)",
        t_total.elapsed().as_secs_f64(),
        stats.candidate_pairs,
        results.len(),
    );
}

/// Externally published sample pairs with their reported two-decimal
/// scores. The anonymisation applied to the samples altered some pairs'
/// character content, so not every reported score is reproducible from the
/// published text; every row is asserted as published, at the reported
/// two-decimal precision (tolerance 0.01).
const PUBLISHED_ROWS: &[(&str, &str, f64)] = &[
    ("33 34-38 EHMNTV DIU NSW 6561", "UNIT 33 34-38 EHMNTV STRET OUT DIR NSW 6561", 0.88),
    ("53 741 ADGNR EFORST AKLR QLD 9368", "UNIT 53 741 ADGNR AVENUE EFORST LAKE QLD 9168", 0.80),
    ("972 4 CEOPRW LMOW NEW WALES 5133", "UNIT 972 4 CEOPRW AFHRW ROADWAY LMOW NSW 5133", 0.90),
    ("713 311 GUN HILNU ACT 5035", "UNIT 713 311 GUN PLACE HILNU ACT 5035", 0.93),
    ("3 59 FGIS DEKNOR QLD QLD 9173", "UNIT 3 59 FGIS STRET DEKNOR QLD 9173", 0.90),
    ("9 NO 7 TO 2 CELMNT ADEGNO VIC 7362", "UNIT 9 7-2 CELMNT STRET ADEGNO VIC 7362", 0.91),
    ("313 0 EGKNORW ABEHILTZ BAY 5133", "UNIT 313 0 EGKNORW AVENUE ABEHILTZ BAY NSW 5133", 0.91),
    ("MARGETIC 6 715 ABDFORST BELMNORU VIC 7123", "FLAT 6 715 ABDFORST STRET HNORT BELMNORU VIC 7123", 0.92),
    ("43 3345 ACDHINSV AGRTV QLD 9355", "UNIT 43 3345 ACDEHINSV ROAD MOUNT AGRTV EAST QLD 9355", 0.82),
    ("78 03 ADELMNOR BELM VIC VIC 7133", "UNIT 78 03 ADELMNOR STRET ACFORSTY VIC 7133", 0.83),
    ("4 EGNORU AEHLMT VIC 3095", "4 EGNORU CRT AEHLMT NORTH VIC 3095", 0.84),
    ("528 LTUY HLU LTUY HLU QLD 4854", "528 LTUY ADEHLSU RD LTUY QLD 4854", 0.87),
    ("45 EGHIMNS ADEGNO VIC 3175", "RM 8 45 EGHIMNS ST ADEGNO VIC 3175", 0.88),
    ("6 EILS CEIMNRTY ABILRSUY DNOSW SA 5108", "6 EILS CEIMNRTY RD ABILRSUY DNOSW SA 5108", 0.96),
    ("EL EILOSU 137 AILNT EFNRY EOV QUEN SLAND 4055", "137 AILNT RD EFNRY EGORV QLD 4055", 0.74),
    ("80 ABEGLNRU DEHILS VI 3037", "80 ABEGLNRU DR DEHILS VIC 3037", 0.94),
    ("141 ACEHLRS EHPRT 6005", "141 ACEHLRS ST ESTW EHPRT WA 6005", 0.80),
    ("51 BENOR BELMNOT VIC 3216", "2/51 BENOR DR BELMNOT VIC 3216", 0.91),
    ("97 ELOXY ABDPRUY WA 6025 TRA LIA", "97 ELOXY AVE ABDPRUY WA 6025", 0.87),
    ("9 DLORS DENSY 2077", "9 DLORS AVE AHIQSTU NSW 2077", 0.68),
];

#[test]
fn published_pair_scores() {
    let cfg = LinkageConfig::default();
    let mut failures = Vec::new();
    for (i, &(left_text, right_text, published)) in PUBLISHED_ROWS.iter().enumerate() {
        let left = [AddressRecord::new(RecordId(1), left_text)];
        let right = [AddressRecord::new(RecordId(2), right_text)];
        let pair = CandidatePair {
            left: RecordId(1),
            right: RecordId(2),
        };
        let scored = score_pairs(&[pair], &left, &right, &cfg).unwrap();
        let computed = scored[0].score.value();
        let ok = (computed - published).abs() <= 0.01;
        println!(
            "  row {:>2}: published {published:.2} computed {computed:.6} {}",
            i + 1,
            if ok { "within 0.01" } else { "OUT OF TOLERANCE" }
        );
        if !ok {
            failures.push((i + 1, published, computed));
        }
    }
    if failures.is_empty() {
        println!("acceptance published_pair_scores: PASS — all {} rows within 0.01", PUBLISHED_ROWS.len());
    } else {
        println!(
            "acceptance published_pair_scores: FAIL — {}/{} rows outside 0.01 of the published value; \
             the published text of those rows is character-inconsistent with its published score \
             (anonymisation artefacts), so the reported values cannot be recomputed from the sample text",
            failures.len(),
            PUBLISHED_ROWS.len()
        );
        panic!("published rows out of tolerance: {failures:?}");
    }
}
