//! Human-readable and machine-readable rendering of evaluation reports.

use addrlink_core::evalgen::{ArbitraryMetrics, TauMetrics};
use addrlink_core::index::InvertedIndex;
use addrlink_core::linkage::SweepReport;

/// Reference-mode evaluation: a table plus `key=value` lines.
pub fn render_reference_metrics(metrics: &[TauMetrics]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>10} {:>8} {:>8} {:>8} {:>10} {:>10} {:>10}\n",
        "tau", "accepted", "tp", "fp", "fn", "precision", "recall", "missed"
    ));
    for m in metrics {
        out.push_str(&format!(
            "{:<10} {:>10} {:>8} {:>8} {:>8} {:>10.4} {:>10.4} {:>10.4}{}\n",
            m.tau.to_fixed6(),
            m.accepted,
            m.true_positives,
            m.false_positives,
            m.false_negatives,
            m.precision,
            m.recall,
            m.missed_rate,
            if m.degenerate { "  (degenerate)" } else { "" }
        ));
    }
    out.push('\n');
    for m in metrics {
        out.push_str(&format!(
            "tau={} accepted={} tp={} fp={} fn={} precision={:.6} recall={:.6} missed_rate={:.6} degenerate={}\n",
            m.tau.to_fixed6(),
            m.accepted,
            m.true_positives,
            m.false_positives,
            m.false_negatives,
            m.precision,
            m.recall,
            m.missed_rate,
            m.degenerate
        ));
    }
    out
}

/// Arbitrary-mode trichotomy: table plus `key=value` lines.
pub fn render_arbitrary_metrics(m: &ArbitraryMetrics) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:>10} {:>10}\n",
        "outcome", "count", "fraction"
    ));
    for (name, count, frac) in [
        ("accepted_correct", m.accepted_correct, m.frac_correct),
        ("accepted_incorrect", m.accepted_incorrect, m.frac_incorrect),
        ("not_found", m.not_found, m.frac_not_found),
    ] {
        out.push_str(&format!("{name:<20} {count:>10} {frac:>10.4}\n"));
    }
    out.push_str(&format!("{:<20} {:>10}\n\n", "total", m.total));
    out.push_str(&format!(
        "total={} accepted_correct={} accepted_incorrect={} not_found={} frac_correct={:.6} frac_incorrect={:.6} frac_not_found={:.6}\n",
        m.total,
        m.accepted_correct,
        m.accepted_incorrect,
        m.not_found,
        m.frac_correct,
        m.frac_incorrect,
        m.frac_not_found
    ));
    out
}

/// Threshold sweep: accepted links per threshold and links lost relative
/// to the lowest threshold.
pub fn render_sweep(report: &SweepReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>10} {:>16}\n",
        "tau", "accepted", "lost_vs_lowest"
    ));
    for e in &report.entries {
        out.push_str(&format!(
            "{:<10} {:>10} {:>16}\n",
            e.tau.to_fixed6(),
            e.accepted_count,
            e.lost_vs_lowest.len()
        ));
    }
    out.push('\n');
    for e in &report.entries {
        out.push_str(&format!(
            "tau={} accepted={} lost_vs_lowest={}\n",
            e.tau.to_fixed6(),
            e.accepted_count,
            e.lost_vs_lowest.len()
        ));
    }
    out
}

/// Token-frequency histogram of an index; guides the choice of the
/// recurrency cutoff.
pub fn render_stats(index: &InvertedIndex, max_token_freq: u32) -> String {
    const BUCKETS: [(usize, usize, &str); 6] = [
        (1, 1, "1"),
        (2, 10, "2-10"),
        (11, 100, "11-100"),
        (101, 1_000, "101-1000"),
        (1_001, 10_000, "1001-10000"),
        (10_001, usize::MAX, ">10000"),
    ];
    let mut counts = [0usize; BUCKETS.len()];
    let mut max_freq = 0usize;
    let mut surviving = 0usize;
    for (_, postings) in index.entries() {
        let f = postings.frequency();
        max_freq = max_freq.max(f);
        if f <= max_token_freq as usize {
            surviving += 1;
        }
        let b = BUCKETS.iter().position(|&(lo, hi, _)| f >= lo && f <= hi);
        counts[b.expect("frequency at least 1")] += 1;
    }

    let total = index.num_tokens();
    let mut out = String::new();
    out.push_str(&format!(
        "distinct tokens: {total}\ntotal postings:  {}\nmax frequency:   {max_freq}\n\n",
        index.total_postings()
    ));
    out.push_str(&format!("{:<12} {:>12} {:>9}\n", "frequency", "tokens", "share"));
    for (i, &(_, _, label)) in BUCKETS.iter().enumerate() {
        let share = if total == 0 {
            0.0
        } else {
            100.0 * counts[i] as f64 / total as f64
        };
        out.push_str(&format!("{label:<12} {:>12} {share:>8.1}%\n", counts[i]));
    }
    out.push_str(&format!(
        "\ntokens with frequency <= {max_token_freq} (usable as blocking keys): {surviving} ({:.1}%)\n",
        if total == 0 { 0.0 } else { 100.0 * surviving as f64 / total as f64 }
    ));

    let mut top: Vec<(&str, usize)> = index
        .entries()
        .map(|(t, p)| (t, p.frequency()))
        .collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    out.push_str("\nmost recurrent tokens:\n");
    for (t, f) in top.into_iter().take(10) {
        out.push_str(&format!("{f:>8}  {t}\n"));
    }
    out
}
