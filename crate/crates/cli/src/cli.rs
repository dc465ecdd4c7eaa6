//! The `addrlink` command-line interface.
//!
//! Subcommands: `link` (batch linkage of two datasets), `query` (one
//! address against a dataset), `sweep` (threshold sweep), `gen` (synthetic
//! corpus with ground truth), `eval` (metrics against ground truth),
//! `stats` (token-frequency histogram) and `bench` (scaled performance
//! measurement). Data goes to stdout or files; progress lines go to
//! stderr. Exit status: 0 on success, 1 on runtime failure, 2 on bad
//! flags.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use addrlink_core::evalgen::{
    corrupt, evaluate_arbitrary, evaluate_reference, generate_reference, CorruptionProfile,
};
use addrlink_core::index::{build_index, query_candidates};
use addrlink_core::linkage::{threshold_sweep, Decision};
use addrlink_core::similarity::bag_similarity;
use addrlink_core::tokenizer::tokens;
use addrlink_core::{AddressRecord, LinkageConfig, NormalizedText, SimilarityScore, TokenKind};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ingest::{
    load_dataset, read_matches, read_truth, write_lines, write_matches, write_truth, ColumnSel,
    DatasetFormat, LoadedDataset,
};
use crate::pipeline::{link_with_stats, peak_rss_mib, LinkMode, LinkStats};
use crate::report;

/// Runs the CLI; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

#[derive(Parser)]
#[command(
    name = "addrlink",
    version,
    about = "Batch linkage of free-text address datasets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Link two datasets and write accepted matches
    Link(LinkArgs),
    /// Rank matches for a single address against a dataset
    Query(QueryArgs),
    /// Link once, report accepted links at several thresholds
    Sweep(SweepArgs),
    /// Generate a synthetic reference corpus, a corrupted copy and truth
    Gen(GenArgs),
    /// Evaluate a match file against ground truth
    Eval(EvalArgs),
    /// Token-frequency histogram of a dataset
    Stats(StatsArgs),
    /// Generate two large datasets, link them, report timings
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Reference,
    Arbitrary,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Lines,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Word,
    Char,
    Phrase,
    Numeric,
}

impl From<KindArg> for TokenKind {
    fn from(k: KindArg) -> TokenKind {
        match k {
            KindArg::Word => TokenKind::Word,
            KindArg::Char => TokenKind::Character,
            KindArg::Phrase => TokenKind::Phrase,
            KindArg::Numeric => TokenKind::Numeric,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Identity,
    Mild,
}

fn parse_tau(s: &str) -> Result<SimilarityScore, String> {
    let tau = SimilarityScore::parse_decimal(s).map_err(|e| e.to_string())?;
    if tau.is_zero() {
        return Err("tau must be positive".into());
    }
    Ok(tau)
}

/// A comma-separated, strictly ascending threshold list.
#[derive(Clone)]
struct TauList(Vec<SimilarityScore>);

fn parse_taus(s: &str) -> Result<TauList, String> {
    let taus: Vec<SimilarityScore> = s
        .split(',')
        .map(parse_tau)
        .collect::<Result<_, _>>()?;
    if taus.is_empty() {
        return Err("at least one tau required".into());
    }
    if !taus.windows(2).all(|w| w[0] < w[1]) {
        return Err("taus must be strictly ascending".into());
    }
    Ok(TauList(taus))
}

/// Flags shared by every linkage-style command.
#[derive(Args)]
struct ConfigFlags {
    /// Acceptance threshold (reference mode accepts score > tau)
    #[arg(long, default_value = "0.7", value_parser = parse_tau)]
    tau: SimilarityScore,
    /// Recurrency cutoff: tokens in more than this many records are not
    /// blocking keys
    #[arg(long, default_value_t = 100)]
    max_token_freq: u32,
    /// Candidates scanned for numeric consistency in arbitrary mode
    #[arg(long, default_value_t = 3)]
    top_n: u32,
    /// Token kind for blocking (round 1)
    #[arg(long, value_enum, default_value = "phrase")]
    round1_kind: KindArg,
    /// Token kind for scoring (round 2)
    #[arg(long, value_enum, default_value = "char")]
    round2_kind: KindArg,
}

impl ConfigFlags {
    fn to_config(&self) -> LinkageConfig {
        LinkageConfig {
            tau: self.tau,
            max_token_freq: self.max_token_freq,
            top_n: self.top_n,
            round1_kind: self.round1_kind.into(),
            round2_kind: self.round2_kind.into(),
        }
    }
}

#[derive(Args)]
struct LinkArgs {
    /// Left dataset (the records being linked)
    #[arg(long)]
    left: PathBuf,
    #[arg(long, value_enum, default_value = "lines")]
    left_format: FormatArg,
    /// CSV address column (name or 0-based index) for --left
    #[arg(long)]
    left_column: Option<String>,
    /// CSV id column for --left; row order otherwise
    #[arg(long)]
    left_id_column: Option<String>,
    /// Right dataset (the reference, or the second arbitrary dataset)
    #[arg(long)]
    right: PathBuf,
    #[arg(long, value_enum, default_value = "lines")]
    right_format: FormatArg,
    #[arg(long)]
    right_column: Option<String>,
    #[arg(long)]
    right_id_column: Option<String>,
    #[arg(long, value_enum, default_value = "reference")]
    mode: ModeArg,
    #[command(flatten)]
    config: ConfigFlags,
    /// Output match file
    #[arg(long)]
    out: PathBuf,
    /// Also write rejected candidate pairs with their scores
    #[arg(long)]
    debug: bool,
    /// Worker threads for scoring (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct QueryArgs {
    /// Dataset to search
    #[arg(long)]
    db: PathBuf,
    #[arg(long, value_enum, default_value = "lines")]
    db_format: FormatArg,
    #[arg(long)]
    db_column: Option<String>,
    #[arg(long)]
    db_id_column: Option<String>,
    /// The address to look up
    #[arg(long)]
    address: String,
    #[command(flatten)]
    config: ConfigFlags,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long, value_enum, default_value = "lines")]
    left_format: FormatArg,
    #[arg(long)]
    left_column: Option<String>,
    #[arg(long)]
    left_id_column: Option<String>,
    #[arg(long)]
    right: PathBuf,
    #[arg(long, value_enum, default_value = "lines")]
    right_format: FormatArg,
    #[arg(long)]
    right_column: Option<String>,
    #[arg(long)]
    right_id_column: Option<String>,
    /// Comma-separated ascending thresholds
    #[arg(long, default_value = "0.6,0.7,0.8", value_parser = parse_taus)]
    taus: TauList,
    #[command(flatten)]
    config: ConfigFlags,
    /// Write the report here as well as to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Directory for reference.txt, corrupted.txt and truth.tsv
    #[arg(long)]
    out_dir: PathBuf,
    /// Number of reference records
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Corruption preset; individual probabilities override it
    #[arg(long, value_enum, default_value = "mild")]
    profile: ProfileArg,
    #[arg(long)]
    p_typo: Option<f64>,
    #[arg(long)]
    p_drop_suburb: Option<f64>,
    #[arg(long)]
    p_drop_state: Option<f64>,
    #[arg(long)]
    p_drop_postcode: Option<f64>,
    #[arg(long)]
    p_abbrev: Option<f64>,
    #[arg(long)]
    p_reorder: Option<f64>,
    #[arg(long)]
    p_duplicate: Option<f64>,
    /// Synonym table file (short<TAB>long per line); built-in by default
    #[arg(long)]
    synonyms: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Match file produced by `link`
    #[arg(long)]
    matches: PathBuf,
    /// Ground-truth file (corrupted_id<TAB>reference_id)
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_enum, default_value = "reference")]
    mode: ModeArg,
    /// Thresholds to evaluate (reference mode)
    #[arg(long, default_value = "0.6,0.7,0.8", value_parser = parse_taus)]
    taus: TauList,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long, value_enum, default_value = "lines")]
    db_format: FormatArg,
    #[arg(long)]
    db_column: Option<String>,
    #[arg(long)]
    db_id_column: Option<String>,
    /// Token kind to index
    #[arg(long, value_enum, default_value = "phrase")]
    kind: KindArg,
    #[arg(long, default_value_t = 100)]
    max_token_freq: u32,
}

#[derive(Args)]
struct BenchArgs {
    /// Records per side
    #[arg(long, default_value_t = 1_000_000)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "reference")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Link(args) => cmd_link(args),
        Command::Query(args) => cmd_query(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn dataset_format(
    format: FormatArg,
    column: &Option<String>,
    id_column: &Option<String>,
    flag: &str,
) -> Result<DatasetFormat> {
    match format {
        FormatArg::Lines => {
            if column.is_some() || id_column.is_some() {
                bail!("column flags require --{flag}-format csv");
            }
            Ok(DatasetFormat::Lines)
        }
        FormatArg::Csv => {
            let address = column
                .as_deref()
                .with_context(|| format!("--{flag}-format csv requires --{flag}-column"))?;
            Ok(DatasetFormat::Csv {
                address: address.parse::<ColumnSel>().unwrap(),
                id: id_column
                    .as_deref()
                    .map(|s| s.parse::<ColumnSel>().unwrap()),
            })
        }
    }
}

fn load_logged(path: &Path, format: &DatasetFormat, label: &str) -> Result<LoadedDataset> {
    let t0 = Instant::now();
    let ds = load_dataset(path, format)?;
    eprintln!(
        "loaded {label} {}: {} records ({} blank, {} lines with invalid utf-8) in {:.2?}",
        path.display(),
        ds.records.len(),
        ds.blank.len(),
        ds.invalid_utf8_lines,
        t0.elapsed()
    );
    Ok(ds)
}

fn log_stats(stats: &LinkStats) {
    for (name, d) in &stats.stages {
        eprintln!("stage {name}: {d:.2?}");
    }
    eprintln!("candidate pairs: {}", stats.candidate_pairs);
}

fn cmd_link(args: LinkArgs) -> Result<()> {
    let left_format = dataset_format(args.left_format, &args.left_column, &args.left_id_column, "left")?;
    let right_format = dataset_format(
        args.right_format,
        &args.right_column,
        &args.right_id_column,
        "right",
    )?;
    let cfg = args.config.to_config();
    cfg.validate()?;

    let left = load_logged(&args.left, &left_format, "left")?;
    let right = load_logged(&args.right, &right_format, "right")?;

    let mode = match args.mode {
        ModeArg::Reference => LinkMode::Reference,
        ModeArg::Arbitrary => LinkMode::Arbitrary,
    };
    let (results, stats) =
        link_with_stats(&left.records, &right.records, &cfg, mode, args.threads)?;
    log_stats(&stats);

    let accepted = results
        .iter()
        .filter(|m| m.decision == Decision::Accepted)
        .count();
    let not_found = results
        .iter()
        .filter(|m| m.decision == Decision::NotFound)
        .count();
    write_matches(&results, &args.out, args.debug)?;
    eprintln!(
        "wrote {}: {accepted} accepted{} of {} scored pairs",
        args.out.display(),
        if mode == LinkMode::Arbitrary {
            format!(", {not_found} not found")
        } else {
            String::new()
        },
        results.len()
    );
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let format = dataset_format(args.db_format, &args.db_column, &args.db_id_column, "db")?;
    let cfg = args.config.to_config();
    cfg.validate()?;
    let db = load_logged(&args.db, &format, "db")?;

    // the single-address special case of batch linkage: shortlist via the
    // pruned inverted index, then score the shortlist with round-2 tokens
    let index = build_index(&db.records, cfg.round1_kind)?.prune(cfg.max_token_freq);
    let query_text = NormalizedText::new(&args.address);
    let query_bag = tokens(cfg.round1_kind, &query_text);
    let overlap = query_candidates(&index, &query_bag);

    let by_id: std::collections::BTreeMap<_, _> =
        db.records.iter().map(|r| (r.id, r)).collect();
    let query_round2 = tokens(cfg.round2_kind, &query_text);
    let mut ranked: Vec<(SimilarityScore, &AddressRecord)> = overlap
        .keys()
        .map(|id| {
            let record = by_id[id];
            let score = bag_similarity(&query_round2, &tokens(cfg.round2_kind, record.normalized()));
            (score, record)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.id.cmp(&b.1.id)));

    eprintln!(
        "query `{}`: {} candidates from {} indexed records",
        query_text,
        ranked.len(),
        db.records.len()
    );
    for (score, record) in ranked.iter().take(args.config.top_n as usize) {
        println!("{}\t{}\t{}", score.to_fixed6(), record.id, record.raw);
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let left_format = dataset_format(args.left_format, &args.left_column, &args.left_id_column, "left")?;
    let right_format = dataset_format(
        args.right_format,
        &args.right_column,
        &args.right_id_column,
        "right",
    )?;
    let mut cfg = args.config.to_config();
    cfg.tau = args.taus.0[0];
    let left = load_logged(&args.left, &left_format, "left")?;
    let right = load_logged(&args.right, &right_format, "right")?;

    let t0 = Instant::now();
    let report = threshold_sweep(&left.records, &right.records, &cfg, &args.taus.0)?;
    eprintln!("sweep over {} thresholds in {:.2?}", args.taus.0.len(), t0.elapsed());

    let rendered = report::render_sweep(&report);
    print!("{rendered}");
    if let Some(out) = &args.out {
        crate::ingest::write_atomic(out, &rendered)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let synonyms = match &args.synonyms {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read synonym table {}", path.display()))?;
            crate::parse_synonyms(&text)
        }
        None => crate::default_synonyms(),
    };
    let mut profile = match args.profile {
        ProfileArg::Identity => CorruptionProfile::identity(args.seed.wrapping_add(1)),
        ProfileArg::Mild => CorruptionProfile::mild(synonyms.clone(), args.seed.wrapping_add(1)),
    };
    profile.synonyms = synonyms;
    for (field, value) in [
        (&mut profile.typo, args.p_typo),
        (&mut profile.drop_suburb, args.p_drop_suburb),
        (&mut profile.drop_state, args.p_drop_state),
        (&mut profile.drop_postcode, args.p_drop_postcode),
        (&mut profile.abbreviation, args.p_abbrev),
        (&mut profile.reorder, args.p_reorder),
        (&mut profile.duplicate, args.p_duplicate),
    ] {
        if let Some(v) = value {
            if !(0.0..=1.0).contains(&v) {
                bail!("corruption probabilities must lie in [0, 1], got {v}");
            }
            *field = v;
        }
    }

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let t0 = Instant::now();
    let reference = generate_reference(args.seed, args.count)?;
    let (corrupted, truth) = corrupt(&reference, &profile);
    eprintln!("generated {} records in {:.2?}", args.count, t0.elapsed());

    let ref_path = args.out_dir.join("reference.txt");
    let cor_path = args.out_dir.join("corrupted.txt");
    let truth_path = args.out_dir.join("truth.tsv");
    write_lines(&reference, &ref_path)?;
    write_lines(&corrupted, &cor_path)?;
    write_truth(&truth, &truth_path)?;
    eprintln!(
        "wrote {}, {} and {}",
        ref_path.display(),
        cor_path.display(),
        truth_path.display()
    );
    println!(
        "count={} seed={} truth_links={}",
        args.count,
        args.seed,
        truth.len()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let results = read_matches(&args.matches)?;
    let truth = read_truth(&args.truth)?;
    let rendered = match args.mode {
        ModeArg::Reference => {
            let metrics = evaluate_reference(&results, &truth, &args.taus.0);
            report::render_reference_metrics(&metrics)
        }
        ModeArg::Arbitrary => {
            let metrics = evaluate_arbitrary(&results, &truth);
            report::render_arbitrary_metrics(&metrics)
        }
    };
    print!("{rendered}");
    if let Some(out) = &args.out {
        crate::ingest::write_atomic(out, &rendered)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let format = dataset_format(args.db_format, &args.db_column, &args.db_id_column, "db")?;
    let db = load_logged(&args.db, &format, "db")?;
    let t0 = Instant::now();
    let index = build_index(&db.records, args.kind.into())?;
    eprintln!("indexed in {:.2?}", t0.elapsed());
    print!("{}", report::render_stats(&index, args.max_token_freq));
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let cfg = LinkageConfig::default();
    let mode = match args.mode {
        ModeArg::Reference => LinkMode::Reference,
        ModeArg::Arbitrary => LinkMode::Arbitrary,
    };

    let t_total = Instant::now();
    let t0 = Instant::now();
    let reference = generate_reference(args.seed, args.count)?;
    let profile = CorruptionProfile::mild(crate::default_synonyms(), args.seed.wrapping_add(1));
    let (corrupted, _truth) = corrupt(&reference, &profile);
    let gen_seconds = t0.elapsed().as_secs_f64();
    eprintln!("generated 2 x {} records in {gen_seconds:.1}s", args.count);

    let t0 = Instant::now();
    let (results, stats) = link_with_stats(&corrupted, &reference, &cfg, mode, args.threads)?;
    let link_seconds = t0.elapsed().as_secs_f64();
    log_stats(&stats);

    let accepted = results
        .iter()
        .filter(|m| m.decision == Decision::Accepted)
        .count();
    println!(
        "n={} mode={} candidate_pairs={} accepted={} gen_s={gen_seconds:.1} link_s={link_seconds:.1} total_s={:.1} peak_rss_mib={}",
        args.count,
        match mode {
            LinkMode::Reference => "reference",
            LinkMode::Arbitrary => "arbitrary",
        },
        stats.candidate_pairs,
        accepted,
        t_total.elapsed().as_secs_f64(),
        peak_rss_mib().map_or_else(|| "unknown".to_string(), |m| m.to_string()),
    );
    Ok(())
}
