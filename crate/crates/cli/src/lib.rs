//! IO, file formats and the command-line front end for the address-linkage
//! engine. The algorithms live in `addrlink-core`; this crate adds dataset
//! loading, match/truth/index files, parallel scoring and the `addrlink`
//! binary.

pub mod cli;
pub mod ingest;
pub mod persist;
pub mod pipeline;
pub mod report;

pub use cli::run;

/// The built-in abbreviation table (`data/synonyms.tsv`), parsed.
pub fn default_synonyms() -> Vec<(String, String)> {
    parse_synonyms(include_str!("../data/synonyms.tsv"))
}

/// Parses `short<TAB>long` lines; blank lines and `#` comments are skipped.
pub fn parse_synonyms(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            l.split_once('\t')
                .map(|(s, l)| (s.trim().to_string(), l.trim().to_string()))
        })
        .collect()
}
