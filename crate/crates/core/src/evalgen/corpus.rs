//! Reference-corpus generation and corruption with ground truth.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::rng::SeededRng;
use crate::record::{AddressRecord, RecordId};

const STREET_TYPES: &[&str] = &[
    "STREET", "ROAD", "AVENUE", "COURT", "DRIVE", "PLACE", "PARADE", "HIGHWAY",
];
const STATES: &[&str] = &["NSW", "VIC", "QLD", "SA", "WA", "TAS", "NT", "ACT"];
const STATE_FULL_SINGLE: &[&str] = &["VICTORIA", "QUEENSLAND", "TASMANIA"];

const NAME_START: &[&str] = &[
    "BAR", "BEL", "BRAD", "CAL", "CAR", "DAR", "ELD", "FERN", "GLEN", "HAW", "KEL", "KIR", "LAN",
    "MAR", "MER", "NOR", "OAK", "PEN", "RAVEN", "ROSE", "SAN", "TAR", "THORN", "WAT", "WIL", "WYN",
];
const NAME_MID: &[&str] = &[
    "", "A", "BER", "DA", "DER", "GA", "LEY", "LO", "MON", "NA", "RA", "RI", "TA", "VER", "BO",
    "DEL", "FIN", "GRA", "LIN", "O", "SEL", "TRE", "VA", "WIN",
];
const NAME_END: &[&str] = &[
    "BROOK", "BURY", "BY", "COMBE", "DALE", "DON", "FIELD", "FORD", "GATE", "HAM", "HURST",
    "LEIGH", "MERE", "MOOR", "MORE", "TON", "VALE", "VIEW", "WICK", "WOOD", "WORTH",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenError {
    ZeroCount,
    /// The component pools cannot yield the requested number of distinct
    /// normalised addresses.
    SpaceExhausted { requested: usize, generated: usize },
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::ZeroCount => write!(f, "corpus size must be at least 1"),
            GenError::SpaceExhausted {
                requested,
                generated,
            } => write!(
                f,
                "component space exhausted after {generated} of {requested} distinct addresses"
            ),
        }
    }
}

impl core::error::Error for GenError {}

struct ComponentPools {
    street_names: Vec<String>,
    suburbs: Vec<String>,
}

impl ComponentPools {
    fn sized_for(rng: &mut SeededRng, n: usize) -> Self {
        // Pools grow with the corpus so token recurrency stays realistic at
        // any scale: street-name phrases stay rare (usable blocking keys)
        // while suburb-level phrases recur hundreds of times in large
        // corpora, like real localities do, and get recurrency-pruned.
        ComponentPools {
            street_names: sample_names(rng, (n / 32).clamp(64, 40_000)),
            suburbs: sample_names(rng, (n / 1_600).clamp(32, 4_000)),
        }
    }

    /// Upper bound on distinct normalised addresses these pools can yield:
    /// unit variants (none or 1..=99) x street numbers x names x types x
    /// suburbs. State and postcode are functions of the suburb.
    fn combinations(&self) -> u128 {
        100u128
            * 999
            * self.street_names.len() as u128
            * STREET_TYPES.len() as u128
            * self.suburbs.len() as u128
    }
}

fn sample_names(rng: &mut SeededRng, count: usize) -> Vec<String> {
    let mut pool = BTreeSet::new();
    while pool.len() < count {
        let mut name = String::new();
        name.push_str(rng.pick(NAME_START));
        name.push_str(rng.pick(NAME_MID));
        // a second middle syllable opens up enough combinations for the
        // largest pools
        if pool.len() * 3 > NAME_START.len() * NAME_MID.len() * NAME_END.len() {
            name.push_str(rng.pick(NAME_MID));
        }
        name.push_str(rng.pick(NAME_END));
        pool.insert(name);
    }
    pool.into_iter().collect()
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// State and postcode are functions of the suburb, as in real data.
fn locality_of(suburb: &str) -> (&'static str, u32) {
    let h = fnv1a(suburb);
    let state = STATES[(h % 8) as usize];
    let postcode = 1000 + ((h >> 3) % 9000) as u32;
    (state, postcode)
}

/// Generates `n` distinct synthetic addresses of the shape
/// `[UNIT u] number street-name street-type suburb state postcode`, with
/// ids 1..=n. Distinctness is enforced on the normalised text; the same
/// seed always yields the same corpus.
pub fn generate_reference(seed: u64, n: usize) -> Result<Vec<AddressRecord>, GenError> {
    let mut rng = SeededRng::new(seed);
    let pools = ComponentPools::sized_for(&mut rng, n);
    generate_with(&mut rng, n, &pools)
}

fn generate_with(
    rng: &mut SeededRng,
    n: usize,
    pools: &ComponentPools,
) -> Result<Vec<AddressRecord>, GenError> {
    if n == 0 {
        return Err(GenError::ZeroCount);
    }
    if n as u128 > pools.combinations() {
        return Err(GenError::SpaceExhausted {
            requested: n,
            generated: 0,
        });
    }
    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(n);
    let max_attempts = 50 * n as u64 + 1_000;
    let mut attempts = 0u64;
    while records.len() < n {
        attempts += 1;
        if attempts > max_attempts {
            return Err(GenError::SpaceExhausted {
                requested: n,
                generated: records.len(),
            });
        }
        let suburb = rng.pick(&pools.suburbs);
        let (state, postcode) = locality_of(suburb);
        let mut addr = String::new();
        if rng.chance(0.25) {
            addr.push_str("UNIT ");
            addr.push_str(&(rng.below(99) + 1).to_string());
            addr.push(' ');
        }
        addr.push_str(&format!(
            "{} {} {} {} {} {}",
            rng.below(999) + 1,
            rng.pick(&pools.street_names),
            rng.pick(STREET_TYPES),
            suburb,
            state,
            postcode
        ));
        if seen.insert(addr.clone()) {
            let id = RecordId(records.len() as u64 + 1);
            records.push(AddressRecord::new(id, addr));
        }
    }
    Ok(records)
}

/// Ground truth: for every corrupted record, the id of the reference record
/// it was derived from. Each corrupted id appears exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthSet {
    pairs: Vec<(RecordId, RecordId)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthSetError {
    pub duplicate: RecordId,
}

impl fmt::Display for TruthSetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "corrupted id {} has more than one truth link",
            self.duplicate
        )
    }
}

impl core::error::Error for TruthSetError {}

impl TruthSet {
    /// Builds a truth set from `(corrupted id, reference id)` pairs.
    pub fn new(mut pairs: Vec<(RecordId, RecordId)>) -> Result<Self, TruthSetError> {
        pairs.sort_unstable();
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(TruthSetError { duplicate: w[0].0 });
        }
        Ok(TruthSet { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (RecordId, RecordId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn reference_of(&self, corrupted: RecordId) -> Option<RecordId> {
        self.pairs
            .binary_search_by_key(&corrupted, |p| p.0)
            .ok()
            .map(|i| self.pairs[i].1)
    }
}

/// Per-record corruption probabilities. Each class fires independently;
/// probabilities must lie in `[0, 1]`. The same seed, profile and input
/// always produce identical output.
#[derive(Debug, Clone)]
pub struct CorruptionProfile {
    /// One random character substitution, transposition or deletion.
    pub typo: f64,
    pub drop_suburb: f64,
    pub drop_state: f64,
    pub drop_postcode: f64,
    /// Swap one word with its counterpart from the synonym table
    /// (abbreviation <-> expansion).
    pub abbreviation: f64,
    /// Swap two adjacent words.
    pub reorder: f64,
    /// Duplicate one word in place.
    pub duplicate: f64,
    /// `(short, long)` pairs driving abbreviation swaps, e.g. ST/STREET.
    /// Used for corruption only; matching never consults it.
    pub synonyms: Vec<(String, String)>,
    pub seed: u64,
}

impl CorruptionProfile {
    /// All probabilities zero: corruption is the identity.
    pub fn identity(seed: u64) -> Self {
        CorruptionProfile {
            typo: 0.0,
            drop_suburb: 0.0,
            drop_state: 0.0,
            drop_postcode: 0.0,
            abbreviation: 0.0,
            reorder: 0.0,
            duplicate: 0.0,
            synonyms: Vec::new(),
            seed,
        }
    }

    /// Every corruption class at probability 0.1.
    pub fn mild(synonyms: Vec<(String, String)>, seed: u64) -> Self {
        CorruptionProfile {
            typo: 0.1,
            drop_suburb: 0.1,
            drop_state: 0.1,
            drop_postcode: 0.1,
            abbreviation: 0.1,
            reorder: 0.1,
            duplicate: 0.1,
            synonyms,
            seed,
        }
    }

    fn assert_valid(&self) {
        for (name, p) in [
            ("typo", self.typo),
            ("drop_suburb", self.drop_suburb),
            ("drop_state", self.drop_state),
            ("drop_postcode", self.drop_postcode),
            ("abbreviation", self.abbreviation),
            ("reorder", self.reorder),
            ("duplicate", self.duplicate),
        ] {
            assert!(
                (0.0..=1.0).contains(&p),
                "corruption probability {name}={p} outside [0, 1]"
            );
        }
    }
}

/// Corrupts each record independently per the profile. The output keeps
/// input order with fresh ids 1..=n, and the truth set links each corrupted
/// id to its source record's id.
pub fn corrupt(records: &[AddressRecord], profile: &CorruptionProfile) -> (Vec<AddressRecord>, TruthSet) {
    profile.assert_valid();
    let mut rng = SeededRng::new(profile.seed);
    let mut corrupted = Vec::with_capacity(records.len());
    let mut pairs = Vec::with_capacity(records.len());
    for (i, source) in records.iter().enumerate() {
        let id = RecordId(i as u64 + 1);
        let text = corrupt_one(source, profile, &mut rng);
        corrupted.push(AddressRecord::new(id, text));
        pairs.push((id, source.id));
    }
    let truth = TruthSet { pairs };
    (corrupted, truth)
}

fn corrupt_one(source: &AddressRecord, profile: &CorruptionProfile, rng: &mut SeededRng) -> String {
    let mut words: Vec<String> = source.normalized().words().map(String::from).collect();

    // Drops first, so a dropped token cannot be resurrected by duplication.
    let drops = [
        (profile.drop_postcode, postcode_position(&words)),
        (profile.drop_state, state_position(&words)),
        (profile.drop_suburb, suburb_position(&words)),
    ];
    let mut to_remove: Vec<usize> = Vec::new();
    for (p, pos) in drops {
        if let Some(pos) = pos {
            if rng.chance(p) {
                to_remove.push(pos);
            }
        }
    }
    to_remove.sort_unstable();
    to_remove.dedup();
    for pos in to_remove.into_iter().rev() {
        words.remove(pos);
    }

    if !profile.synonyms.is_empty() && rng.chance(profile.abbreviation) {
        apply_abbreviation(&mut words, &profile.synonyms, rng);
    }
    if !words.is_empty() && rng.chance(profile.duplicate) {
        let i = rng.below(words.len());
        let w = words[i].clone();
        words.insert(i + 1, w);
    }
    if words.len() >= 2 && rng.chance(profile.reorder) {
        let i = rng.below(words.len() - 1);
        words.swap(i, i + 1);
    }
    if !words.is_empty() && rng.chance(profile.typo) {
        apply_typo(&mut words, rng);
    }

    words.join(" ")
}

/// Last all-digit word of length 4.
fn postcode_position(words: &[String]) -> Option<usize> {
    words
        .iter()
        .rposition(|w| w.len() == 4 && w.bytes().all(|b| b.is_ascii_digit()))
}

/// Last word that looks like a state code or single-word state name.
fn state_position(words: &[String]) -> Option<usize> {
    words
        .iter()
        .rposition(|w| STATES.contains(&w.as_str()) || STATE_FULL_SINGLE.contains(&w.as_str()))
}

/// The word immediately before the state (or before the postcode when no
/// state is present).
fn suburb_position(words: &[String]) -> Option<usize> {
    let anchor = state_position(words).or_else(|| postcode_position(words))?;
    anchor.checked_sub(1)
}

fn apply_abbreviation(words: &mut Vec<String>, synonyms: &[(String, String)], rng: &mut SeededRng) {
    let mut swappable: Vec<usize> = Vec::new();
    for (i, w) in words.iter().enumerate() {
        if synonyms
            .iter()
            .any(|(short, long)| w == short || (w == long && !long.contains(' ')))
        {
            swappable.push(i);
        }
    }
    if swappable.is_empty() {
        return;
    }
    let i = swappable[rng.below(swappable.len())];
    let w = words[i].clone();
    for (short, long) in synonyms {
        if &w == short {
            // expansions may be multi-word ("NSW" -> "NEW SOUTH WALES")
            let expansion: Vec<String> = long.split(' ').map(String::from).collect();
            words.splice(i..=i, expansion);
            return;
        }
        if &w == long && !long.contains(' ') {
            words[i] = short.clone();
            return;
        }
    }
}

const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

fn apply_typo(words: &mut Vec<String>, rng: &mut SeededRng) {
    let wi = rng.below(words.len());
    let mut chars: Vec<u8> = words[wi].bytes().collect();
    let op = rng.below(3);
    match op {
        // substitution
        0 => {
            let p = rng.below(chars.len());
            let old = chars[p];
            loop {
                let c = *rng.pick(ALPHABET);
                if c != old {
                    chars[p] = c;
                    break;
                }
            }
        }
        // transposition of adjacent characters (substitution for 1-char words)
        1 if chars.len() >= 2 => {
            let p = rng.below(chars.len() - 1);
            chars.swap(p, p + 1);
        }
        1 => {
            let old = chars[0];
            loop {
                let c = *rng.pick(ALPHABET);
                if c != old {
                    chars[0] = c;
                    break;
                }
            }
        }
        // deletion; a word deleted to nothing is removed entirely
        _ => {
            let p = rng.below(chars.len());
            chars.remove(p);
        }
    }
    if chars.is_empty() {
        words.remove(wi);
    } else {
        words[wi] = String::from_utf8(chars).expect("alphabet is ASCII");
    }
}
