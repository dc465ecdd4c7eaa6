//! Address records: a stable id plus the raw free-text address.

use alloc::string::String;
use core::fmt;

use crate::tokenizer::NormalizedText;

/// Identifier of an address within one dataset. Ids are unique per dataset;
/// the same id may appear in both sides of a linkage run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordId(pub u64);

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One address as loaded: the original text plus its normalised form,
/// computed once at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddressRecord {
    pub id: RecordId,
    pub raw: String,
    normalized: NormalizedText,
}

impl AddressRecord {
    pub fn new(id: RecordId, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let normalized = NormalizedText::new(&raw);
        AddressRecord {
            id,
            raw,
            normalized,
        }
    }

    pub fn normalized(&self) -> &NormalizedText {
        &self.normalized
    }

    /// True when normalisation left nothing: such a record produces no
    /// tokens and can never match anything.
    pub fn is_blank(&self) -> bool {
        self.normalized.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_computed_once_and_matches_raw() {
        let r = AddressRecord::new(RecordId(7), "unit 1, 2 Elizabeth-St.");
        assert_eq!(r.normalized().as_str(), "UNIT 1 2 ELIZABETH ST");
        assert_eq!(r.raw, "unit 1, 2 Elizabeth-St.");
        assert!(!r.is_blank());
        assert!(AddressRecord::new(RecordId(1), "  ,,  ").is_blank());
    }
}
