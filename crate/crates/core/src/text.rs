//! Small text helpers shared by the parser, the filters and the expansion step.

use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

/// Canonical sentinel for "no output-space constraints".
pub const NO_CONSTRAINTS: &str = "None.";

/// Placeholder marking where an input is spliced into a paraphrased task.
pub const INPUT_PLACEHOLDER: &str = "{INPUT}";

/// Comparison key used wherever two fields must be "identical": NFC, then trimmed.
pub fn match_key(s: &str) -> String {
    s.nfc().collect::<String>().trim().to_string()
}

/// Maps the accepted spellings of the empty-constraints sentinel onto [`NO_CONSTRAINTS`].
pub fn canonical_constraints(s: &str) -> String {
    let t = s.trim();
    match t {
        "None" | "none" | "None." | "none." | "NONE" | "NONE." => NO_CONSTRAINTS.to_string(),
        _ => t.to_string(),
    }
}

pub fn is_no_constraints(s: &str) -> bool {
    canonical_constraints(s) == NO_CONSTRAINTS
}

/// Lower-case hex SHA-256 of the UTF-8 bytes.
pub fn sha256_hex(s: &str) -> String {
    sha256_bytes_hex(s.as_bytes())
}

pub fn sha256_bytes_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
