//! Function extraction and fingerprinting.
//!
//! Functions are found with one regular expression per language and each
//! match is fingerprinted with SHA-256 over its exact, LF-normalized text.
//! Any edit to a function, even whitespace, yields a different fingerprint.

mod extract;
mod scan;

pub use extract::{
    extract_functions, hash_function, normalize_line_endings, FunctionHash, FunctionSpan, Language, PatternSet,
    UnsupportedLanguage, PATTERNS_FILE,
};
pub use scan::{build_zip, scan_dir, scan_project, scan_zip, ProjectScan, ScanError, ScanLimits};
