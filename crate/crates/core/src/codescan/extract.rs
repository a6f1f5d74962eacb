//! Regex-driven function extraction for C, Java and Python.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::bytes::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::digest::Hash256;

pub const PATTERNS_FILE: &str = include_str!("../../data/patterns.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    C,
    Java,
    Python,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported language {0:?} (supported: C, Java, Python)")]
pub struct UnsupportedLanguage(pub String);

impl Language {
    pub fn from_extension(ext: &str) -> Option<Language> {
        match ext.to_ascii_lowercase().as_str() {
            "c" | "h" => Some(Language::C),
            "java" => Some(Language::Java),
            "py" => Some(Language::Python),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Language::C => "C",
            Language::Java => "Java",
            Language::Python => "Python",
        }
    }
}

impl FromStr for Language {
    type Err = UnsupportedLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(Language::C),
            "java" => Ok(Language::Java),
            "python" | "py" => Ok(Language::Python),
            _ => Err(UnsupportedLanguage(s.to_owned())),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One detected function: where it came from and the exact text matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSpan {
    pub file_path: String,
    pub language: Language,
    pub name: String,
    pub matched_text: String,
    /// Byte offset of the match in the (LF-normalized) file.
    pub offset: usize,
}

/// SHA-256 of a function's matched text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionHash(pub Hash256);

impl fmt::Display for FunctionHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for FunctionHash {
    type Err = crate::digest::MalformedDigest;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(FunctionHash)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSet {
    pub version: u32,
    pub c: String,
    pub java: String,
    pub python: String,
}

impl PatternSet {
    pub fn shipped() -> &'static PatternSet {
        static SET: OnceLock<PatternSet> = OnceLock::new();
        SET.get_or_init(|| toml::from_str(PATTERNS_FILE).expect("shipped pattern file parses"))
    }

    pub fn pattern(&self, language: Language) -> &str {
        match language {
            Language::C => &self.c,
            Language::Java => &self.java,
            Language::Python => &self.python,
        }
    }
}

fn compiled(language: Language) -> &'static Regex {
    static C: OnceLock<Regex> = OnceLock::new();
    static JAVA: OnceLock<Regex> = OnceLock::new();
    static PYTHON: OnceLock<Regex> = OnceLock::new();
    let cell = match language {
        Language::C => &C,
        Language::Java => &JAVA,
        Language::Python => &PYTHON,
    };
    cell.get_or_init(|| {
        // ASCII classes, as in a PCRE pattern without the /u flag
        RegexBuilder::new(PatternSet::shipped().pattern(language))
            .unicode(false)
            .build()
            .expect("shipped pattern compiles")
    })
}

/// Rewrites CRLF and lone CR to LF.
pub fn normalize_line_endings(text: &str) -> String {
    if !text.contains('\r') {
        return text.to_owned();
    }
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Extracts functions from LF-normalized `source`, in source order.
pub fn extract_functions(source: &str, language: Language) -> Vec<FunctionSpan> {
    let bytes = source.as_bytes();
    let re = compiled(language);
    let name_group = re.capture_names().position(|n| n == Some("name")).unwrap_or(1);
    let mut spans = Vec::new();
    for caps in re.captures_iter(bytes) {
        let whole = caps.get(0).expect("group 0");
        let Some(name) = caps.get(name_group) else { continue };
        let name = ascii(name.as_bytes());
        if language == Language::Java {
            let ret = caps.name("ret").map(|m| ascii(m.as_bytes())).unwrap_or_default();
            if is_java_statement(&ret, &name) {
                continue;
            }
        }
        let end = match language {
            Language::Python => python_block_end(source, whole.start(), whole.end()),
            _ => whole.end(),
        };
        let matched_text = source[whole.start()..end].to_owned();
        if name.is_empty() || matched_text.is_empty() {
            continue;
        }
        spans.push(FunctionSpan { file_path: String::new(), language, name, matched_text, offset: whole.start() });
    }
    spans
}

pub fn hash_function(span: &FunctionSpan) -> FunctionHash {
    let text = normalize_line_endings(&span.matched_text);
    FunctionHash(Hash256::of(text.as_bytes()))
}

fn ascii(bytes: &[u8]) -> String {
    // patterns start and end on ASCII, so captures are valid UTF-8
    String::from_utf8_lossy(bytes).into_owned()
}

fn is_java_statement(ret: &str, name: &str) -> bool {
    const NAMES: &[&str] =
        &["if", "for", "while", "switch", "catch", "synchronized", "return", "new", "else", "do", "try"];
    const RETS: &[&str] = &["new", "return", "else", "throw", "case"];
    NAMES.contains(&name) || RETS.contains(&ret)
}

fn indent_width(line: &str) -> usize {
    line.len() - line.trim_start_matches([' ', '\t']).len()
}

/// End offset of a Python function: the header line plus every following
/// line indented deeper than it. Trailing blank lines are not included.
fn python_block_end(source: &str, start: usize, header_end: usize) -> usize {
    let line_start = source[..start].rfind('\n').map_or(0, |i| i + 1);
    let header_indent = indent_width(&source[line_start..]);
    let mut end = source[header_end..].find('\n').map_or(source.len(), |i| header_end + i);
    let mut pos = end;
    while pos < source.len() {
        let line_begin = pos + 1;
        let line_end = source[line_begin..].find('\n').map_or(source.len(), |i| line_begin + i);
        let line = &source[line_begin..line_end];
        if line.trim().is_empty() {
            pos = line_end;
            continue;
        }
        if indent_width(line) <= header_indent {
            break;
        }
        end = line_end;
        pos = line_end;
    }
    end
}
