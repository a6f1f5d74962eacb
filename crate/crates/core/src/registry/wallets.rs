//! Administrator-maintained mapping of usernames to wallet addresses.
//!
//! The file is a single JSON object:
//!
//! ```json
//! { "alice": "0x1111111111111111111111111111111111111111" }
//! ```

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{DeserializeSeed, MapAccess, Visitor};
use serde::Deserializer;

use crate::contracts::WalletAddress;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Io(String),
    Parse(String),
    DuplicateKey(String),
    MalformedAddress { username: String, value: String },
    EmptyUsername,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}: line {line}: {}", path.display(), describe(kind))]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: usize,
    pub kind: ConfigErrorKind,
}

fn describe(kind: &ConfigErrorKind) -> String {
    match kind {
        ConfigErrorKind::Io(e) => format!("cannot read wallet config: {e}"),
        ConfigErrorKind::Parse(e) => format!("wallet config does not parse: {e}"),
        ConfigErrorKind::DuplicateKey(u) => format!("duplicate entry for user {u:?}"),
        ConfigErrorKind::MalformedAddress { username, value } => {
            format!("malformed wallet address {value:?} for user {username:?}")
        }
        ConfigErrorKind::EmptyUsername => "empty username".to_owned(),
    }
}

/// Validated username → wallet mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalletBook {
    entries: BTreeMap<String, WalletAddress>,
}

impl WalletBook {
    pub fn from_entries<I: IntoIterator<Item = (String, WalletAddress)>>(entries: I) -> Self {
        WalletBook { entries: entries.into_iter().collect() }
    }

    pub fn wallet(&self, username: &str) -> Option<&WalletAddress> {
        self.entries.get(username)
    }

    pub fn username_of(&self, wallet: &WalletAddress) -> Option<&str> {
        self.entries.iter().find(|(_, w)| *w == wallet).map(|(u, _)| u.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &WalletAddress)> {
        self.entries.iter().map(|(u, w)| (u.as_str(), w))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_wallet_config(path: &Path) -> Result<WalletBook, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: 0,
        kind: ConfigErrorKind::Io(e.to_string()),
    })?;
    parse_wallet_config(&text).map_err(|(line, kind)| ConfigError { path: path.to_path_buf(), line, kind })
}

/// Parses wallet config text; errors carry the 1-based line.
pub fn parse_wallet_config(text: &str) -> Result<WalletBook, (usize, ConfigErrorKind)> {
    let problem = RefCell::new(None);
    let mut de = serde_json::Deserializer::from_str(text);
    let parsed = Entries { problem: &problem }.deserialize(&mut de).and_then(|v| de.end().map(|_| v));
    match parsed {
        Ok(entries) => Ok(WalletBook::from_entries(entries)),
        Err(e) => match problem.into_inner() {
            Some(kind) => {
                let line = match &kind {
                    ConfigErrorKind::DuplicateKey(u) => key_line(text, u, 2),
                    ConfigErrorKind::MalformedAddress { username, .. } => key_line(text, username, 1),
                    _ => None,
                };
                Err((line.unwrap_or(e.line()), kind))
            }
            None => Err((e.line(), ConfigErrorKind::Parse(e.to_string()))),
        },
    }
}

/// Line of the `nth` occurrence of `key` used as an object key.
fn key_line(text: &str, key: &str, nth: usize) -> Option<usize> {
    let quoted = serde_json::to_string(key).ok()?;
    let mut seen = 0;
    let mut from = 0;
    while let Some(pos) = text[from..].find(&quoted) {
        let at = from + pos;
        from = at + quoted.len();
        if text[from..].trim_start().starts_with(':') {
            seen += 1;
            if seen == nth {
                return Some(text[..at].matches('\n').count() + 1);
            }
        }
    }
    None
}

struct Entries<'a> {
    problem: &'a RefCell<Option<ConfigErrorKind>>,
}

impl<'de> DeserializeSeed<'de> for Entries<'_> {
    type Value = Vec<(String, WalletAddress)>;

    fn deserialize<D: Deserializer<'de>>(self, deserializer: D) -> Result<Self::Value, D::Error> {
        deserializer.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for Entries<'_> {
    type Value = Vec<(String, WalletAddress)>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an object mapping usernames to wallet addresses")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
        let mut out: Vec<(String, WalletAddress)> = Vec::new();
        while let Some(username) = map.next_key::<String>()? {
            let value: String = map.next_value()?;
            let fail = |kind: ConfigErrorKind| {
                let msg = describe(&kind);
                *self.problem.borrow_mut() = Some(kind);
                serde::de::Error::custom(msg)
            };
            if username.trim().is_empty() {
                return Err(fail(ConfigErrorKind::EmptyUsername));
            }
            if out.iter().any(|(u, _)| *u == username) {
                return Err(fail(ConfigErrorKind::DuplicateKey(username)));
            }
            match value.parse::<WalletAddress>() {
                Ok(w) => out.push((username, w)),
                Err(_) => return Err(fail(ConfigErrorKind::MalformedAddress { username, value })),
            }
        }
        Ok(out)
    }
}
