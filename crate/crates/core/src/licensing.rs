//! Supported license catalog and the directed compatibility relation.
//!
//! `allowed[origin]` lists every license a derivative of `origin` code may
//! declare. The relation lives in a data file (see `data/compatibility.toml`);
//! nothing in this module hard-codes an edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The default matrix shipped with the crate.
pub const DEFAULT_MATRIX: &str = include_str!("../data/compatibility.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LicenseId {
    Mit,
    Bsd2Clause,
    Bsd3Clause,
    Apache20,
    Gpl20,
    Gpl20OrLater,
    Gpl30,
    Gpl30OrLater,
    Lgpl21,
    Lgpl30,
    Mpl11,
    Mpl20,
    Agpl10OrLater,
    Agpl30,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    Permissive,
    WeakCopyleft,
    StrongCopyleft,
}

impl LicenseId {
    pub const ALL: [LicenseId; 14] = [
        LicenseId::Mit,
        LicenseId::Bsd2Clause,
        LicenseId::Bsd3Clause,
        LicenseId::Apache20,
        LicenseId::Gpl20,
        LicenseId::Gpl20OrLater,
        LicenseId::Gpl30,
        LicenseId::Gpl30OrLater,
        LicenseId::Lgpl21,
        LicenseId::Lgpl30,
        LicenseId::Mpl11,
        LicenseId::Mpl20,
        LicenseId::Agpl10OrLater,
        LicenseId::Agpl30,
    ];

    /// Canonical SPDX short identifier.
    pub fn as_str(self) -> &'static str {
        match self {
            LicenseId::Mit => "MIT",
            LicenseId::Bsd2Clause => "BSD-2-Clause",
            LicenseId::Bsd3Clause => "BSD-3-Clause",
            LicenseId::Apache20 => "Apache-2.0",
            LicenseId::Gpl20 => "GPL-2.0",
            LicenseId::Gpl20OrLater => "GPL-2.0-or-later",
            LicenseId::Gpl30 => "GPL-3.0",
            LicenseId::Gpl30OrLater => "GPL-3.0-or-later",
            LicenseId::Lgpl21 => "LGPL-2.1",
            LicenseId::Lgpl30 => "LGPL-3.0",
            LicenseId::Mpl11 => "MPL-1.1",
            LicenseId::Mpl20 => "MPL-2.0",
            LicenseId::Agpl10OrLater => "AGPL-1.0-or-later",
            LicenseId::Agpl30 => "AGPL-3.0",
        }
    }

    pub fn info(self) -> LicenseInfo {
        use Category::*;
        let (full_name, category) = match self {
            LicenseId::Mit => ("MIT License", Permissive),
            LicenseId::Bsd2Clause => ("BSD 2-Clause \"Simplified\" License", Permissive),
            LicenseId::Bsd3Clause => ("BSD 3-Clause \"New\" or \"Revised\" License", Permissive),
            LicenseId::Apache20 => ("Apache License 2.0", Permissive),
            LicenseId::Gpl20 => ("GNU General Public License v2.0 only", StrongCopyleft),
            LicenseId::Gpl20OrLater => ("GNU General Public License v2.0 or later", StrongCopyleft),
            LicenseId::Gpl30 => ("GNU General Public License v3.0 only", StrongCopyleft),
            LicenseId::Gpl30OrLater => ("GNU General Public License v3.0 or later", StrongCopyleft),
            LicenseId::Lgpl21 => ("GNU Lesser General Public License v2.1 only", WeakCopyleft),
            LicenseId::Lgpl30 => ("GNU Lesser General Public License v3.0 only", WeakCopyleft),
            LicenseId::Mpl11 => ("Mozilla Public License 1.1", WeakCopyleft),
            LicenseId::Mpl20 => ("Mozilla Public License 2.0", WeakCopyleft),
            LicenseId::Agpl10OrLater => ("Affero General Public License v1.0 or later", StrongCopyleft),
            LicenseId::Agpl30 => ("GNU Affero General Public License v3.0", StrongCopyleft),
        };
        LicenseInfo {
            id: self,
            full_name: full_name.to_owned(),
            category,
            info_url: format!("https://spdx.org/licenses/{}.html", self.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LicenseInfo {
    pub id: LicenseId,
    pub full_name: String,
    pub category: Category,
    pub info_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LicenseError {
    #[error("unsupported license {text:?}; expected one of: {}", valid_list())]
    Unsupported { text: String },
    #[error("compatibility matrix does not parse: {0}")]
    Parse(String),
    #[error("compatibility matrix row {row:?}: unknown license token {token:?}")]
    UnknownToken { row: String, token: String },
    #[error("compatibility matrix has more than one row for {0}")]
    DuplicateRow(LicenseId),
    #[error("compatibility matrix is missing the row for {0}")]
    MissingRow(LicenseId),
    #[error("compatibility matrix row {0} does not allow itself")]
    NonReflexive(LicenseId),
}

fn valid_list() -> String {
    LicenseId::ALL.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(", ")
}

/// Case-insensitive parse of a supported SPDX identifier.
pub fn parse_license_id(text: &str) -> Result<LicenseId, LicenseError> {
    let trimmed = text.trim();
    LicenseId::ALL
        .into_iter()
        .find(|l| l.as_str().eq_ignore_ascii_case(trimmed))
        .ok_or_else(|| LicenseError::Unsupported { text: text.to_owned() })
}

impl FromStr for LicenseId {
    type Err = LicenseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_license_id(s)
    }
}

impl fmt::Display for LicenseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for LicenseId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LicenseId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_license_id(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    #[serde(default)]
    row: Vec<MatrixRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixRow {
    origin: String,
    allowed: Vec<String>,
}

/// Validated compatibility relation: total over the 14 licenses and reflexive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityMatrix {
    allowed: BTreeMap<LicenseId, BTreeSet<LicenseId>>,
}

impl CompatibilityMatrix {
    pub fn parse(text: &str) -> Result<Self, LicenseError> {
        let file: MatrixFile = toml::from_str(text).map_err(|e| LicenseError::Parse(e.to_string()))?;
        let mut allowed = BTreeMap::new();
        for row in file.row {
            let origin = parse_license_id(&row.origin)
                .map_err(|_| LicenseError::UnknownToken { row: row.origin.clone(), token: row.origin.clone() })?;
            let mut targets = BTreeSet::new();
            for token in &row.allowed {
                let target = parse_license_id(token)
                    .map_err(|_| LicenseError::UnknownToken { row: row.origin.clone(), token: token.clone() })?;
                targets.insert(target);
            }
            if allowed.insert(origin, targets).is_some() {
                return Err(LicenseError::DuplicateRow(origin));
            }
        }
        for license in LicenseId::ALL {
            match allowed.get(&license) {
                None => return Err(LicenseError::MissingRow(license)),
                Some(set) if !set.contains(&license) => return Err(LicenseError::NonReflexive(license)),
                Some(_) => {}
            }
        }
        Ok(CompatibilityMatrix { allowed })
    }

    pub fn load(path: &Path) -> Result<Self, LicenseError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| LicenseError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn shipped() -> Self {
        Self::parse(DEFAULT_MATRIX).expect("shipped compatibility matrix is valid")
    }

    /// May code under `origin` be included in a work declared `declared`?
    pub fn is_compatible(&self, origin: LicenseId, declared: LicenseId) -> bool {
        self.allowed.get(&origin).is_some_and(|set| set.contains(&declared))
    }

    /// Every license a derivative of `origin` may declare; always contains `origin`.
    pub fn compatible_with(&self, origin: LicenseId) -> BTreeSet<LicenseId> {
        self.allowed.get(&origin).cloned().unwrap_or_default()
    }
}

/// Convenience wrapper over [`CompatibilityMatrix::load`].
pub fn load_matrix(path: &Path) -> Result<CompatibilityMatrix, LicenseError> {
    CompatibilityMatrix::load(path)
}
