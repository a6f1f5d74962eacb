//! Transaction payloads carried by ledger blocks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codescan::FunctionHash;
use crate::licensing::LicenseId;

/// `0x` followed by 40 hex digits; the hex body is stored lowercase.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WalletAddress(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed wallet address {0:?}: expected 0x followed by 40 hex digits")]
pub struct MalformedWallet(pub String);

impl WalletAddress {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for WalletAddress {
    type Err = MalformedWallet;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.strip_prefix("0x").ok_or_else(|| MalformedWallet(s.to_owned()))?;
        if body.len() != 40 || !body.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(MalformedWallet(s.to_owned()));
        }
        Ok(WalletAddress(format!("0x{}", body.to_ascii_lowercase())))
    }
}

impl fmt::Display for WalletAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for WalletAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WalletAddress({})", self.0)
    }
}

impl Serialize for WalletAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for WalletAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Platform-unique project identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProjectId(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed project id {0:?}")]
pub struct MalformedProjectId(pub String);

impl ProjectId {
    /// The registry's numbering scheme: `proj-<n>`.
    pub fn numbered(n: u64) -> Self {
        ProjectId(format!("proj-{n}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for ProjectId {
    type Err = MalformedProjectId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ok = !s.is_empty()
            && s.len() <= 64
            && s.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'));
        if ok {
            Ok(ProjectId(s.to_owned()))
        } else {
            Err(MalformedProjectId(s.to_owned()))
        }
    }
}

impl fmt::Display for ProjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ProjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProjectId({})", self.0)
    }
}

impl Serialize for ProjectId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ProjectId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A downloader's acceptance of a project's license.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DownloadAgreementTx {
    pub downloader: WalletAddress,
    pub project_id: ProjectId,
    pub license: LicenseId,
    pub timestamp: u64,
}

/// An uploaded project's metadata and function fingerprints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectRegistrationTx {
    pub uploader: WalletAddress,
    pub project_id: ProjectId,
    pub parents: Vec<ProjectId>,
    pub license: LicenseId,
    pub function_hashes: Vec<FunctionHash>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContractTx {
    Genesis,
    DownloadAgreement(DownloadAgreementTx),
    ProjectRegistration(ProjectRegistrationTx),
}

impl ContractTx {
    /// Structural checks that don't depend on chain state.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ContractTx::Genesis | ContractTx::DownloadAgreement(_) => Ok(()),
            ContractTx::ProjectRegistration(reg) => {
                if !reg.function_hashes.windows(2).all(|w| w[0] < w[1]) {
                    return Err(format!("registration {}: function hashes must be sorted and unique", reg.project_id));
                }
                let mut parents = reg.parents.clone();
                parents.sort();
                parents.dedup();
                if parents.len() != reg.parents.len() {
                    return Err(format!("registration {}: duplicate parent", reg.project_id));
                }
                if reg.parents.contains(&reg.project_id) {
                    return Err(format!("registration {}: project lists itself as parent", reg.project_id));
                }
                Ok(())
            }
        }
    }
}
