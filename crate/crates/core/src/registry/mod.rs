//! Off-chain records: user accounts, project metadata and uploaded archives.
//!
//! The chain stays authoritative for licenses and fingerprints. A
//! [`ProjectRecord`] points back at its registration block through
//! `chain_ref`, and [`Registry::audit`] checks that the two agree.

mod store;
mod wallets;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use store::{ArchiveStore, FsArchives, FsStore, MemoryArchives, MemoryStore, ProjectStore};
pub use wallets::{load_wallet_config, parse_wallet_config, ConfigError, ConfigErrorKind, WalletBook};

use crate::codescan::Language;
use crate::contracts::{ContractTx, ContractViews, ProjectId, WalletAddress};
use crate::digest::Hash256;
use crate::ledger::Chain;
use crate::licensing::LicenseId;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("project {0} not found")]
    NotFound(ProjectId),
    #[error("corrupt registry entry {}: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub username: String,
    pub wallet: WalletAddress,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub project_id: ProjectId,
    pub name: String,
    pub description: String,
    pub uploader: String,
    pub license: LicenseId,
    pub parents: Vec<ProjectId>,
    pub language_mix: BTreeMap<Language, usize>,
    pub chain_ref: u64,
    pub archive_ref: Hash256,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum AuditIssue {
    /// `chain_ref` points past the end of the chain.
    MissingBlock {
        project_id: ProjectId,
        chain_ref: u64,
    },
    /// The block at `chain_ref` is not this project's registration.
    NotARegistration {
        project_id: ProjectId,
        chain_ref: u64,
    },
    LicenseDiffers {
        project_id: ProjectId,
        record: LicenseId,
        chain: LicenseId,
    },
    ArchiveMissing {
        project_id: ProjectId,
        archive_ref: Hash256,
    },
    /// A registration on the chain with no registry record.
    UnrecordedRegistration {
        project_id: ProjectId,
        block_index: u64,
    },
}

/// Outcome of a startup reconciliation pass.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Reconciliation {
    pub completed: Vec<ProjectId>,
    pub discarded: Vec<ProjectId>,
}

pub struct Registry {
    store: Box<dyn ProjectStore>,
    archives: Box<dyn ArchiveStore>,
}

impl Registry {
    pub fn new(store: Box<dyn ProjectStore>, archives: Box<dyn ArchiveStore>) -> Self {
        Registry { store, archives }
    }

    pub fn in_memory() -> Self {
        Registry::new(Box::new(MemoryStore::default()), Box::new(MemoryArchives::default()))
    }

    /// `<root>/registry` for records and `<root>/archives` for archives.
    pub fn open_dir(root: &Path) -> Result<Self, RegistryError> {
        Ok(Registry::new(
            Box::new(FsStore::open(&root.join("registry"))?),
            Box::new(FsArchives::open(&root.join("archives"))?),
        ))
    }

    pub fn put_project(&self, record: &ProjectRecord) -> Result<(), RegistryError> {
        self.store.put_project(record)
    }

    pub fn get_project(&self, id: &ProjectId) -> Result<ProjectRecord, RegistryError> {
        self.store.get_project(id)?.ok_or_else(|| RegistryError::NotFound(id.clone()))
    }

    /// Case-insensitive substring match over name and description, ordered
    /// by name. An empty query returns everything.
    pub fn search_projects(&self, query: &str) -> Result<Vec<ProjectRecord>, RegistryError> {
        let needle = query.trim().to_lowercase();
        let mut hits: Vec<ProjectRecord> = self
            .store
            .list_projects()?
            .into_iter()
            .filter(|r| {
                needle.is_empty()
                    || r.name.to_lowercase().contains(&needle)
                    || r.description.to_lowercase().contains(&needle)
            })
            .collect();
        hits.sort_by(|a, b| {
            a.name.to_lowercase().cmp(&b.name.to_lowercase()).then_with(|| a.project_id.cmp(&b.project_id))
        });
        Ok(hits)
    }

    pub fn put_archive(&self, bytes: &[u8]) -> Result<Hash256, RegistryError> {
        self.archives.put(bytes)
    }

    pub fn get_archive(&self, key: &Hash256) -> Result<Option<Vec<u8>>, RegistryError> {
        self.archives.get(key)
    }

    pub fn users(&self) -> Result<Vec<UserAccount>, RegistryError> {
        self.store.list_users()
    }

    /// Creates an account for every configured user that lacks one and
    /// updates wallets that changed in the config. Returns the accounts.
    pub fn sync_users(&self, wallets: &WalletBook, now: u64) -> Result<Vec<UserAccount>, RegistryError> {
        let existing: BTreeMap<String, UserAccount> =
            self.store.list_users()?.into_iter().map(|u| (u.username.clone(), u)).collect();
        let mut out = Vec::new();
        for (username, wallet) in wallets.iter() {
            let account = match existing.get(username) {
                Some(u) if &u.wallet == wallet => u.clone(),
                Some(u) => UserAccount { wallet: wallet.clone(), ..u.clone() },
                None => UserAccount { username: username.to_owned(), wallet: wallet.clone(), created_at: now },
            };
            if existing.get(username) != Some(&account) {
                self.store.put_user(&account)?;
            }
            out.push(account);
        }
        Ok(out)
    }

    pub fn begin_registration(&self, pending: &ProjectRecord) -> Result<(), RegistryError> {
        self.store.put_intent(pending)
    }

    /// Drops an intent whose chain commit failed.
    pub fn abandon_registration(&self, id: &ProjectId) -> Result<(), RegistryError> {
        self.store.remove_intent(id)
    }

    pub fn finish_registration(&self, record: &ProjectRecord) -> Result<(), RegistryError> {
        self.store.put_project(record)?;
        self.store.remove_intent(&record.project_id)
    }

    /// Resolves registrations interrupted between the chain commit and the
    /// registry write: intents whose project reached the chain are completed,
    /// the rest are dropped.
    pub fn reconcile(&self, views: &ContractViews) -> Result<Reconciliation, RegistryError> {
        let mut result = Reconciliation::default();
        for intent in self.store.list_intents()? {
            let id = intent.project_id.clone();
            match views.project(&id) {
                Some(reg) if self.store.get_project(&id)?.is_none() && reg.tx.license == intent.license => {
                    let record = ProjectRecord { chain_ref: reg.block_index, ..intent };
                    self.store.put_project(&record)?;
                    result.completed.push(id.clone());
                }
                Some(_) => {}
                None => result.discarded.push(id.clone()),
            }
            self.store.remove_intent(&id)?;
        }
        Ok(result)
    }

    /// Cross-checks every record against the chain, and every registration
    /// on the chain against the records.
    pub fn audit(&self, chain: &Chain) -> Result<Vec<AuditIssue>, RegistryError> {
        let records = self.store.list_projects()?;
        let mut issues = Vec::new();
        for r in &records {
            let id = r.project_id.clone();
            match chain.get(r.chain_ref).map(|b| &b.tx) {
                None => issues.push(AuditIssue::MissingBlock { project_id: id.clone(), chain_ref: r.chain_ref }),
                Some(ContractTx::ProjectRegistration(reg)) if reg.project_id == r.project_id => {
                    if reg.license != r.license {
                        issues.push(AuditIssue::LicenseDiffers {
                            project_id: id.clone(),
                            record: r.license,
                            chain: reg.license,
                        });
                    }
                }
                Some(_) => issues.push(AuditIssue::NotARegistration { project_id: id.clone(), chain_ref: r.chain_ref }),
            }
            if self.archives.get(&r.archive_ref)?.is_none() {
                issues.push(AuditIssue::ArchiveMissing { project_id: id, archive_ref: r.archive_ref });
            }
        }
        for b in chain.blocks() {
            if let ContractTx::ProjectRegistration(reg) = &b.tx {
                if !records.iter().any(|r| r.project_id == reg.project_id) {
                    issues.push(AuditIssue::UnrecordedRegistration {
                        project_id: reg.project_id.clone(),
                        block_index: b.index,
                    });
                }
            }
        }
        Ok(issues)
    }
}
