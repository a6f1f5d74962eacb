//! Download and upload workflows.
//!
//! A download commits a license agreement to the chain before the archive
//! bytes are handed out. An upload is scanned, every resulting fingerprint
//! is matched against registered projects, and each matched origin's license
//! must admit the declared license. Only then is the project registered;
//! a rejected upload leaves the chain, the registry and the archive store
//! untouched.

mod demo;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard};

use serde::Serialize;

pub use demo::{demo_derivative_files, demo_original_files, demo_wallets, seed_demo, DemoOutcome, DEMO_WALLETS};

use crate::codescan::{scan_zip, FunctionHash, ProjectScan, ScanError, ScanLimits};
use crate::contracts::{ContractError, ContractState, ProjectId, WalletAddress};
use crate::ledger::{Clock, Ledger, LedgerError, ValidatorPool, VerificationReport};
use crate::licensing::{CompatibilityMatrix, LicenseId};
use crate::registry::{AuditIssue, ProjectRecord, Reconciliation, Registry, RegistryError, WalletBook};

/// Which registered projects an upload is matched against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchScope {
    /// Every registered project.
    #[default]
    AllProjects,
    /// Only projects the uploader has a download agreement for.
    DownloadedByUser,
}

#[derive(Debug, Clone, Default)]
pub struct PlatformConfig {
    pub match_scope: MatchScope,
    pub scan_limits: ScanLimits,
    pub pool: ValidatorPool,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown user {0:?}")]
    Auth(String),
    #[error("project {0} not found")]
    NotFound(ProjectId),
    #[error("archive for project {0} is missing from storage")]
    ArchiveMissing(ProjectId),
    #[error("invalid request: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Debug, Clone)]
pub struct UploadRequest {
    pub username: String,
    pub archive: Vec<u8>,
    pub name: String,
    pub description: String,
    pub license: LicenseId,
    pub parents: Vec<ProjectId>,
}

/// One shared fingerprint and the uploaded file it came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MatchEvidence {
    pub hash: FunctionHash,
    pub file_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LicenseConflict {
    pub matched_project_id: ProjectId,
    pub origin_license: LicenseId,
    pub matched_hash_count: usize,
    pub evidence: Vec<MatchEvidence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum UploadVerdict {
    Accepted {
        project_id: ProjectId,
        chain_ref: u64,
    },
    Conflict {
        conflicts: Vec<LicenseConflict>,
        /// Licenses every matched origin admits.
        suggestions: BTreeSet<LicenseId>,
    },
}

impl UploadVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, UploadVerdict::Accepted { .. })
    }
}

#[derive(Debug, Clone)]
pub struct Download {
    pub project_id: ProjectId,
    pub license: LicenseId,
    pub archive: Vec<u8>,
    pub agreement_block: u64,
}

/// A matched origin project and how many of the upload's fingerprints it holds.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Origin {
    project_id: ProjectId,
    license: LicenseId,
    block_index: u64,
    matched: usize,
}

pub struct Platform {
    contracts: RwLock<ContractState>,
    commit: Mutex<()>,
    registry: Registry,
    matrix: Arc<CompatibilityMatrix>,
    wallets: WalletBook,
    config: PlatformConfig,
}

impl Platform {
    /// Opens or creates a platform under `data_dir`: `chain.jsonl`,
    /// `registry/` and `archives/`. Runs reconciliation and syncs user
    /// accounts with the wallet config.
    pub fn open(
        data_dir: &Path,
        wallets: WalletBook,
        matrix: Arc<CompatibilityMatrix>,
        config: PlatformConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, ServiceError> {
        let ledger = Ledger::open(&data_dir.join("chain.jsonl"), config.pool.clone(), clock.clone())?;
        let registry = Registry::open_dir(data_dir)?;
        Self::assemble(ledger, registry, wallets, matrix, config, clock)
    }

    pub fn in_memory(
        wallets: WalletBook,
        matrix: Arc<CompatibilityMatrix>,
        config: PlatformConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, ServiceError> {
        let ledger = Ledger::in_memory(config.pool.clone(), clock.clone());
        Self::assemble(ledger, Registry::in_memory(), wallets, matrix, config, clock)
    }

    fn assemble(
        ledger: Ledger,
        registry: Registry,
        wallets: WalletBook,
        matrix: Arc<CompatibilityMatrix>,
        config: PlatformConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, ServiceError> {
        let contracts = ContractState::new(ledger);
        let Reconciliation { completed, discarded } = registry.reconcile(contracts.views())?;
        if !completed.is_empty() || !discarded.is_empty() {
            tracing::warn!(?completed, ?discarded, "reconciled interrupted registrations");
        }
        registry.sync_users(&wallets, clock.now())?;
        Ok(Platform { contracts: RwLock::new(contracts), commit: Mutex::new(()), registry, matrix, wallets, config })
    }

    pub fn matrix(&self) -> &CompatibilityMatrix {
        &self.matrix
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn wallets(&self) -> &WalletBook {
        &self.wallets
    }

    /// Read access to the committed chain and contract views.
    pub fn contracts(&self) -> RwLockReadGuard<'_, ContractState> {
        self.contracts.read().unwrap()
    }

    fn wallet_of(&self, username: &str) -> Result<WalletAddress, ServiceError> {
        self.wallets.wallet(username).cloned().ok_or_else(|| ServiceError::Auth(username.to_owned()))
    }

    /// Records the caller's license agreement, then returns the archive.
    pub fn download_workflow(&self, username: &str, project_id: &ProjectId) -> Result<Download, ServiceError> {
        let wallet = self.wallet_of(username)?;
        let record = match self.registry.get_project(project_id) {
            Ok(r) => r,
            Err(RegistryError::NotFound(id)) => return Err(ServiceError::NotFound(id)),
            Err(e) => return Err(e.into()),
        };
        let archive = self
            .registry
            .get_archive(&record.archive_ref)?
            .ok_or_else(|| ServiceError::ArchiveMissing(project_id.clone()))?;

        let _commit = self.commit.lock().unwrap();
        let mut contracts = self.contracts.write().unwrap();
        let license = contracts
            .views()
            .project(project_id)
            .map(|p| p.tx.license)
            .ok_or_else(|| ServiceError::NotFound(project_id.clone()))?;
        let now = contracts.ledger().now();
        let agreement_block = contracts.record_download_agreement(wallet, project_id.clone(), license, now)?;
        Ok(Download { project_id: project_id.clone(), license, archive, agreement_block })
    }

    /// Scans, checks and (when every matched origin admits the declared
    /// license) registers an upload.
    pub fn upload_workflow(&self, request: UploadRequest) -> Result<UploadVerdict, ServiceError> {
        let wallet = self.wallet_of(&request.username)?;
        if request.name.trim().is_empty() {
            return Err(ServiceError::InvalidInput("project name is empty".into()));
        }
        let scan = scan_zip(&request.archive, &self.config.scan_limits)?;

        let _commit = self.commit.lock().unwrap();
        let project_id = {
            let contracts = self.contracts.read().unwrap();
            if let Some(p) = request.parents.iter().find(|p| contracts.views().project(p).is_none()) {
                return Err(ServiceError::NotFound(p.clone()));
            }
            let origins = self.matched_origins(&contracts, &wallet, &scan);
            if let Some(verdict) = self.check_origins(&contracts, &scan, request.license, &origins) {
                return Ok(verdict);
            }
            let views = contracts.views();
            let mut n = views.project_count() as u64 + 1;
            while views.project(&ProjectId::numbered(n)).is_some() {
                n += 1;
            }
            ProjectId::numbered(n)
        };

        let archive_ref = self.registry.put_archive(&request.archive)?;
        let mut record = ProjectRecord {
            project_id: project_id.clone(),
            name: request.name,
            description: request.description,
            uploader: request.username,
            license: request.license,
            parents: request.parents.clone(),
            language_mix: scan.languages.clone(),
            chain_ref: 0,
            archive_ref,
        };
        self.registry.begin_registration(&record)?;
        let committed = self.contracts.write().unwrap().register_project(
            wallet,
            project_id.clone(),
            request.parents,
            request.license,
            scan.hashes,
        );
        let chain_ref = match committed {
            Ok(index) => index,
            Err(e) => {
                self.registry.abandon_registration(&project_id)?;
                return Err(e.into());
            }
        };
        record.chain_ref = chain_ref;
        self.registry.finish_registration(&record)?;
        tracing::info!(%project_id, chain_ref, license = %record.license, "project registered");
        Ok(UploadVerdict::Accepted { project_id, chain_ref })
    }

    fn matched_origins(&self, contracts: &ContractState, wallet: &WalletAddress, scan: &ProjectScan) -> Vec<Origin> {
        let in_scope: Option<HashSet<ProjectId>> = match self.config.match_scope {
            MatchScope::AllProjects => None,
            MatchScope::DownloadedByUser => {
                Some(contracts.agreements_for(wallet).into_iter().map(|a| a.project_id).collect())
            }
        };
        let mut counts: BTreeMap<ProjectId, usize> = BTreeMap::new();
        for hash in &scan.hashes {
            for m in contracts.query_function_hash(hash) {
                if in_scope.as_ref().is_none_or(|s| s.contains(&m.project_id)) {
                    *counts.entry(m.project_id).or_default() += 1;
                }
            }
        }
        let views = contracts.views();
        let mut origins: Vec<Origin> = counts
            .into_iter()
            .map(|(project_id, matched)| {
                let p = views.project(&project_id).expect("matched project is registered");
                Origin { license: p.tx.license, block_index: p.block_index, project_id, matched }
            })
            .collect();
        origins.sort_by_key(|o| o.block_index);
        origins
    }

    /// `None` when every origin admits `declared`.
    fn check_origins(
        &self,
        contracts: &ContractState,
        scan: &ProjectScan,
        declared: LicenseId,
        origins: &[Origin],
    ) -> Option<UploadVerdict> {
        let admits = |o: &Origin| declared == o.license || self.matrix.is_compatible(o.license, declared);
        let conflicts: Vec<LicenseConflict> = origins
            .iter()
            .filter(|o| !admits(o))
            .map(|o| {
                let hashes = &contracts.views().project(&o.project_id).expect("registered").tx.function_hashes;
                LicenseConflict {
                    matched_project_id: o.project_id.clone(),
                    origin_license: o.license,
                    matched_hash_count: o.matched,
                    evidence: explain_match(scan, hashes),
                }
            })
            .collect();
        if conflicts.is_empty() {
            return None;
        }
        Some(UploadVerdict::Conflict { conflicts, suggestions: suggest(&self.matrix, origins) })
    }

    pub fn search_projects(&self, query: &str) -> Result<Vec<ProjectRecord>, ServiceError> {
        Ok(self.registry.search_projects(query)?)
    }

    pub fn get_project(&self, id: &ProjectId) -> Result<ProjectRecord, ServiceError> {
        self.registry.get_project(id).map_err(|e| match e {
            RegistryError::NotFound(id) => ServiceError::NotFound(id),
            e => e.into(),
        })
    }

    /// Verifies the persisted chain file when there is one, else the
    /// in-memory chain.
    pub fn verify_chain(&self) -> Result<VerificationReport, ServiceError> {
        let contracts = self.contracts.read().unwrap();
        match contracts.ledger().path() {
            Some(path) => Ok(crate::ledger::verify_serialized(&std::fs::read(path).map_err(LedgerError::from)?)),
            None => Ok(crate::ledger::verify_chain(contracts.chain())),
        }
    }

    pub fn audit(&self) -> Result<Vec<AuditIssue>, ServiceError> {
        let contracts = self.contracts.read().unwrap();
        Ok(self.registry.audit(contracts.chain())?)
    }
}

/// Licenses admitted by every origin: the intersection of their compatible sets.
fn suggest(matrix: &CompatibilityMatrix, origins: &[Origin]) -> BTreeSet<LicenseId> {
    let mut sets = origins.iter().map(|o| matrix.compatible_with(o.license));
    let first = sets.next().unwrap_or_default();
    sets.fold(first, |acc, s| acc.intersection(&s).copied().collect())
}

/// Every fingerprint the upload shares with `matched_hashes`, paired with
/// the uploaded file that produced it.
pub fn explain_match(upload: &ProjectScan, matched_hashes: &[FunctionHash]) -> Vec<MatchEvidence> {
    let wanted: HashSet<&FunctionHash> = matched_hashes.iter().collect();
    let found: BTreeSet<MatchEvidence> = upload
        .hashed_spans()
        .filter(|(_, h)| wanted.contains(h))
        .map(|(span, hash)| MatchEvidence { hash, file_path: span.file_path.clone() })
        .collect();
    found.into_iter().collect()
}
