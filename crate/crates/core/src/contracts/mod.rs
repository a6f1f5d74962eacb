//! The download-agreement and license-manager contracts.
//!
//! Both contracts are transaction types committed to the ledger. Their query
//! surfaces are in-memory views that are a pure function of the committed
//! chain; [`ContractViews::from_chain`] rebuilds them from scratch.

mod tx;
mod views;

pub use tx::*;
pub use views::{ContractViews, HashMatch, RegisteredProject};

use crate::codescan::FunctionHash;
use crate::ledger::{Chain, Ledger, LedgerError};
use crate::licensing::LicenseId;

#[derive(Debug, thiserror::Error)]
pub enum ContractError {
    #[error("project {0} is not registered")]
    NotFound(ProjectId),
    #[error("parent project {0} is not registered")]
    UnknownParent(ProjectId),
    #[error("project {project} is licensed {registered}, not {given}")]
    LicenseMismatch { project: ProjectId, registered: LicenseId, given: LicenseId },
    #[error("project {0} is already registered")]
    DuplicateProject(ProjectId),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// Ledger plus the contract views kept in step with it.
#[derive(Debug)]
pub struct ContractState {
    ledger: Ledger,
    views: ContractViews,
}

impl ContractState {
    pub fn new(ledger: Ledger) -> Self {
        let views = ContractViews::from_chain(ledger.chain());
        ContractState { ledger, views }
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn chain(&self) -> &Chain {
        self.ledger.chain()
    }

    pub fn views(&self) -> &ContractViews {
        &self.views
    }

    fn commit(&mut self, tx: ContractTx) -> Result<u64, ContractError> {
        let block = self.ledger.append(tx)?;
        self.views.apply(&block);
        Ok(block.index)
    }

    /// Records that `downloader` accepted `license` for `project_id`.
    pub fn record_download_agreement(
        &mut self,
        downloader: WalletAddress,
        project_id: ProjectId,
        license: LicenseId,
        timestamp: u64,
    ) -> Result<u64, ContractError> {
        let project = self.views.project(&project_id).ok_or_else(|| ContractError::NotFound(project_id.clone()))?;
        if project.tx.license != license {
            return Err(ContractError::LicenseMismatch {
                project: project_id,
                registered: project.tx.license,
                given: license,
            });
        }
        self.commit(ContractTx::DownloadAgreement(DownloadAgreementTx { downloader, project_id, license, timestamp }))
    }

    /// Registers a project and its function fingerprints. Hashes are stored
    /// sorted and deduplicated.
    pub fn register_project(
        &mut self,
        uploader: WalletAddress,
        project_id: ProjectId,
        parents: Vec<ProjectId>,
        license: LicenseId,
        mut function_hashes: Vec<FunctionHash>,
    ) -> Result<u64, ContractError> {
        if self.views.project(&project_id).is_some() {
            return Err(ContractError::DuplicateProject(project_id));
        }
        if let Some(p) = parents.iter().find(|p| self.views.project(p).is_none()) {
            return Err(ContractError::UnknownParent(p.clone()));
        }
        function_hashes.sort();
        function_hashes.dedup();
        self.commit(ContractTx::ProjectRegistration(ProjectRegistrationTx {
            uploader,
            project_id,
            parents,
            license,
            function_hashes,
        }))
    }

    pub fn query_function_hash(&self, hash: &FunctionHash) -> Vec<HashMatch> {
        self.views.query_function_hash(hash)
    }

    pub fn agreements_for(&self, wallet: &WalletAddress) -> Vec<DownloadAgreementTx> {
        self.views.agreements_for(wallet)
    }
}
