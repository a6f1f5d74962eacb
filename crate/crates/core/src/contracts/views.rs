use std::collections::HashMap;

use serde::Serialize;

use super::{ContractTx, DownloadAgreementTx, ProjectId, ProjectRegistrationTx, WalletAddress};
use crate::codescan::FunctionHash;
use crate::ledger::{Block, Chain};
use crate::licensing::LicenseId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HashMatch {
    pub project_id: ProjectId,
    pub license: LicenseId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegisteredProject {
    pub block_index: u64,
    pub tx: ProjectRegistrationTx,
}

/// Indices over committed transactions. Caches only; the chain is the
/// source of truth.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContractViews {
    projects: HashMap<ProjectId, RegisteredProject>,
    registration_order: Vec<ProjectId>,
    by_hash: HashMap<FunctionHash, Vec<ProjectId>>,
    agreements: Vec<(u64, DownloadAgreementTx)>,
    by_wallet: HashMap<WalletAddress, Vec<usize>>,
}

impl ContractViews {
    pub fn from_chain(chain: &Chain) -> Self {
        let mut views = ContractViews::default();
        for block in chain.blocks() {
            views.apply(block);
        }
        views
    }

    pub(crate) fn apply(&mut self, block: &Block) {
        match &block.tx {
            ContractTx::Genesis => {}
            ContractTx::DownloadAgreement(a) => {
                self.by_wallet.entry(a.downloader.clone()).or_default().push(self.agreements.len());
                self.agreements.push((block.index, a.clone()));
            }
            ContractTx::ProjectRegistration(r) => {
                for h in &r.function_hashes {
                    self.by_hash.entry(*h).or_default().push(r.project_id.clone());
                }
                self.registration_order.push(r.project_id.clone());
                self.projects
                    .insert(r.project_id.clone(), RegisteredProject { block_index: block.index, tx: r.clone() });
            }
        }
    }

    pub fn project(&self, id: &ProjectId) -> Option<&RegisteredProject> {
        self.projects.get(id)
    }

    /// Registrations in commit order.
    pub fn projects(&self) -> impl Iterator<Item = &RegisteredProject> {
        self.registration_order.iter().map(|id| &self.projects[id])
    }

    pub fn project_count(&self) -> usize {
        self.registration_order.len()
    }

    /// Registrations containing `hash`, in commit order.
    pub fn query_function_hash(&self, hash: &FunctionHash) -> Vec<HashMatch> {
        self.by_hash
            .get(hash)
            .into_iter()
            .flatten()
            .map(|id| HashMatch { project_id: id.clone(), license: self.projects[id].tx.license })
            .collect()
    }

    /// Agreements signed by `wallet`, in commit order.
    pub fn agreements_for(&self, wallet: &WalletAddress) -> Vec<DownloadAgreementTx> {
        self.by_wallet.get(wallet).into_iter().flatten().map(|i| self.agreements[*i].1.clone()).collect()
    }

    /// Agreements with the block index that recorded each.
    pub fn agreements(&self) -> &[(u64, DownloadAgreementTx)] {
        &self.agreements
    }
}
