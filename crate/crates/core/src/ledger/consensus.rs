//! In-process validator simulation.
//!
//! Each validator re-derives the candidate's linkage and hash on its own and
//! votes. A candidate commits when approvals reach the pool threshold.

use super::{Block, LedgerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidatorBehavior {
    #[default]
    Honest,
    /// Test hook: flips a bit of the candidate's `prev_hash` before checking.
    CorruptPrevHash,
    /// Test hook: votes no unconditionally.
    RejectAll,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatorPool {
    validators: Vec<ValidatorBehavior>,
    threshold: usize,
}

impl Default for ValidatorPool {
    fn default() -> Self {
        ValidatorPool::new(3, 2).expect("3/2 is a valid pool")
    }
}

impl ValidatorPool {
    pub fn new(node_count: usize, threshold: usize) -> Result<Self, LedgerError> {
        if node_count == 0 || threshold == 0 || threshold > node_count {
            return Err(LedgerError::InvalidPool { node_count, threshold });
        }
        Ok(ValidatorPool { validators: vec![ValidatorBehavior::Honest; node_count], threshold })
    }

    pub fn with_behavior(mut self, validator: usize, behavior: ValidatorBehavior) -> Self {
        self.validators[validator] = behavior;
        self
    }

    pub fn node_count(&self) -> usize {
        self.validators.len()
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    /// One vote per validator, in pool order.
    pub fn votes(&self, tip: &Block, candidate: &Block) -> Vec<bool> {
        self.validators.iter().map(|b| validate(*b, tip, candidate)).collect()
    }

    /// Ok when enough validators approve `candidate` as the successor of `tip`.
    pub fn reach_consensus(&self, tip: &Block, candidate: &Block) -> Result<(), LedgerError> {
        let approvals = self.votes(tip, candidate).into_iter().filter(|v| *v).count();
        if approvals >= self.threshold {
            Ok(())
        } else {
            Err(LedgerError::ConsensusRejected { approvals, threshold: self.threshold, node_count: self.node_count() })
        }
    }
}

fn validate(behavior: ValidatorBehavior, tip: &Block, candidate: &Block) -> bool {
    let mut view = candidate.clone();
    match behavior {
        ValidatorBehavior::Honest => {}
        ValidatorBehavior::RejectAll => return false,
        ValidatorBehavior::CorruptPrevHash => {
            let mut bytes = *view.prev_hash.as_bytes();
            bytes[0] ^= 0x01;
            view.prev_hash = crate::digest::Hash256::from_bytes(bytes);
        }
    }
    view.index == tip.index + 1
        && view.prev_hash == tip.block_hash
        && view.tx.validate().is_ok()
        && view.recompute_hash() == view.block_hash
}
