//! Append-only, hash-linked block store.
//!
//! Every block carries one contract transaction and commits to its
//! predecessor through `prev_hash`. Blocks are persisted one per line in
//! their canonical form, which is also the exact byte sequence that gets
//! hashed (minus the trailing `block_hash` field). Commits go through a
//! simulated validator pool.

mod block;
mod chain;
mod consensus;
mod store;

pub use block::{compute_block_hash, header_json, Block};
pub use chain::{append_block, verify_chain, verify_serialized, BlockCheck, Chain, VerificationReport};
pub use consensus::{ValidatorBehavior, ValidatorPool};
pub use store::{Clock, Ledger, ManualClock, SystemClock};

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("invalid block input: {0}")]
    Validation(String),
    #[error("consensus rejected block: {approvals} of {node_count} validators approved, {threshold} required")]
    ConsensusRejected { approvals: usize, threshold: usize, node_count: usize },
    #[error("invalid validator pool: threshold {threshold} with {node_count} nodes")]
    InvalidPool { node_count: usize, threshold: usize },
    #[error("chain corrupt at block {index}: {reason}")]
    Corrupt { index: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
