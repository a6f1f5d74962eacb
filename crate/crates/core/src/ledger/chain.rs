use serde::Serialize;

use super::{Block, LedgerError, ValidatorPool};
use crate::contracts::ContractTx;
use crate::digest::Hash256;

/// Ordered blocks starting at genesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Default for Chain {
    fn default() -> Self {
        Chain::new()
    }
}

impl Chain {
    pub fn new() -> Self {
        Chain { blocks: vec![Block::genesis()] }
    }

    /// Wraps blocks without checking them; [`verify_chain`] reports on the
    /// result. Use [`Chain::from_bytes`] for anything read from outside.
    pub fn from_blocks_unchecked(blocks: Vec<Block>) -> Self {
        debug_assert!(!blocks.is_empty());
        Chain { blocks }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, index: u64) -> Option<&Block> {
        self.blocks.get(usize::try_from(index).ok()?)
    }

    /// Builds the successor block for `tx` and puts it to the validators.
    /// Does not modify the chain.
    pub fn propose(&self, tx: ContractTx, timestamp: u64, pool: &ValidatorPool) -> Result<Block, LedgerError> {
        if matches!(tx, ContractTx::Genesis) {
            return Err(LedgerError::Validation("genesis transaction after genesis".into()));
        }
        tx.validate().map_err(LedgerError::Validation)?;
        let tip = self.tip();
        let index = tip.index + 1;
        let prev_hash = tip.block_hash;
        let block_hash = Hash256::of(super::block::header_json(index, timestamp, &prev_hash, &tx).as_bytes());
        let candidate = Block { index, timestamp, prev_hash, tx, block_hash };
        pool.reach_consensus(tip, &candidate)?;
        Ok(candidate)
    }

    pub(crate) fn push(&mut self, block: Block) {
        debug_assert_eq!(block.index, self.tip().index + 1);
        self.blocks.push(block);
    }

    /// Canonical file form: one line per block, LF-terminated.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.extend_from_slice(b.to_line().as_bytes());
            out.push(b'\n');
        }
        out
    }

    /// Parses and fully verifies a persisted chain.
    pub fn from_bytes(bytes: &[u8]) -> Result<Chain, LedgerError> {
        let (report, blocks) = verify_lines(bytes);
        if let Some(failure) = report.first_failure() {
            return Err(LedgerError::Corrupt {
                index: failure.index,
                reason: failure.reason.clone().unwrap_or_default(),
            });
        }
        Ok(Chain { blocks })
    }
}

/// Builds, validates and commits the block for `tx`. On error the chain is
/// left untouched.
pub fn append_block(
    chain: &mut Chain,
    tx: ContractTx,
    timestamp: u64,
    pool: &ValidatorPool,
) -> Result<Block, LedgerError> {
    let block = chain.propose(tx, timestamp, pool)?;
    chain.push(block.clone());
    Ok(block)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockCheck {
    /// Position in the chain (line number for persisted chains).
    pub index: u64,
    pub linkage_ok: bool,
    pub hash_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl BlockCheck {
    pub fn ok(&self) -> bool {
        self.linkage_ok && self.hash_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub blocks: Vec<BlockCheck>,
    pub valid: bool,
}

impl VerificationReport {
    fn from_checks(blocks: Vec<BlockCheck>) -> Self {
        let valid = !blocks.is_empty() && blocks.iter().all(BlockCheck::ok);
        VerificationReport { blocks, valid }
    }

    pub fn first_failure(&self) -> Option<&BlockCheck> {
        self.blocks.iter().find(|c| !c.ok())
    }
}

fn check_block(position: u64, block: &Block, prev: Option<&Block>) -> BlockCheck {
    let hash_ok = block.recompute_hash() == block.block_hash && block.tx.validate().is_ok();
    let linkage_ok = match prev {
        None if position == 0 => {
            block.index == 0
                && block.timestamp == 0
                && block.prev_hash == Hash256::ZERO
                && block.tx == ContractTx::Genesis
        }
        None => false,
        Some(prev) => {
            block.index == prev.index + 1
                && block.index == position
                && block.prev_hash == prev.block_hash
                && block.tx != ContractTx::Genesis
        }
    };
    let reason = match (linkage_ok, hash_ok) {
        (true, true) => None,
        (false, true) => Some("broken linkage".to_owned()),
        (true, false) => Some("block hash mismatch".to_owned()),
        (false, false) => Some("broken linkage and block hash mismatch".to_owned()),
    };
    BlockCheck { index: position, linkage_ok, hash_ok, reason }
}

/// Checks every block's hash and its link to the predecessor.
pub fn verify_chain(chain: &Chain) -> VerificationReport {
    let checks = chain
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| check_block(i as u64, b, i.checked_sub(1).map(|p| &chain.blocks[p])))
        .collect();
    VerificationReport::from_checks(checks)
}

/// Verifies a persisted chain byte-for-byte. A line that does not parse, or
/// is not in canonical form, fails both checks at its position.
pub fn verify_serialized(bytes: &[u8]) -> VerificationReport {
    verify_lines(bytes).0
}

fn verify_lines(bytes: &[u8]) -> (VerificationReport, Vec<Block>) {
    let mut lines: Vec<&[u8]> = bytes.split(|b| *b == b'\n').collect();
    let terminated = bytes.last() == Some(&b'\n');
    if terminated || bytes.is_empty() {
        lines.pop();
    }
    let last = lines.len().saturating_sub(1);
    let mut checks = Vec::with_capacity(lines.len());
    let mut blocks = Vec::with_capacity(lines.len());
    let mut prev_ok: Option<Block> = None;
    let mut prev_parsed = true;
    for (i, line) in lines.into_iter().enumerate() {
        let position = i as u64;
        let parsed = Block::from_line(line).and_then(|b| {
            if i == last && !terminated {
                Err("missing line terminator".to_owned())
            } else {
                Ok(b)
            }
        });
        match parsed {
            Ok(block) => {
                let prev = if prev_parsed { prev_ok.as_ref() } else { None };
                let mut check = check_block(position, &block, prev);
                if i > 0 && !prev_parsed {
                    check.linkage_ok = false;
                    check.reason = Some("predecessor unreadable".to_owned());
                }
                checks.push(check);
                prev_parsed = true;
                blocks.push(block.clone());
                prev_ok = Some(block);
            }
            Err(reason) => {
                checks.push(BlockCheck { index: position, linkage_ok: false, hash_ok: false, reason: Some(reason) });
                prev_parsed = false;
                prev_ok = None;
            }
        }
    }
    (VerificationReport::from_checks(checks), blocks)
}
