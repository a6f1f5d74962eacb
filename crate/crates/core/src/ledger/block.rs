use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::LedgerError;
use crate::contracts::ContractTx;
use crate::digest::{is_lower_hex64, Hash256};

/// A committed ledger entry carrying exactly one transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub index: u64,
    pub timestamp: u64,
    pub prev_hash: Hash256,
    pub tx: ContractTx,
    pub block_hash: Hash256,
}

impl Block {
    pub fn genesis() -> Block {
        let tx = ContractTx::Genesis;
        let block_hash = hash_fields(0, 0, &Hash256::ZERO, &tx);
        Block { index: 0, timestamp: 0, prev_hash: Hash256::ZERO, tx, block_hash }
    }

    /// Hash recomputed from the block's own fields.
    pub fn recompute_hash(&self) -> Hash256 {
        hash_fields(self.index, self.timestamp, &self.prev_hash, &self.tx)
    }

    /// The persisted line, without the trailing newline.
    pub fn to_line(&self) -> String {
        let mut out = header_json(self.index, self.timestamp, &self.prev_hash, &self.tx);
        out.pop();
        out.push_str(",\"block_hash\":\"");
        out.push_str(&self.block_hash.to_hex());
        out.push_str("\"}");
        out
    }

    /// Strict inverse of [`Block::to_line`]: the line must be byte-identical
    /// to the canonical form of what it parses to.
    pub fn from_line(line: &[u8]) -> Result<Block, String> {
        let text = std::str::from_utf8(line).map_err(|e| format!("not UTF-8: {e}"))?;
        let block: Block = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if block.to_line() != text {
            return Err("line is not in canonical form".into());
        }
        Ok(block)
    }
}

/// Canonical serialization of the hashed fields:
/// `{"index":..,"timestamp":..,"prev_hash":"..","tx":{..}}` with the
/// transaction's keys sorted and no whitespace.
pub fn header_json(index: u64, timestamp: u64, prev_hash: &Hash256, tx: &ContractTx) -> String {
    let tx_value = serde_json::to_value(tx).expect("transactions serialize");
    let mut out = format!("{{\"index\":{index},\"timestamp\":{timestamp},\"prev_hash\":\"{prev_hash}\",\"tx\":");
    write_canonical(&tx_value, &mut out);
    out.push('}');
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("string"));
                out.push(':');
                write_canonical(&map[key], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&serde_json::to_string(scalar).expect("scalar")),
    }
}

fn hash_fields(index: u64, timestamp: u64, prev_hash: &Hash256, tx: &ContractTx) -> Hash256 {
    Hash256::of(header_json(index, timestamp, prev_hash, tx).as_bytes())
}

/// SHA-256 over the canonical serialization of a block's hashed fields.
pub fn compute_block_hash(
    index: u64,
    timestamp: u64,
    prev_hash: &str,
    tx: &ContractTx,
) -> Result<Hash256, LedgerError> {
    if !is_lower_hex64(prev_hash) {
        return Err(LedgerError::Validation(format!(
            "prev_hash must be 64 lowercase hex characters, got {prev_hash:?}"
        )));
    }
    let prev: Hash256 = prev_hash.parse().map_err(|e| LedgerError::Validation(format!("{e}")))?;
    tx.validate().map_err(LedgerError::Validation)?;
    Ok(hash_fields(index, timestamp, &prev, tx))
}
