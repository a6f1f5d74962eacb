use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use super::{Block, Chain, LedgerError, ValidatorPool};
use crate::contracts::ContractTx;

/// Source of block timestamps (UTC seconds).
pub trait Clock: Send + Sync {
    fn now(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    }
}

/// Clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: u64) -> Self {
        ManualClock(AtomicU64::new(start))
    }

    pub fn set(&self, t: u64) {
        self.0.store(t, Ordering::SeqCst);
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// A chain plus its validator pool, clock and (optionally) its
/// line-delimited backing file. Appends are all-or-nothing: the block is
/// written to disk before it becomes visible in memory.
pub struct Ledger {
    chain: Chain,
    pool: ValidatorPool,
    clock: Arc<dyn Clock>,
    file: Option<PathBuf>,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("blocks", &self.chain.len())
            .field("pool", &self.pool)
            .field("file", &self.file)
            .finish()
    }
}

impl Ledger {
    pub fn in_memory(pool: ValidatorPool, clock: Arc<dyn Clock>) -> Self {
        Ledger { chain: Chain::new(), pool, clock, file: None }
    }

    /// Opens (or creates with a genesis block) the chain file at `path`.
    /// A file that fails verification is refused.
    pub fn open(path: &Path, pool: ValidatorPool, clock: Arc<dyn Clock>) -> Result<Self, LedgerError> {
        let chain = if path.exists() {
            let bytes = std::fs::read(path)?;
            Chain::from_bytes(&bytes)?
        } else {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            let chain = Chain::new();
            let mut f = File::create(path)?;
            f.write_all(&chain.to_bytes())?;
            f.sync_all()?;
            chain
        };
        Ok(Ledger { chain, pool, clock, file: Some(path.to_path_buf()) })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn pool(&self) -> &ValidatorPool {
        &self.pool
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_deref()
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    /// Validates `tx` through consensus, persists it, then commits it.
    pub fn append(&mut self, tx: ContractTx) -> Result<Block, LedgerError> {
        let block = self.chain.propose(tx, self.clock.now(), &self.pool)?;
        if let Some(path) = &self.file {
            persist_line(path, &block)?;
        }
        self.chain.push(block.clone());
        Ok(block)
    }
}

fn persist_line(path: &Path, block: &Block) -> Result<(), LedgerError> {
    let mut line = block.to_line().into_bytes();
    line.push(b'\n');
    let mut f = OpenOptions::new().append(true).open(path)?;
    let before = f.metadata()?.len();
    let written = f.write_all(&line).and_then(|_| f.sync_data());
    if let Err(e) = written {
        // roll a torn write back so the file stays a valid chain
        let _ = f.set_len(before);
        return Err(e.into());
    }
    Ok(())
}
