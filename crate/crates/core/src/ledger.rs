//! Append-only, digest-chained blocks of contract transactions, one chain per
//! id, replayable into [`GenesisState`].

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical::{self, CanonicalError, Digest};
use crate::genesis::{ChainId, ContractCall, GenesisState, Receipt};

pub const SUBMITTER_MAX_CHARS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TxKind {
    UploadCharacter,
    RecordDarkLordDefeat,
    AccumulateAdamGrowth,
    BloodMoonResult,
}

/// A recorded contract call. The payload is kept as raw JSON so that a
/// malformed call can still be recorded and audited; the contract decides
/// whether it has any effect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub kind: TxKind,
    pub payload: Value,
    pub submitter: String,
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub height: u64,
    pub prev_digest: Digest,
    pub timestamp: u64,
    pub txs: Vec<Transaction>,
    pub digest: Digest,
}

/// The fields a block digest commits to.
#[derive(Serialize)]
struct BlockBody<'a> {
    height: u64,
    prev_digest: &'a Digest,
    timestamp: u64,
    txs: &'a [Transaction],
}

impl Block {
    fn seal(height: u64, prev_digest: Digest, timestamp: u64, txs: Vec<Transaction>) -> Block {
        let digest = body_digest(height, &prev_digest, timestamp, &txs);
        Block { height, prev_digest, timestamp, txs, digest }
    }

    pub fn compute_digest(&self) -> Digest {
        body_digest(self.height, &self.prev_digest, self.timestamp, &self.txs)
    }

    pub fn to_canonical_line(&self) -> String {
        canonical::to_string(self).expect("blocks carry no floats")
    }
}

fn body_digest(height: u64, prev_digest: &Digest, timestamp: u64, txs: &[Transaction]) -> Digest {
    // A payload smuggling a float still gets a digest; verification is
    // about integrity, the contract rejects such payloads separately.
    let body = BlockBody { height, prev_digest, timestamp, txs };
    match canonical::digest(&body) {
        Ok(d) => d,
        Err(_) => Digest::of(&serde_json::to_vec(&body).unwrap_or_default()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("nonce {nonce} from {submitter:?} does not exceed {last}")]
    NonceReplay { submitter: String, nonce: u64, last: u64 },
    #[error("timestamp {timestamp} is before tip timestamp {tip}")]
    ClockSkew { timestamp: u64, tip: u64 },
    #[error("submitter id must be 1..=64 characters")]
    BadSubmitter,
    #[error("chain failed verification: {0}")]
    InvalidChain(VerifyError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("block {0}: height out of sequence")]
    Height(u64),
    #[error("block {0}: previous digest does not link")]
    Link(u64),
    #[error("block {0}: digest mismatch")]
    Digest(u64),
    #[error("block {0}: timestamp decreases")]
    Timestamp(u64),
    #[error("block {0}: nonce replay by {1:?}")]
    Nonce(u64, String),
    #[error("line {line}: {detail}")]
    Encoding { line: usize, detail: String },
}

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("file name must look like chain_<id>.ndjson: {0}")]
    FileName(PathBuf),
}

#[derive(Debug, Clone, Default)]
pub struct Chain {
    pub chain_id: ChainId,
    blocks: Vec<Block>,
    /// Highest nonce seen per submitter; derived from `blocks`.
    nonces: HashMap<String, u64>,
}

impl PartialEq for Chain {
    fn eq(&self, other: &Self) -> bool {
        self.chain_id == other.chain_id && self.blocks == other.blocks
    }
}

impl Eq for Chain {}

impl Chain {
    pub fn new(chain_id: ChainId) -> Self {
        Chain { chain_id, ..Chain::default() }
    }

    /// Builds a chain from blocks without checking them; see
    /// [`verify`](Self::verify).
    pub fn from_blocks(chain_id: ChainId, blocks: Vec<Block>) -> Self {
        let mut nonces = HashMap::new();
        for tx in blocks.iter().flat_map(|b| &b.txs) {
            let last = nonces.entry(tx.submitter.clone()).or_insert(tx.nonce);
            *last = (*last).max(tx.nonce);
        }
        Chain { chain_id, blocks, nonces }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn tip(&self) -> Option<&Block> {
        self.blocks.last()
    }

    pub fn tx_count(&self) -> usize {
        self.blocks.iter().map(|b| b.txs.len()).sum()
    }

    /// Next nonce `submitter` may use on this chain.
    pub fn next_nonce(&self, submitter: &str) -> u64 {
        self.nonces.get(submitter).map_or(0, |n| n + 1)
    }

    /// Returns a new chain with one more block; `self` is untouched.
    pub fn append_block(&self, txs: Vec<Transaction>, timestamp: u64) -> Result<Chain, LedgerError> {
        let mut next = self.clone();
        next.push_block(txs, timestamp)?;
        Ok(next)
    }

    /// In-place append for the chain's single writer.
    pub fn push_block(&mut self, txs: Vec<Transaction>, timestamp: u64) -> Result<&Block, LedgerError> {
        if let Some(tip) = self.tip() {
            if timestamp < tip.timestamp {
                return Err(LedgerError::ClockSkew { timestamp, tip: tip.timestamp });
            }
        }
        let mut seen: HashMap<&str, u64> = HashMap::new();
        for tx in &txs {
            let chars = tx.submitter.chars().count();
            if chars == 0 || chars > SUBMITTER_MAX_CHARS {
                return Err(LedgerError::BadSubmitter);
            }
            let last = seen.get(tx.submitter.as_str()).or_else(|| self.nonces.get(&tx.submitter)).copied();
            if let Some(last) = last {
                if tx.nonce <= last {
                    return Err(LedgerError::NonceReplay {
                        submitter: tx.submitter.clone(),
                        nonce: tx.nonce,
                        last,
                    });
                }
            }
            seen.insert(&tx.submitter, tx.nonce);
        }
        let updates: Vec<(String, u64)> = seen.into_iter().map(|(s, n)| (s.to_owned(), n)).collect();
        self.nonces.extend(updates);

        let height = self.blocks.len() as u64;
        let prev = self.tip().map_or(Digest::ZERO, |b| b.digest);
        self.blocks.push(Block::seal(height, prev, timestamp, txs));
        Ok(self.blocks.last().expect("just pushed"))
    }

    pub fn verify_chain(&self) -> bool {
        self.verify().is_ok()
    }

    /// Checks heights, links, digests, timestamp order and nonce order.
    pub fn verify(&self) -> Result<(), VerifyError> {
        let mut nonces: HashMap<&str, u64> = HashMap::new();
        let mut prev: Option<&Block> = None;
        for (i, block) in self.blocks.iter().enumerate() {
            let h = i as u64;
            if block.height != h {
                return Err(VerifyError::Height(h));
            }
            let expected_prev = prev.map_or(Digest::ZERO, |p| p.digest);
            if block.prev_digest != expected_prev {
                return Err(VerifyError::Link(h));
            }
            if block.compute_digest() != block.digest {
                return Err(VerifyError::Digest(h));
            }
            if prev.is_some_and(|p| block.timestamp < p.timestamp) {
                return Err(VerifyError::Timestamp(h));
            }
            for tx in &block.txs {
                if let Some(&last) = nonces.get(tx.submitter.as_str()) {
                    if tx.nonce <= last {
                        return Err(VerifyError::Nonce(h, tx.submitter.clone()));
                    }
                }
                nonces.insert(&tx.submitter, tx.nonce);
            }
            prev = Some(block);
        }
        Ok(())
    }

    /// Folds every transaction into a fresh state for this chain.
    pub fn replay(&self) -> Result<GenesisState, LedgerError> {
        self.replay_with_receipts().map(|(state, _)| state)
    }

    pub fn replay_with_receipts(&self) -> Result<(GenesisState, Vec<Receipt>), LedgerError> {
        self.verify().map_err(LedgerError::InvalidChain)?;
        let mut state = GenesisState::new([self.chain_id]);
        let mut receipts = Vec::with_capacity(self.tx_count());
        for block in &self.blocks {
            for (i, tx) in block.txs.iter().enumerate() {
                receipts.push(state.apply_transaction(tx, block.height, i as u64));
            }
        }
        Ok((state, receipts))
    }

    /// Replays only the first `blocks` blocks.
    pub fn replay_prefix(&self, blocks: usize) -> Result<GenesisState, LedgerError> {
        Chain::from_blocks(self.chain_id, self.blocks[..blocks.min(self.len())].to_vec()).replay()
    }

    pub fn file_name(chain_id: ChainId) -> String {
        format!("chain_{chain_id}.ndjson")
    }

    /// One canonical JSON block per line, newline terminated.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for block in &self.blocks {
            out.push_str(&block.to_canonical_line());
            out.push('\n');
        }
        out
    }

    /// Parses and verifies a chain file body. Every line must already be in
    /// canonical form.
    pub fn from_ndjson(chain_id: ChainId, text: &[u8]) -> Result<Chain, VerifyError> {
        let mut blocks = Vec::new();
        if !text.is_empty() {
            let body = text.strip_suffix(b"\n").ok_or(VerifyError::Encoding {
                line: 0,
                detail: "missing trailing newline".into(),
            })?;
            for (i, line) in body.split(|&b| b == b'\n').enumerate() {
                let block: Block = canonical::from_slice_strict(line).map_err(|e: CanonicalError| {
                    VerifyError::Encoding { line: i + 1, detail: e.to_string() }
                })?;
                blocks.push(block);
            }
        }
        let chain = Chain::from_blocks(chain_id, blocks);
        chain.verify()?;
        Ok(chain)
    }

    pub fn save_to_dir(&self, dir: impl AsRef<Path>) -> Result<PathBuf, PersistError> {
        let path = dir.as_ref().join(Chain::file_name(self.chain_id));
        std::fs::write(&path, self.to_ndjson())?;
        Ok(path)
    }

    /// Loads `chain_<id>.ndjson`, taking the id from the file name.
    pub fn load(path: impl AsRef<Path>) -> Result<Chain, PersistError> {
        let path = path.as_ref();
        let chain_id = chain_id_from_path(path).ok_or_else(|| PersistError::FileName(path.to_owned()))?;
        let bytes = std::fs::read(path)?;
        Ok(Chain::from_ndjson(chain_id, &bytes)?)
    }
}

pub fn chain_id_from_path(path: &Path) -> Option<ChainId> {
    path.file_name()?
        .to_str()?
        .strip_prefix("chain_")?
        .strip_suffix(".ndjson")?
        .parse()
        .ok()
}

/// Single writer for one chain: applies calls to a live state as they are
/// submitted and seals them into blocks on [`commit`](Self::commit).
/// Replaying the committed chain always reproduces [`state`](Self::state).
#[derive(Debug, Clone)]
pub struct ChainWriter {
    chain: Chain,
    state: GenesisState,
    pending: Vec<Transaction>,
    pending_nonces: HashMap<String, u64>,
}

impl ChainWriter {
    pub fn new(chain_id: ChainId) -> Self {
        ChainWriter {
            chain: Chain::new(chain_id),
            state: GenesisState::new([chain_id]),
            pending: Vec::new(),
            pending_nonces: HashMap::new(),
        }
    }

    pub fn from_chain(chain: Chain) -> Result<Self, LedgerError> {
        let state = chain.replay()?;
        Ok(ChainWriter { chain, state, pending: Vec::new(), pending_nonces: HashMap::new() })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn state(&self) -> &GenesisState {
        &self.state
    }

    pub fn chain_id(&self) -> ChainId {
        self.chain.chain_id
    }

    pub fn pending(&self) -> &[Transaction] {
        &self.pending
    }

    pub fn into_chain(self) -> Chain {
        self.chain
    }

    /// Queues `call` under the submitter's next nonce and applies it.
    pub fn submit(&mut self, submitter: &str, call: ContractCall) -> Result<Receipt, LedgerError> {
        let chars = submitter.chars().count();
        if chars == 0 || chars > SUBMITTER_MAX_CHARS {
            return Err(LedgerError::BadSubmitter);
        }
        let nonce = self
            .pending_nonces
            .get(submitter)
            .map_or_else(|| self.chain.next_nonce(submitter), |n| n + 1);
        let tx = call.into_transaction(submitter, nonce);
        let height = self.chain.len() as u64;
        let receipt = self.state.apply_transaction(&tx, height, self.pending.len() as u64);
        self.pending_nonces.insert(submitter.to_owned(), nonce);
        self.pending.push(tx);
        Ok(receipt)
    }

    /// Seals pending transactions into a block. Returns `None` when nothing
    /// is pending. A timestamp behind the tip is clamped up to it.
    pub fn commit(&mut self, timestamp: u64) -> Result<Option<&Block>, LedgerError> {
        if self.pending.is_empty() {
            return Ok(None);
        }
        let timestamp = timestamp.max(self.chain.tip().map_or(0, |b| b.timestamp));
        let txs = std::mem::take(&mut self.pending);
        self.pending_nonces.clear();
        self.chain.push_block(txs, timestamp).map(Some)
    }
}
