use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CoinError;
use crate::NodeId;

/// What a chain entry records about one transfer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferPayload {
    pub from: NodeId,
    pub to: NodeId,
    /// Verifier that renewed the record and collected the reward.
    pub verifier: NodeId,
    pub reward: u64,
    pub tick: u64,
}

/// One link of a coin's chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub serial: u64,
    pub sequence: u64,
    /// Digest of the preceding entry; `None` for the first.
    pub previous: Option<String>,
    pub payload: TransferPayload,
    /// Identifies the signature that authorized the transfer.
    pub signature_ref: String,
    pub broadcast: bool,
}

impl ChainRecord {
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("chain records serialize");
        hex::encode(Sha256::digest(bytes))
    }
}

/// An entry proposed for appending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PendingEntry {
    pub sequence: u64,
    pub payload: TransferPayload,
    pub signature_ref: String,
}

/// The classical record `r_i` of a coin: an append-only list of transfers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinRecord {
    serial: u64,
    entries: Vec<ChainRecord>,
}

impl CoinRecord {
    pub fn new(serial: u64) -> Self {
        Self {
            serial,
            entries: Vec::new(),
        }
    }

    pub fn serial(&self) -> u64 {
        self.serial
    }

    pub fn entries(&self) -> &[ChainRecord] {
        &self.entries
    }

    /// 0 for a fresh record.
    pub fn last_sequence(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.sequence)
    }

    pub fn head_digest(&self) -> Option<String> {
        self.entries.last().map(ChainRecord::digest)
    }

    /// Builds the entry that would come next.
    pub fn next_entry(&self, payload: TransferPayload, signature_ref: String) -> PendingEntry {
        PendingEntry {
            sequence: self.last_sequence() + 1,
            payload,
            signature_ref,
        }
    }

    /// Appends `entry`, which must carry the next sequence number, and
    /// marks it broadcast.
    pub fn append(&mut self, entry: PendingEntry) -> Result<&ChainRecord, CoinError> {
        let last = self.last_sequence();
        if entry.sequence <= last {
            return Err(CoinError::RewriteAttempt {
                sequence: entry.sequence,
            });
        }
        if entry.sequence != last + 1 {
            return Err(CoinError::SequenceGap {
                expected: last + 1,
                got: entry.sequence,
            });
        }
        let record = ChainRecord {
            serial: self.serial,
            sequence: entry.sequence,
            previous: self.head_digest(),
            payload: entry.payload,
            signature_ref: entry.signature_ref,
            broadcast: true,
        };
        self.entries.push(record);
        Ok(self.entries.last().expect("just pushed"))
    }

    /// Entries are never modified once written.
    pub fn amend(&mut self, sequence: u64, _payload: TransferPayload) -> Result<(), CoinError> {
        if sequence == 0 || sequence > self.last_sequence() {
            return Err(CoinError::SequenceGap {
                expected: self.last_sequence() + 1,
                got: sequence,
            });
        }
        Err(CoinError::RewriteAttempt { sequence })
    }

    /// Sequence numbers run 1, 2, … and each entry links its predecessor.
    pub fn is_well_formed(&self) -> bool {
        let mut previous: Option<String> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if e.sequence != i as u64 + 1 || e.serial != self.serial || e.previous != previous {
                return false;
            }
            previous = Some(e.digest());
        }
        true
    }

    /// One JSON object per entry, newline terminated.
    pub fn to_json_lines(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("chain records serialize") + "\n")
            .collect()
    }
}
