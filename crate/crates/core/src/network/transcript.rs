use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::qsig::Verdict;
use crate::NodeId;

/// What happened at one step of a transaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    KeyShared {
        key_bits: usize,
        check_bits: usize,
        qber: f64,
    },
    QkdAborted {
        check_bits: usize,
        qber: f64,
    },
    QkdFailed {
        reason: String,
    },
    SerialConsistent {
        serial: u64,
    },
    SerialMismatch {
        serial: u64,
    },
    PayloadReserved {
        offset: usize,
        bits: usize,
    },
    PadTooShort {
        needed: usize,
        available: usize,
    },
    RequestDispatched {
        serial: u64,
        sequence: u64,
        key_id: u64,
        invoice: BitString,
        verifiers: Vec<NodeId>,
    },
    SignatureChecked {
        verdict: Verdict,
        checked: usize,
        failures: usize,
    },
    VerificationFailed {
        reason: String,
    },
    QuorumRejected {
        verdicts: Vec<Verdict>,
    },
    RecordRenewed {
        sequence: u64,
        reward: u64,
        digest: String,
    },
    BellMeasured {
        qubits: usize,
        ciphertext: String,
    },
    CoinReceived {
        digest_matches: bool,
    },
    CoinRejected {
        mismatches: usize,
    },
}

impl Outcome {
    /// Outcomes that end a transaction unsuccessfully.
    pub fn is_failure(&self) -> bool {
        matches!(
            self,
            Outcome::QkdAborted { .. }
                | Outcome::QkdFailed { .. }
                | Outcome::SerialMismatch { .. }
                | Outcome::PadTooShort { .. }
                | Outcome::QuorumRejected { .. }
                | Outcome::CoinRejected { .. }
        )
    }
}

/// One transcript line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransactionEvent {
    pub tick: u64,
    pub step: u8,
    pub actors: Vec<NodeId>,
    /// Set on the Bell measurement, which runs after approval but keeps
    /// its step number.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub deferred: bool,
    pub outcome: Outcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransactionResult {
    Completed,
    QkdAborted,
    SerialMismatch,
    PadTooShort,
    SignatureRejected,
    /// Approved and delivered, but the mint refused the received state.
    CoinRejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub serial: u64,
    pub remitter: NodeId,
    pub receiver: NodeId,
    pub events: Vec<TransactionEvent>,
    pub result: TransactionResult,
}

impl Transcript {
    pub fn to_json_lines(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("events serialize") + "\n")
            .collect()
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json_lines().as_bytes()))
    }

    pub fn steps(&self) -> Vec<u8> {
        self.events.iter().map(|e| e.step).collect()
    }

    /// Non-deferred steps never go backwards, and step 7 appears only
    /// after a step 6 approval.
    pub fn is_well_ordered(&self) -> bool {
        let mut last = 0;
        for e in self.events.iter().filter(|e| !e.deferred) {
            if e.step < last || !(1..=7).contains(&e.step) {
                return false;
            }
            last = e.step;
        }
        let approved = self
            .events
            .iter()
            .any(|e| matches!(e.outcome, Outcome::RecordRenewed { .. }));
        approved || self.events.iter().all(|e| e.step != 7)
    }

    pub fn completed(&self) -> bool {
        self.result == TransactionResult::Completed
    }
}
