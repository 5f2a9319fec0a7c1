//! Peer-to-peer transaction simulation.
//!
//! A [`Network`] owns every node, the mint and the broadcast ledger, and
//! advances a logical clock one tick per event. Each node draws from its
//! own ChaCha stream derived from the scenario seed, so a configuration
//! fully determines every transcript.

mod node;
mod sim;
mod transcript;

pub use node::{Node, Role};
pub use sim::{Network, PayloadSlot, RemittanceRequest, DIGEST_BITS};
pub use transcript::{Outcome, TransactionEvent, TransactionResult, Transcript};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coin::{CoinError, DEFAULT_COIN_QUBITS};
use crate::protocols::{EavesdropPolicy, ProtocolError};
use crate::qsig::{QowfParams, QsigError, Thresholds, Verdict, VerdictCounts, VerifyMode};
use crate::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("invalid scenario configuration: {0}")]
    BadConfig(String),
    #[error("no participant {0}")]
    UnknownNode(NodeId),
    #[error("remitter and receiver must differ ({0})")]
    SameParty(NodeId),
    #[error("{node} does not hold coin {serial}")]
    CoinNotHeld { node: NodeId, serial: u64 },
    #[error("need {needed} verifiers, only {available} eligible holders")]
    InsufficientHolders { needed: usize, available: usize },
    #[error(transparent)]
    Qsig(#[from] QsigError),
    #[error(transparent)]
    Coin(#[from] CoinError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Scripted misbehaviour of the remitter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryScript {
    #[default]
    None,
    /// Signs invoices with random strings instead of the private key.
    ForgedSignature,
    /// Pays a second receiver with what the first teleport left behind.
    DoubleSpend,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuorumRule {
    #[default]
    Unanimity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Participants, not counting the mint.
    pub participants: usize,
    pub quorum: usize,
    pub quorum_rule: QuorumRule,
    pub eavesdrop: EavesdropPolicy,
    pub adversary: AdversaryScript,
    pub seed: u64,
    pub coin_qubits: usize,
    pub qowf: QowfParams,
    pub keys_per_bit: usize,
    pub invoice_bits: usize,
    pub verify_mode: VerifyMode,
    pub thresholds: Thresholds,
    pub bb84_raw_length: usize,
    pub check_fraction: f64,
    pub reward: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            participants: 6,
            quorum: 3,
            quorum_rule: QuorumRule::Unanimity,
            eavesdrop: EavesdropPolicy::none(),
            adversary: AdversaryScript::None,
            seed: 0,
            coin_qubits: DEFAULT_COIN_QUBITS,
            qowf: QowfParams::new(32, 4, 4).expect("valid"),
            keys_per_bit: 8,
            invoice_bits: 4,
            verify_mode: VerifyMode::Exact,
            thresholds: Thresholds::default(),
            bb84_raw_length: 1024,
            check_fraction: 0.5,
            reward: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |msg: &str| Err(NetworkError::BadConfig(msg.to_string()));
        self.qowf.validate()?;
        self.qowf.check_budget()?;
        self.eavesdrop.validate()?;
        if self.participants < 3 {
            return bad("at least three participants are needed");
        }
        if self.quorum == 0 {
            return bad("quorum must be at least 1");
        }
        // Key copies reach min(T, participants − 1) holders, one of whom may
        // be the receiver.
        let holders = self.qowf.copies.min(self.participants - 1);
        if self.quorum + 1 > holders {
            return bad("quorum exceeds the public-key holders available to every transfer");
        }
        if self.coin_qubits == 0 || self.keys_per_bit == 0 {
            return bad("coin_qubits and keys_per_bit must be positive");
        }
        if self.invoice_bits == 0 || self.invoice_bits > 256 {
            return bad("invoice_bits must be in 1..=256");
        }
        if !(self.check_fraction > 0.0 && self.check_fraction < 1.0) {
            return bad("check_fraction must be in (0, 1)");
        }
        if let VerifyMode::SwapTest { reps: 0 } = self.verify_mode {
            return bad("swap-test mode needs at least one repetition");
        }
        Ok(())
    }
}

/// Uniform sample of `q` distinct ids from `eligible`, in draw order.
pub fn select_verifiers<R: Rng + ?Sized>(
    eligible: &[NodeId],
    q: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>, NetworkError> {
    if q > eligible.len() {
        return Err(NetworkError::InsufficientHolders {
            needed: q,
            available: eligible.len(),
        });
    }
    Ok(rand::seq::index::sample(rng, eligible.len(), q)
        .into_iter()
        .map(|i| eligible[i])
        .collect())
}

/// Whether the verifiers' verdicts approve the transfer. An empty list is
/// never an approval.
pub fn quorum_decision(verdicts: &[VerdictCounts], rule: QuorumRule) -> bool {
    match rule {
        QuorumRule::Unanimity => {
            !verdicts.is_empty() && verdicts.iter().all(|v| v.verdict != Verdict::Reject)
        }
    }
}
