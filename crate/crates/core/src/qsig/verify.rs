use rand::Rng;
use serde::{Deserialize, Serialize};

use super::keys::{CopyWallet, KeySlot, Signature};
use super::{qowf, QowfParams, QsigError};
use crate::qsim::{self, StateVector};

const EXACT_TOLERANCE: f64 = 1e-9;

/// How a recomputed `|f_k⟩` is compared with a held copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VerifyMode {
    /// Compare amplitudes directly.
    Exact,
    /// `reps` swap tests; any `1` outcome fails the comparison.
    SwapTest { reps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub c1: f64,
    pub c2: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { c1: 0.0, c2: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    AcceptTransferable,
    Accept,
    Reject,
}

impl Verdict {
    /// `s ≤ c1·M` accepts as transferable, `s ≥ c2·M` rejects, anything
    /// between accepts without transferability.
    pub fn classify(failures: usize, keys_per_bit: usize, thresholds: &Thresholds) -> Verdict {
        let s = failures as f64;
        let m = keys_per_bit as f64;
        if s <= thresholds.c1 * m {
            Verdict::AcceptTransferable
        } else if s >= thresholds.c2 * m {
            Verdict::Reject
        } else {
            Verdict::Accept
        }
    }
}

/// Outcome of checking the `M` revealed strings for one message bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub checked: usize,
    pub failures: usize,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureVerdict {
    pub per_bit: Vec<VerdictCounts>,
}

impl SignatureVerdict {
    /// The weakest per-bit verdict.
    pub fn verdict(&self) -> Verdict {
        self.per_bit
            .iter()
            .map(|c| c.verdict)
            .max()
            .unwrap_or(Verdict::Reject)
    }

    pub fn failures(&self) -> usize {
        self.per_bit.iter().map(|c| c.failures).sum()
    }
}

fn matches<R: Rng + ?Sized>(
    recomputed: &StateVector,
    held: &StateVector,
    mode: VerifyMode,
    rng: &mut R,
) -> Result<bool, QsigError> {
    if recomputed.num_qubits() != held.num_qubits() {
        return Ok(false);
    }
    match mode {
        VerifyMode::Exact => Ok(qsim::fidelity(recomputed, held)? >= 1.0 - EXACT_TOLERANCE),
        VerifyMode::SwapTest { reps } => {
            for _ in 0..reps {
                if qsim::swap_test_sampled(recomputed, held, rng)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Checks every revealed string against the holder's copies, consuming one
/// copy per string.
///
/// All needed copies are located before any is consumed, so a missing or
/// spent copy leaves the wallet untouched.
pub fn verify<R: Rng + ?Sized>(
    sig: &Signature,
    wallet: &mut CopyWallet,
    params: &QowfParams,
    mode: VerifyMode,
    thresholds: &Thresholds,
    rng: &mut R,
) -> Result<SignatureVerdict, QsigError> {
    if sig.revealed.len() != sig.message.len() || sig.revealed.is_empty() {
        return Err(QsigError::MalformedSignature);
    }
    let keys_per_bit = sig.revealed[0].len();
    if keys_per_bit == 0 || sig.revealed.iter().any(|row| row.len() != keys_per_bit) {
        return Err(QsigError::MalformedSignature);
    }
    if let VerifyMode::SwapTest { reps: 0 } = mode {
        return Err(QsigError::MalformedSignature);
    }

    let slot = |position: usize, index: usize| KeySlot {
        key_id: sig.key_id,
        position,
        bit: sig.message.get(position).expect("length checked"),
        index,
    };
    for position in 0..sig.message.len() {
        for index in 0..keys_per_bit {
            wallet.check_available(&slot(position, index))?;
        }
    }

    let mut per_bit = Vec::with_capacity(sig.message.len());
    for (position, row) in sig.revealed.iter().enumerate() {
        let mut failures = 0;
        for (index, k) in row.iter().enumerate() {
            let held = wallet.take(&slot(position, index))?;
            let ok = match qowf(k, params) {
                Ok(recomputed) => matches(&recomputed, &held.state, mode, rng)?,
                // A string of the wrong length cannot map to the held state.
                Err(QsigError::KeyLength { .. }) => false,
                Err(e) => return Err(e),
            };
            if !ok {
                failures += 1;
            }
        }
        per_bit.push(VerdictCounts {
            checked: row.len(),
            failures,
            verdict: Verdict::classify(failures, keys_per_bit, thresholds),
        });
    }
    Ok(SignatureVerdict { per_bit })
}
