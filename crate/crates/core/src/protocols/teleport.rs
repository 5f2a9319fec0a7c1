use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::bits::BitString;
use crate::qsim::{self, Gate, StateVector};

/// Entanglement fidelity to Φ+ below which a shared pair is refused.
const PAIR_TOLERANCE: f64 = 1e-9;

/// Two-qubit register holding `(|00⟩ + |11⟩)/√2`. Qubit 0 is the sender's
/// half, qubit 1 the receiver's.
#[derive(Debug)]
pub struct EprPair(StateVector);

impl EprPair {
    pub fn new() -> Self {
        let fresh = qsim::new_register(2).expect("2 qubits in range");
        Self(qsim::make_epr_pair(fresh, 0, 1).expect("fresh register is |00⟩"))
    }

    /// Accepts an externally prepared pair if it is Φ+.
    pub fn from_state(state: StateVector) -> Result<Self, ProtocolError> {
        if state.num_qubits() != 2 {
            return Err(ProtocolError::NotEntangled);
        }
        let reference = Self::new();
        if qsim::fidelity(&state, &reference.0)? < 1.0 - PAIR_TOLERANCE {
            return Err(ProtocolError::NotEntangled);
        }
        Ok(Self(state))
    }

    pub fn state(&self) -> &StateVector {
        &self.0
    }
}

impl Default for EprPair {
    fn default() -> Self {
        Self::new()
    }
}

/// Bell-measurement outcome: `phase` selects Z, `parity` selects X.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorrectionBits {
    pub phase: bool,
    pub parity: bool,
}

impl CorrectionBits {
    /// Index 0..4 reading the bits as `phase parity`.
    pub fn index(self) -> usize {
        (usize::from(self.phase) << 1) | usize::from(self.parity)
    }

    pub fn to_bits(self) -> BitString {
        BitString::from_bits(vec![self.phase, self.parity])
    }

    pub fn from_bits(bits: &BitString) -> Option<Self> {
        match bits.bits() {
            [phase, parity] => Some(Self {
                phase: *phase,
                parity: *parity,
            }),
            _ => None,
        }
    }
}

/// Sender-side half of a teleportation, before any correction is sent.
#[derive(Debug)]
pub struct BellOutcome {
    pub correction: CorrectionBits,
    /// The sender's two measured qubits, collapsed to `|phase parity⟩`.
    pub sender_residue: StateVector,
    /// The receiver's qubit, not yet corrected.
    pub receiver_half: StateVector,
}

#[derive(Debug)]
pub struct TeleportResult {
    pub correction: CorrectionBits,
    pub sender_residue: StateVector,
    pub receiver_state: StateVector,
}

/// Runs the sender side: Bell measurement of the input qubit with the
/// sender's half of `pair`.
pub fn sender_measure<R: Rng + ?Sized>(
    input: StateVector,
    pair: EprPair,
    rng: &mut R,
) -> Result<BellOutcome, ProtocolError> {
    if input.num_qubits() != 1 {
        return Err(ProtocolError::NotSingleQubit(input.num_qubits()));
    }
    // Register order: input, sender half, receiver half.
    let register = input.tensor(&pair.0)?;
    let outcome = qsim::bell_measure(register, 0, 1, rng)?;
    let correction = CorrectionBits::from_bits(&outcome.bits).expect("two bits");
    let receiver_half = outcome.post_state.project_out(&[0, 1], &outcome.bits)?;
    let sender_residue = StateVector::basis_state(2, correction.index())?;
    Ok(BellOutcome {
        correction,
        sender_residue,
        receiver_half,
    })
}

/// Receiver side: `X^parity` then `Z^phase`.
pub fn apply_correction(
    mut receiver_half: StateVector,
    correction: CorrectionBits,
) -> Result<StateVector, ProtocolError> {
    if correction.parity {
        receiver_half.apply(&Gate::X(0))?;
    }
    if correction.phase {
        receiver_half.apply(&Gate::Z(0))?;
    }
    Ok(receiver_half)
}

/// Teleports a single-qubit state through `pair`.
pub fn teleport<R: Rng + ?Sized>(
    input: StateVector,
    pair: EprPair,
    rng: &mut R,
) -> Result<TeleportResult, ProtocolError> {
    let BellOutcome {
        correction,
        sender_residue,
        receiver_half,
    } = sender_measure(input, pair, rng)?;
    Ok(TeleportResult {
        correction,
        sender_residue,
        receiver_state: apply_correction(receiver_half, correction)?,
    })
}
