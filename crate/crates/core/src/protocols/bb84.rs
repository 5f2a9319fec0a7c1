use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::bits::BitString;
use crate::qsim::{Gate, StateVector};

/// Sessions with a check-subset error rate above this abort.
pub const ABORT_THRESHOLD: f64 = 0.11;
pub const MIN_RAW_LENGTH: usize = 64;
pub const MIN_KEY_LENGTH: usize = 16;
pub const DEFAULT_CHECK_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EavesdropMode {
    #[default]
    None,
    InterceptResend,
}

/// Eavesdropper on the quantum channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EavesdropPolicy {
    pub mode: EavesdropMode,
    /// Fraction of transmitted qubits attacked.
    #[serde(default)]
    pub fraction: f64,
}

impl EavesdropPolicy {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn intercept_resend(fraction: f64) -> Result<Self, ProtocolError> {
        let policy = Self {
            mode: EavesdropMode::InterceptResend,
            fraction,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let ok = match self.mode {
            EavesdropMode::None => self.fraction == 0.0,
            EavesdropMode::InterceptResend => (0.0..=1.0).contains(&self.fraction),
        };
        if ok {
            Ok(())
        } else {
            Err(ProtocolError::BadEavesdropPolicy(self.fraction))
        }
    }
}

/// Full record of one BB84 run. Bases are `0` for computational, `1` for
/// Hadamard.
#[derive(Clone, Debug)]
pub struct Bb84Session {
    pub raw_length: usize,
    pub sender_bits: BitString,
    pub sender_bases: BitString,
    pub receiver_bases: BitString,
    pub receiver_bits: BitString,
    /// Raw positions where the bases agreed.
    pub sifted_indices: Vec<usize>,
    /// Raw positions disclosed for error estimation; excluded from the keys.
    pub check_indices: Vec<usize>,
    pub check_fraction: f64,
    pub qber: f64,
    pub aborted: bool,
    pub sender_key: BitString,
    pub receiver_key: BitString,
    pub intercepted: usize,
}

/// Public part of a session: nothing here is secret or quantum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bb84Transcript {
    pub raw_length: usize,
    pub sender_bases: BitString,
    pub receiver_bases: BitString,
    pub sifted_indices: Vec<usize>,
    pub check_indices: Vec<usize>,
    pub qber: f64,
    pub aborted: bool,
}

impl Bb84Session {
    pub fn transcript(&self) -> Bb84Transcript {
        Bb84Transcript {
            raw_length: self.raw_length,
            sender_bases: self.sender_bases.clone(),
            receiver_bases: self.receiver_bases.clone(),
            sifted_indices: self.sifted_indices.clone(),
            check_indices: self.check_indices.clone(),
            qber: self.qber,
            aborted: self.aborted,
        }
    }

    pub fn check_bits(&self) -> usize {
        self.check_indices.len()
    }
}

fn prepare(bit: bool, hadamard: bool) -> StateVector {
    let mut q = StateVector::basis_state(1, usize::from(bit)).expect("one qubit");
    if hadamard {
        q.apply(&Gate::H(0)).expect("qubit 0");
    }
    q
}

fn measure_in<R: Rng + ?Sized>(mut q: StateVector, hadamard: bool, rng: &mut R) -> bool {
    if hadamard {
        q.apply(&Gate::H(0)).expect("qubit 0");
    }
    q.measure_in_place(&[0], rng)
        .expect("qubit 0")
        .get(0)
        .expect("one bit")
}

/// Runs prepare-and-measure BB84 over a noiseless channel, optionally
/// tapped by an intercept-resend attacker.
pub fn run_bb84<R: Rng + ?Sized>(
    raw_length: usize,
    eve: &EavesdropPolicy,
    check_fraction: f64,
    rng: &mut R,
) -> Result<Bb84Session, ProtocolError> {
    if raw_length < MIN_RAW_LENGTH {
        return Err(ProtocolError::RawLengthTooShort(raw_length));
    }
    if !(check_fraction > 0.0 && check_fraction < 1.0) {
        return Err(ProtocolError::BadCheckFraction(check_fraction));
    }
    eve.validate()?;

    let mut sender_bits = BitString::new();
    let mut sender_bases = BitString::new();
    let mut receiver_bases = BitString::new();
    let mut receiver_bits = BitString::new();
    let mut intercepted = 0;

    for _ in 0..raw_length {
        let bit: bool = rng.gen();
        let basis: bool = rng.gen();
        let mut qubit = prepare(bit, basis);

        if eve.mode == EavesdropMode::InterceptResend && rng.gen_bool(eve.fraction) {
            intercepted += 1;
            let eve_basis: bool = rng.gen();
            let seen = measure_in(qubit, eve_basis, rng);
            qubit = prepare(seen, eve_basis);
        }

        let bob_basis: bool = rng.gen();
        let bob_bit = measure_in(qubit, bob_basis, rng);

        sender_bits.push(bit);
        sender_bases.push(basis);
        receiver_bases.push(bob_basis);
        receiver_bits.push(bob_bit);
    }

    let sifted_indices: Vec<usize> = (0..raw_length)
        .filter(|&i| sender_bases.get(i) == receiver_bases.get(i))
        .collect();

    let check_count = ((sifted_indices.len() as f64 * check_fraction).round() as usize).max(1);
    if sifted_indices.len() < check_count + MIN_KEY_LENGTH {
        return Err(ProtocolError::KeyTooShort(
            sifted_indices.len().saturating_sub(check_count),
        ));
    }
    let mut chosen = index::sample(rng, sifted_indices.len(), check_count).into_vec();
    chosen.sort_unstable();
    let check_indices: Vec<usize> = chosen.iter().map(|&k| sifted_indices[k]).collect();

    let errors = check_indices
        .iter()
        .filter(|&&i| sender_bits.get(i) != receiver_bits.get(i))
        .count();
    let qber = errors as f64 / check_count as f64;

    let mut sender_key = BitString::new();
    let mut receiver_key = BitString::new();
    let mut checks = check_indices.iter().peekable();
    for &i in &sifted_indices {
        if checks.peek() == Some(&&i) {
            checks.next();
            continue;
        }
        sender_key.push(sender_bits.get(i).expect("in range"));
        receiver_key.push(receiver_bits.get(i).expect("in range"));
    }

    Ok(Bb84Session {
        raw_length,
        sender_bits,
        sender_bases,
        receiver_bases,
        receiver_bits,
        sifted_indices,
        check_indices,
        check_fraction,
        qber,
        aborted: qber > ABORT_THRESHOLD,
        sender_key,
        receiver_key,
        intercepted,
    })
}
