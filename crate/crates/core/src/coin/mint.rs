use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::Rng;
use serde::Serialize;

use super::record::CoinRecord;
use super::CoinError;
use crate::qsim::{Gate, StateVector};

/// Conjugate bases a coin qubit can be prepared in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Computational,
    Hadamard,
}

impl Basis {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.gen() {
            Basis::Hadamard
        } else {
            Basis::Computational
        }
    }
}

/// One of `|0⟩, |1⟩, |+⟩, |−⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QubitSpec {
    pub basis: Basis,
    pub bit: bool,
}

impl QubitSpec {
    pub fn prepare(self) -> StateVector {
        let mut q = StateVector::basis_state(1, usize::from(self.bit)).expect("one qubit");
        if self.basis == Basis::Hadamard {
            q.apply(&Gate::H(0)).expect("qubit 0");
        }
        q
    }

    /// Measures `qubit` in this basis and reports whether it read `bit`.
    pub fn check<R: Rng + ?Sized>(self, qubit: StateVector, rng: &mut R) -> bool {
        measure_in_basis(qubit, self.basis, rng) == self.bit
    }
}

pub(crate) fn measure_in_basis<R: Rng + ?Sized>(
    mut qubit: StateVector,
    basis: Basis,
    rng: &mut R,
) -> bool {
    if basis == Basis::Hadamard {
        qubit.apply(&Gate::H(0)).expect("qubit 0");
    }
    qubit
        .measure_in_place(&[0], rng)
        .expect("qubit 0")
        .get(0)
        .expect("one bit")
}

/// The mint's private description of a coin state. Never leaves the mint.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MintSecret {
    serial: u64,
    qubits: Vec<QubitSpec>,
}

impl MintSecret {
    fn random<R: Rng + ?Sized>(serial: u64, num_qubits: usize, rng: &mut R) -> Self {
        Self {
            serial,
            qubits: (0..num_qubits)
                .map(|_| QubitSpec {
                    basis: Basis::random(rng),
                    bit: rng.gen(),
                })
                .collect(),
        }
    }

    pub fn serial(&self) -> u64 {
        self.serial
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[QubitSpec] {
        &self.qubits
    }

    fn prepare(&self, handle: StateHandle) -> CoinState {
        CoinState {
            handle,
            qubits: self.qubits.iter().map(|q| q.prepare()).collect(),
        }
    }
}

/// Identifies one physical coin state across transfers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StateHandle(pub(crate) u64);

impl StateHandle {
    pub fn id(&self) -> u64 {
        self.0
    }
}

/// The quantum half of a coin: `n_c` independently prepared qubits.
///
/// There is no `Clone` and no amplitude accessor; the state can only be
/// moved, teleported, or measured away.
///
/// ```compile_fail
/// fn duplicate(s: &qbitcoin::coin::CoinState) -> qbitcoin::coin::CoinState {
///     s.clone()
/// }
/// ```
#[derive(Debug)]
pub struct CoinState {
    handle: StateHandle,
    qubits: Vec<StateVector>,
}

impl CoinState {
    pub fn handle(&self) -> StateHandle {
        self.handle
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub(crate) fn from_qubits(handle: StateHandle, qubits: Vec<StateVector>) -> Self {
        Self { handle, qubits }
    }

    pub(crate) fn into_qubits(self) -> (StateHandle, Vec<StateVector>) {
        (self.handle, self.qubits)
    }
}

/// A coin `c_i = (r_i, |ψ_i⟩)`.
#[derive(Debug)]
pub struct Coin {
    record: CoinRecord,
    state: CoinState,
}

impl Coin {
    /// Pairs a record with a state. Nothing checks that they belong
    /// together; see [`check_serial_consistency`](super::check_serial_consistency).
    pub fn assemble(record: CoinRecord, state: CoinState) -> Self {
        Self { record, state }
    }

    pub fn into_parts(self) -> (CoinRecord, CoinState) {
        (self.record, self.state)
    }

    pub fn serial(&self) -> u64 {
        self.record.serial()
    }

    pub fn record(&self) -> &CoinRecord {
        &self.record
    }

    pub fn record_mut(&mut self) -> &mut CoinRecord {
        &mut self.record
    }

    pub fn handle(&self) -> StateHandle {
        self.state.handle
    }

    pub fn num_qubits(&self) -> usize {
        self.state.num_qubits()
    }
}

#[derive(Debug)]
pub enum CoinVerification {
    /// All qubits matched; the coin comes back re-prepared.
    Accepted(Coin),
    Rejected {
        serial: u64,
        mismatches: usize,
    },
}

impl CoinVerification {
    pub fn is_accepted(&self) -> bool {
        matches!(self, CoinVerification::Accepted(_))
    }
}

/// Public registry row: no basis or bit information.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegistryEntry {
    pub serial: u64,
    pub handle: StateHandle,
    pub qubits: usize,
}

#[derive(Debug, Default)]
struct Registry {
    secrets: BTreeMap<u64, MintSecret>,
    handles: BTreeMap<StateHandle, u64>,
    next_handle: u64,
}

/// Issues coins and verifies them against its secret descriptions.
#[derive(Debug, Default)]
pub struct Mint {
    registry: Mutex<Registry>,
}

impl Mint {
    pub fn new() -> Self {
        Self::default()
    }

    /// Prepares a fresh coin; each qubit is one of the four BB84 states.
    pub fn mint_coin<R: Rng + ?Sized>(
        &self,
        serial: u64,
        num_qubits: usize,
        rng: &mut R,
    ) -> Result<Coin, CoinError> {
        if num_qubits == 0 {
            return Err(CoinError::EmptyCoin);
        }
        let mut reg = self.registry.lock().expect("mint lock");
        if reg.secrets.contains_key(&serial) {
            return Err(CoinError::DuplicateSerial(serial));
        }
        let same_size = reg
            .secrets
            .values()
            .filter(|s| s.num_qubits() == num_qubits)
            .count();
        if num_qubits < 32 && same_size as u64 >= 1u64 << (2 * num_qubits) {
            return Err(CoinError::DescriptionsExhausted(num_qubits));
        }
        let secret = loop {
            let candidate = MintSecret::random(serial, num_qubits, rng);
            // Keep the serial ↔ state description map injective.
            if !reg.secrets.values().any(|s| s.qubits == candidate.qubits) {
                break candidate;
            }
        };
        let handle = StateHandle(reg.next_handle);
        reg.next_handle += 1;
        let state = secret.prepare(handle);
        reg.handles.insert(handle, serial);
        reg.secrets.insert(serial, secret);
        Ok(Coin {
            record: CoinRecord::new(serial),
            state,
        })
    }

    /// Measures each qubit in its recorded basis; accepts iff every bit
    /// matches. The submitted state is consumed either way.
    pub fn verify_coin<R: Rng + ?Sized>(
        &self,
        coin: Coin,
        rng: &mut R,
    ) -> Result<CoinVerification, CoinError> {
        let serial = coin.serial();
        let secret = {
            let reg = self.registry.lock().expect("mint lock");
            reg.secrets
                .get(&serial)
                .cloned()
                .ok_or(CoinError::UnknownSerial(serial))?
        };
        let (record, state) = coin.into_parts();
        let (handle, qubits) = state.into_qubits();
        if qubits.len() != secret.num_qubits() {
            return Ok(CoinVerification::Rejected {
                serial,
                mismatches: secret.num_qubits(),
            });
        }
        let mismatches = qubits
            .into_iter()
            .zip(secret.qubits())
            .map(|(q, spec)| spec.check(q, rng))
            .filter(|ok| !ok)
            .count();
        if mismatches > 0 {
            return Ok(CoinVerification::Rejected { serial, mismatches });
        }
        Ok(CoinVerification::Accepted(Coin {
            record,
            state: secret.prepare(handle),
        }))
    }

    pub fn serial_for_handle(&self, handle: StateHandle) -> Option<u64> {
        let reg = self.registry.lock().expect("mint lock");
        reg.handles.get(&handle).copied()
    }

    pub fn coin_count(&self) -> usize {
        self.registry.lock().expect("mint lock").secrets.len()
    }

    /// Bijection check: no two serials share a state description.
    pub fn secrets_distinct(&self) -> bool {
        let reg = self.registry.lock().expect("mint lock");
        let all: Vec<&MintSecret> = reg.secrets.values().collect();
        all.iter()
            .enumerate()
            .all(|(i, a)| all[i + 1..].iter().all(|b| a.qubits != b.qubits))
    }

    pub fn registry_entries(&self) -> Vec<RegistryEntry> {
        let reg = self.registry.lock().expect("mint lock");
        reg.handles
            .iter()
            .map(|(handle, serial)| RegistryEntry {
                serial: *serial,
                handle: *handle,
                qubits: reg.secrets[serial].num_qubits(),
            })
            .collect()
    }

    pub fn registry_json_lines(&self) -> String {
        self.registry_entries()
            .iter()
            .map(|e| serde_json::to_string(e).expect("registry rows serialize") + "\n")
            .collect()
    }

    #[cfg(test)]
    pub(crate) fn secret(&self, serial: u64) -> Option<MintSecret> {
        self.registry
            .lock()
            .expect("mint lock")
            .secrets
            .get(&serial)
            .cloned()
    }
}
