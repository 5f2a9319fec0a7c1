//! Coins, the mint, and the per-coin transfer chain.
//!
//! Coin states are Wiesner-style: every qubit is one of `|0⟩, |1⟩, |+⟩, |−⟩`
//! and only the mint knows which. Verification therefore goes through the
//! mint, which measures each qubit in the basis it recorded.

mod mint;
mod record;

pub use mint::{
    Basis, Coin, CoinState, CoinVerification, Mint, MintSecret, QubitSpec, RegistryEntry,
    StateHandle,
};
pub use record::{ChainRecord, CoinRecord, PendingEntry, TransferPayload};

use rand::Rng;
use thiserror::Error;

pub const DEFAULT_COIN_QUBITS: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoinError {
    #[error("serial {0} has already been minted")]
    DuplicateSerial(u64),
    #[error("serial {0} is unknown to the mint")]
    UnknownSerial(u64),
    #[error("a coin needs at least one qubit")]
    EmptyCoin,
    #[error("every {0}-qubit state description is already in use")]
    DescriptionsExhausted(usize),
    #[error("expected sequence {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error("entry {sequence} already exists and cannot be rewritten")]
    RewriteAttempt { sequence: u64 },
}

/// True iff the record's serial is the one the mint bound to the coin's
/// state handle.
pub fn check_serial_consistency(coin: &Coin, mint: &Mint) -> bool {
    mint.serial_for_handle(coin.handle()) == Some(coin.serial())
}

/// Measure-and-prepare counterfeiting: each qubit of a genuine coin is
/// measured in a guessed basis and the outcome is prepared twice.
///
/// The genuine state is destroyed. Both returned coins carry the original
/// record and handle claim.
pub fn forge_by_measurement<R: Rng + ?Sized>(coin: Coin, rng: &mut R) -> (Coin, Coin) {
    let (record, state) = coin.into_parts();
    let (handle, qubits) = state.into_qubits();
    let specs: Vec<QubitSpec> = qubits
        .into_iter()
        .map(|q| {
            let basis = Basis::random(rng);
            QubitSpec {
                basis,
                bit: mint::measure_in_basis(q, basis, rng),
            }
        })
        .collect();
    let build = || CoinState::from_qubits(handle, specs.iter().map(|s| s.prepare()).collect());
    (
        Coin::assemble(record.clone(), build()),
        Coin::assemble(record, build()),
    )
}
