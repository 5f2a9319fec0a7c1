//! Two-party protocols: teleportation, BB84 key distribution and the
//! one-time pad used on the open classical channel.

mod bb84;
mod otp;
mod teleport;

pub use bb84::{
    run_bb84, Bb84Session, Bb84Transcript, EavesdropMode, EavesdropPolicy, ABORT_THRESHOLD,
    DEFAULT_CHECK_FRACTION, MIN_KEY_LENGTH, MIN_RAW_LENGTH,
};
pub use otp::{otp_decrypt, otp_encrypt, OneTimePad, PadCiphertext};
pub use teleport::{
    apply_correction, sender_measure, teleport, BellOutcome, CorrectionBits, EprPair,
    TeleportResult,
};

use thiserror::Error;

use crate::qsim::QsimError;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("shared pair is not the Φ+ Bell state")]
    NotEntangled,
    #[error("teleportation input must be one qubit, got {0}")]
    NotSingleQubit(usize),
    #[error("raw length {0} below the minimum of {MIN_RAW_LENGTH}")]
    RawLengthTooShort(usize),
    #[error("check fraction {0} outside (0, 1)")]
    BadCheckFraction(f64),
    #[error("invalid eavesdropper fraction {0}")]
    BadEavesdropPolicy(f64),
    #[error("only {0} key bits left after the check subset, need {MIN_KEY_LENGTH}")]
    KeyTooShort(usize),
    #[error("one-time pad needs {needed} bits but only {remaining} remain")]
    KeyExhausted { needed: usize, remaining: usize },
    #[error("pad segment at offset {offset} was already used")]
    KeyReuse { offset: usize },
}
