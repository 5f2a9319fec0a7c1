use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::bits::BitString;

/// XORs `message` with the leading bits of `key`.
pub fn otp_encrypt(message: &BitString, key: &BitString) -> Result<BitString, ProtocolError> {
    if key.len() < message.len() {
        return Err(ProtocolError::KeyExhausted {
            needed: message.len(),
            remaining: key.len(),
        });
    }
    Ok(message.xor(key))
}

pub fn otp_decrypt(ciphertext: &BitString, key: &BitString) -> Result<BitString, ProtocolError> {
    otp_encrypt(ciphertext, key)
}

/// Ciphertext tagged with the pad offset its key segment starts at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadCiphertext {
    pub offset: usize,
    pub bits: BitString,
}

/// A shared key consumed front to back; no segment is ever used twice.
#[derive(Debug)]
pub struct OneTimePad {
    key: BitString,
    consumed: usize,
}

impl OneTimePad {
    pub fn new(key: BitString) -> Self {
        Self { key, consumed: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn remaining(&self) -> usize {
        self.key.len() - self.consumed
    }

    fn take(&mut self, offset: usize, len: usize) -> Result<BitString, ProtocolError> {
        if offset < self.consumed {
            return Err(ProtocolError::KeyReuse { offset });
        }
        if offset + len > self.key.len() {
            return Err(ProtocolError::KeyExhausted {
                needed: len,
                remaining: self.key.len().saturating_sub(offset),
            });
        }
        self.consumed = offset + len;
        Ok(self.key.slice(offset, offset + len))
    }

    /// Encrypts with the next unused key segment.
    pub fn encrypt(&mut self, message: &BitString) -> Result<PadCiphertext, ProtocolError> {
        self.encrypt_at(self.consumed, message)
    }

    /// Encrypts with the segment starting at `offset`, which must not
    /// overlap anything already consumed.
    pub fn encrypt_at(
        &mut self,
        offset: usize,
        message: &BitString,
    ) -> Result<PadCiphertext, ProtocolError> {
        let segment = self.take(offset, message.len())?;
        Ok(PadCiphertext {
            offset,
            bits: message.xor(&segment),
        })
    }

    pub fn decrypt(&mut self, ciphertext: &PadCiphertext) -> Result<BitString, ProtocolError> {
        let segment = self.take(ciphertext.offset, ciphertext.bits.len())?;
        Ok(ciphertext.bits.xor(&segment))
    }
}
