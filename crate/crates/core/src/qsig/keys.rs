use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{qowf, QowfParams, QsigError};
use crate::bits::BitString;
use crate::qsim::StateVector;
use crate::NodeId;

/// Addresses one key string `k_b^i` for message position `position`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeySlot {
    pub key_id: u64,
    pub position: usize,
    pub bit: bool,
    pub index: usize,
}

/// Private half of a one-time signing key for messages of a fixed length.
#[derive(Debug)]
pub struct SigningKey {
    key_id: u64,
    params: QowfParams,
    keys_per_bit: usize,
    /// `strings[position][bit][index]`.
    strings: Vec<[Vec<BitString>; 2]>,
    used: bool,
}

impl SigningKey {
    pub fn key_id(&self) -> u64 {
        self.key_id
    }

    pub fn params(&self) -> &QowfParams {
        &self.params
    }

    pub fn keys_per_bit(&self) -> usize {
        self.keys_per_bit
    }

    pub fn message_len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_used(&self) -> bool {
        self.used
    }

    #[cfg(test)]
    pub(crate) fn strings_for_test(&self, position: usize, bit: bool) -> Vec<BitString> {
        self.strings[position][usize::from(bit)].clone()
    }

    /// Every slot this key can ever reveal.
    pub fn slots(&self) -> Vec<KeySlot> {
        slots_for(self.key_id, self.message_len(), self.keys_per_bit)
    }
}

pub(crate) fn slots_for(key_id: u64, message_len: usize, keys_per_bit: usize) -> Vec<KeySlot> {
    let mut out = Vec::with_capacity(message_len * 2 * keys_per_bit);
    for position in 0..message_len {
        for bit in [false, true] {
            for index in 0..keys_per_bit {
                out.push(KeySlot {
                    key_id,
                    position,
                    bit,
                    index,
                });
            }
        }
    }
    out
}

/// A copy of `|f_k⟩` held by one participant. Copies cannot be cloned; the
/// only ways to use one consume it.
#[derive(Debug)]
pub struct PublicKeyCopy {
    slot: KeySlot,
    holder: NodeId,
    pub(crate) state: StateVector,
}

impl PublicKeyCopy {
    pub fn slot(&self) -> KeySlot {
        self.slot
    }

    pub fn holder(&self) -> NodeId {
        self.holder
    }

    pub fn num_qubits(&self) -> usize {
        self.state.num_qubits()
    }
}

/// Signer-side source of public-key copies, enforcing the copy budget.
#[derive(Debug)]
pub struct PublicKeyIssuer {
    key_id: u64,
    params: QowfParams,
    states: BTreeMap<KeySlot, StateVector>,
    issued: Mutex<BTreeMap<KeySlot, usize>>,
}

impl PublicKeyIssuer {
    pub fn key_id(&self) -> u64 {
        self.key_id
    }

    pub fn params(&self) -> &QowfParams {
        &self.params
    }

    pub fn slots(&self) -> impl Iterator<Item = &KeySlot> {
        self.states.keys()
    }

    pub fn issued(&self, slot: &KeySlot) -> usize {
        let issued = self.issued.lock().expect("issuer lock");
        issued.get(slot).copied().unwrap_or(0)
    }

    /// Prepares one more copy of the state for `slot`.
    pub fn issue(&self, slot: KeySlot, holder: NodeId) -> Result<PublicKeyCopy, QsigError> {
        let state = self.states.get(&slot).ok_or(QsigError::UnknownSlot(slot))?;
        let mut issued = self.issued.lock().expect("issuer lock");
        let count = issued.entry(slot).or_insert(0);
        if *count >= self.params.copies {
            return Err(QsigError::CopyBudgetExhausted(slot));
        }
        *count += 1;
        Ok(PublicKeyCopy {
            slot,
            holder,
            state: state.clone(),
        })
    }

    /// One copy of every slot for `holder`, or nothing if any slot is spent.
    pub fn issue_all(&self, holder: NodeId) -> Result<Vec<PublicKeyCopy>, QsigError> {
        let mut issued = self.issued.lock().expect("issuer lock");
        if let Some(slot) = self
            .states
            .keys()
            .find(|s| issued.get(s).copied().unwrap_or(0) >= self.params.copies)
        {
            return Err(QsigError::CopyBudgetExhausted(*slot));
        }
        Ok(self
            .states
            .iter()
            .map(|(slot, state)| {
                *issued.entry(*slot).or_insert(0) += 1;
                PublicKeyCopy {
                    slot: *slot,
                    holder,
                    state: state.clone(),
                }
            })
            .collect())
    }
}

/// Generates a one-time key for `message_len`-bit messages with
/// `keys_per_bit` strings per bit value (2·M strings per position).
pub fn keygen<R: Rng + ?Sized>(
    params: &QowfParams,
    keys_per_bit: usize,
    message_len: usize,
    rng: &mut R,
) -> Result<(SigningKey, PublicKeyIssuer), QsigError> {
    params.validate()?;
    params.check_budget()?;
    if keys_per_bit == 0 || message_len == 0 {
        return Err(QsigError::EmptyKey);
    }
    let needed = 2 * keys_per_bit * message_len;
    if params.key_length < 64 && needed as u64 > 1u64 << params.key_length {
        return Err(QsigError::BadParams(*params));
    }
    let key_id: u64 = rng.gen();
    let mut seen = BTreeSet::new();
    // Redraw on collision so every k_b^i is distinct.
    let mut fresh = |rng: &mut R| loop {
        let k = BitString::random(params.key_length, rng);
        if seen.insert(k.clone()) {
            break k;
        }
    };
    let strings: Vec<[Vec<BitString>; 2]> = (0..message_len)
        .map(|_| {
            let zeros = (0..keys_per_bit).map(|_| fresh(rng)).collect();
            let ones = (0..keys_per_bit).map(|_| fresh(rng)).collect();
            [zeros, ones]
        })
        .collect();

    let mut states = BTreeMap::new();
    for slot in slots_for(key_id, message_len, keys_per_bit) {
        let k = &strings[slot.position][usize::from(slot.bit)][slot.index];
        states.insert(slot, qowf(k, params)?);
    }

    Ok((
        SigningKey {
            key_id,
            params: *params,
            keys_per_bit,
            strings,
            used: false,
        },
        PublicKeyIssuer {
            key_id,
            params: *params,
            states,
            issued: Mutex::new(BTreeMap::new()),
        },
    ))
}

/// Signed message: for each message bit `b` the strings `k_b^1..k_b^M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub key_id: u64,
    pub message: BitString,
    pub revealed: Vec<Vec<BitString>>,
}

#[derive(Serialize, Deserialize)]
struct SignatureWire {
    key_id: u64,
    message: BitString,
    key_length: usize,
    revealed: Vec<Vec<String>>,
}

impl Serialize for Signature {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SignatureWire {
            key_id: self.key_id,
            message: self.message.clone(),
            key_length: self
                .revealed
                .first()
                .and_then(|r| r.first())
                .map_or(0, BitString::len),
            revealed: self
                .revealed
                .iter()
                .map(|row| row.iter().map(BitString::to_hex).collect())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = SignatureWire::deserialize(deserializer)?;
        let revealed = wire
            .revealed
            .iter()
            .map(|row| {
                row.iter()
                    .map(|h| {
                        let bytes = hex::decode(h).map_err(serde::de::Error::custom)?;
                        if bytes.len() * 8 < wire.key_length {
                            return Err(serde::de::Error::custom("revealed key too short"));
                        }
                        Ok(BitString::from_bytes(&bytes, wire.key_length))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Signature {
            key_id: wire.key_id,
            message: wire.message,
            revealed,
        })
    }
}

/// Signs `message`, revealing one string set per bit; the key is spent.
pub fn sign(key: &mut SigningKey, message: &BitString) -> Result<Signature, QsigError> {
    if key.used {
        return Err(QsigError::KeyReuse(key.key_id));
    }
    if message.len() != key.message_len() {
        return Err(QsigError::MessageLength {
            expected: key.message_len(),
            got: message.len(),
        });
    }
    key.used = true;
    let revealed = message
        .bits()
        .iter()
        .enumerate()
        .map(|(position, &b)| key.strings[position][usize::from(b)].clone())
        .collect();
    Ok(Signature {
        key_id: key.key_id,
        message: message.clone(),
        revealed,
    })
}

/// A signature for `message` built from random strings, as produced by a
/// forger who never saw the private key.
pub fn forge_signature<R: Rng + ?Sized>(
    key_id: u64,
    message: &BitString,
    params: &QowfParams,
    keys_per_bit: usize,
    rng: &mut R,
) -> Signature {
    Signature {
        key_id,
        message: message.clone(),
        revealed: (0..message.len())
            .map(|_| {
                (0..keys_per_bit)
                    .map(|_| BitString::random(params.key_length, rng))
                    .collect()
            })
            .collect(),
    }
}

/// Registry row for one copy; amplitudes are never exported.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopyRegistryEntry {
    pub holder: NodeId,
    pub key_id: u64,
    pub position: usize,
    pub bit: u8,
    pub index: usize,
    pub consumed: bool,
}

#[derive(Debug, Default)]
struct HeldSlot {
    live: Vec<PublicKeyCopy>,
    consumed: usize,
}

/// The public-key copies one participant holds.
#[derive(Debug)]
pub struct CopyWallet {
    holder: NodeId,
    slots: BTreeMap<KeySlot, HeldSlot>,
}

impl CopyWallet {
    pub fn new(holder: NodeId) -> Self {
        Self {
            holder,
            slots: BTreeMap::new(),
        }
    }

    pub fn holder(&self) -> NodeId {
        self.holder
    }

    pub fn receive(&mut self, copy: PublicKeyCopy) {
        self.slots.entry(copy.slot).or_default().live.push(copy);
    }

    pub fn receive_all(&mut self, copies: impl IntoIterator<Item = PublicKeyCopy>) {
        for c in copies {
            self.receive(c);
        }
    }

    pub fn live_copies(&self, slot: &KeySlot) -> usize {
        self.slots.get(slot).map_or(0, |s| s.live.len())
    }

    /// Whether a live copy is held for every slot in `slots`.
    pub fn covers<'a>(&self, slots: impl IntoIterator<Item = &'a KeySlot>) -> bool {
        slots.into_iter().all(|s| self.live_copies(s) > 0)
    }

    pub(crate) fn check_available(&self, slot: &KeySlot) -> Result<(), QsigError> {
        match self.slots.get(slot) {
            None => Err(QsigError::MissingCopy(*slot)),
            Some(held) if held.live.is_empty() => Err(QsigError::ConsumedCopy(*slot)),
            Some(_) => Ok(()),
        }
    }

    /// Removes one live copy for `slot` to be measured.
    pub fn take(&mut self, slot: &KeySlot) -> Result<PublicKeyCopy, QsigError> {
        self.check_available(slot)?;
        let held = self.slots.get_mut(slot).expect("checked above");
        held.consumed += 1;
        Ok(held.live.pop().expect("checked above"))
    }

    pub fn registry_entries(&self) -> Vec<CopyRegistryEntry> {
        let mut out = Vec::new();
        for (slot, held) in &self.slots {
            let row = |consumed| CopyRegistryEntry {
                holder: self.holder,
                key_id: slot.key_id,
                position: slot.position,
                bit: u8::from(slot.bit),
                index: slot.index,
                consumed,
            };
            out.extend((0..held.live.len()).map(|_| row(false)));
            out.extend((0..held.consumed).map(|_| row(true)));
        }
        out
    }
}
