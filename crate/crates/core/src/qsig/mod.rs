//! One-time quantum digital signatures.
//!
//! A private key is a set of classical strings `k_b^i`; the public key is
//! the set of states `|f_{k_b^i}⟩` produced by a keyed circuit. Signing a
//! bit reveals the matching strings, and verifiers recompute the states and
//! compare them with the copies they were issued. Only `T` copies of each
//! state may ever exist, which bounds what an observer can learn about `k`.

mod attack;
mod keys;
mod qowf;
mod verify;

pub use attack::{KeyRecoveryAttacker, MeasurementPlan, MAX_ATTACK_KEY_LENGTH};
pub use keys::{
    forge_signature, keygen, sign, CopyRegistryEntry, CopyWallet, KeySlot, PublicKeyCopy,
    PublicKeyIssuer, Signature, SigningKey,
};
pub use qowf::{qowf, qowf_circuit, QowfParams, MAX_OUTPUT_QUBITS};
pub use verify::{verify, SignatureVerdict, Thresholds, Verdict, VerdictCounts, VerifyMode};

use thiserror::Error;

use crate::qsim::QsimError;

pub const DEFAULT_KEYS_PER_BIT: usize = 16;
pub const DEFAULT_SWAP_REPS: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum QsigError {
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error("invalid one-way function parameters {0:?}")]
    BadParams(QowfParams),
    #[error("copy budget violated: L={key_length}, n={output_qubits}, T={copies} leaves less than L/2 hidden")]
    BudgetViolation {
        key_length: usize,
        output_qubits: usize,
        copies: usize,
    },
    #[error("key string has {got} bits, expected {expected}")]
    KeyLength { expected: usize, got: usize },
    #[error("signing key needs at least one message bit and one string per bit")]
    EmptyKey,
    #[error("message has {got} bits, key signs {expected}")]
    MessageLength { expected: usize, got: usize },
    #[error("signing key {0:#x} was already used")]
    KeyReuse(u64),
    #[error("no such key slot {0:?}")]
    UnknownSlot(KeySlot),
    #[error("all copies of {0:?} have been issued")]
    CopyBudgetExhausted(KeySlot),
    #[error("no copy held for {0:?}")]
    MissingCopy(KeySlot),
    #[error("held copy of {0:?} was already consumed")]
    ConsumedCopy(KeySlot),
    #[error("signature does not match its message layout")]
    MalformedSignature,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use crate::NodeId;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn small() -> QowfParams {
        QowfParams::new(32, 4, 4).unwrap()
    }

    #[test]
    fn keygen_budget() {
        let mut r = rng(0);
        assert!(keygen(&QowfParams::new(128, 8, 8).unwrap(), 1, 1, &mut r).is_ok());
        assert_eq!(
            keygen(&QowfParams::new(128, 8, 9).unwrap(), 1, 1, &mut r).unwrap_err(),
            QsigError::BudgetViolation {
                key_length: 128,
                output_qubits: 8,
                copies: 9
            }
        );
    }

    #[test]
    fn copy_counter_exhausts_at_t() {
        let mut r = rng(1);
        let (key, issuer) = keygen(&small(), 2, 1, &mut r).unwrap();
        assert_eq!(key.slots().len(), 4);
        let slot = key.slots()[0];
        for _ in 0..4 {
            issuer.issue(slot, NodeId(1)).unwrap();
        }
        assert_eq!(
            issuer.issue(slot, NodeId(2)).unwrap_err(),
            QsigError::CopyBudgetExhausted(slot)
        );
        assert!(issuer.issue_all(NodeId(3)).is_err());
        // The failed bulk issue must not bump any other counter.
        assert_eq!(issuer.issued(&key.slots()[1]), 0);
    }

    #[test]
    fn sign_reveals_matching_strings_once() {
        let mut r = rng(2);
        let (mut key, _) = keygen(&small(), 3, 2, &mut r).unwrap();
        let msg = BitString::parse("01").unwrap();
        let sig = sign(&mut key, &msg).unwrap();
        assert_eq!(sig.revealed.len(), 2);
        assert!(sig.revealed.iter().all(|row| row.len() == 3));
        assert_eq!(sig.revealed[0], key.strings_for_test(0, false));
        assert_eq!(sig.revealed[1], key.strings_for_test(1, true));
        assert_eq!(
            sign(&mut key, &msg).unwrap_err(),
            QsigError::KeyReuse(key.key_id())
        );
    }

    #[test]
    fn sign_checks_message_length() {
        let mut r = rng(3);
        let (mut key, _) = keygen(&small(), 1, 2, &mut r).unwrap();
        assert!(matches!(
            sign(&mut key, &BitString::parse("1").unwrap()),
            Err(QsigError::MessageLength { .. })
        ));
        assert!(!key.is_used());
    }

    #[test]
    fn genuine_signature_exact_mode() {
        let mut r = rng(4);
        let p = QowfParams::default();
        let (mut key, issuer) = keygen(&p, 16, 1, &mut r).unwrap();
        let mut wallet = CopyWallet::new(NodeId(7));
        wallet.receive_all(issuer.issue_all(NodeId(7)).unwrap());
        let sig = sign(&mut key, &BitString::parse("1").unwrap()).unwrap();
        let v = verify(
            &sig,
            &mut wallet,
            &p,
            VerifyMode::Exact,
            &Thresholds::default(),
            &mut r,
        )
        .unwrap();
        assert_eq!(v.per_bit[0].failures, 0);
        assert_eq!(v.verdict(), Verdict::AcceptTransferable);
        // The copies for bit 1 are gone; those for bit 0 remain.
        assert!(matches!(
            verify(
                &sig,
                &mut wallet,
                &p,
                VerifyMode::Exact,
                &Thresholds::default(),
                &mut r
            ),
            Err(QsigError::ConsumedCopy(_))
        ));
    }

    #[test]
    fn forged_signature_exact_mode_rejects() {
        let mut r = rng(5);
        let p = QowfParams::default();
        let (key, issuer) = keygen(&p, 16, 1, &mut r).unwrap();
        let mut wallet = CopyWallet::new(NodeId(1));
        wallet.receive_all(issuer.issue_all(NodeId(1)).unwrap());
        let msg = BitString::parse("0").unwrap();
        let forged = forge_signature(key.key_id(), &msg, &p, 16, &mut r);
        let v = verify(
            &forged,
            &mut wallet,
            &p,
            VerifyMode::Exact,
            &Thresholds::default(),
            &mut r,
        )
        .unwrap();
        assert_eq!(v.per_bit[0].failures, 16);
        assert_eq!(v.verdict(), Verdict::Reject);
    }

    #[test]
    fn missing_copy_leaves_wallet_intact() {
        let mut r = rng(6);
        let p = small();
        let (mut key, issuer) = keygen(&p, 2, 1, &mut r).unwrap();
        let mut wallet = CopyWallet::new(NodeId(1));
        // Only the bit-0 strings are held.
        for slot in key.slots().into_iter().filter(|s| !s.bit) {
            wallet.receive(issuer.issue(slot, NodeId(1)).unwrap());
        }
        let sig = sign(&mut key, &BitString::parse("1").unwrap()).unwrap();
        assert!(matches!(
            verify(
                &sig,
                &mut wallet,
                &p,
                VerifyMode::Exact,
                &Thresholds::default(),
                &mut r
            ),
            Err(QsigError::MissingCopy(_))
        ));
        assert!(wallet.registry_entries().iter().all(|e| !e.consumed));
    }

    #[test]
    fn verdict_thresholds() {
        let t = Thresholds::default();
        assert_eq!(Verdict::classify(0, 16, &t), Verdict::AcceptTransferable);
        assert_eq!(Verdict::classify(7, 16, &t), Verdict::Accept);
        assert_eq!(Verdict::classify(8, 16, &t), Verdict::Reject);
        let loose = Thresholds { c1: 0.25, c2: 0.75 };
        assert_eq!(
            Verdict::classify(4, 16, &loose),
            Verdict::AcceptTransferable
        );
        assert_eq!(Verdict::classify(5, 16, &loose), Verdict::Accept);
    }

    #[test]
    fn signature_json_uses_hex() {
        let mut r = rng(8);
        let p = small();
        let (mut key, _) = keygen(&p, 2, 2, &mut r).unwrap();
        let sig = sign(&mut key, &BitString::parse("10").unwrap()).unwrap();
        let json = serde_json::to_value(&sig).unwrap();
        let first = json["revealed"][0][0].as_str().unwrap();
        assert_eq!(first.len(), 8);
        assert!(first.chars().all(|c| c.is_ascii_hexdigit()));
        let back: Signature = serde_json::from_value(json).unwrap();
        assert_eq!(back, sig);
    }

    #[test]
    fn registry_rows_track_consumption() {
        let mut r = rng(9);
        let p = small();
        let (mut key, issuer) = keygen(&p, 1, 1, &mut r).unwrap();
        let mut wallet = CopyWallet::new(NodeId(4));
        wallet.receive_all(issuer.issue_all(NodeId(4)).unwrap());
        let sig = sign(&mut key, &BitString::parse("0").unwrap()).unwrap();
        verify(
            &sig,
            &mut wallet,
            &p,
            VerifyMode::Exact,
            &Thresholds::default(),
            &mut r,
        )
        .unwrap();
        let rows = wallet.registry_entries();
        assert_eq!(rows.len(), 2);
        let consumed: Vec<_> = rows.iter().filter(|e| e.consumed).collect();
        assert_eq!(consumed.len(), 1);
        assert_eq!(consumed[0].bit, 0);
        let text = serde_json::to_string(&rows).unwrap();
        assert!(!text.contains("amplitude"));
    }

    #[test]
    fn blind_attacker_without_copies() {
        let mut r = rng(10);
        let p = QowfParams::new(8, 2, 0).unwrap();
        let attacker = KeyRecoveryAttacker::new(p, MeasurementPlan::Computational).unwrap();
        // With no observations every key ties; the guess is uniform.
        let hits = (0..2560)
            .filter(|_| attacker.attack(Vec::new(), &mut r).unwrap().to_u64() == 0)
            .count();
        assert!((1..=25).contains(&hits), "{hits}");
    }

    proptest! {
        #[test]
        fn issuance_never_exceeds_budget(ops in prop::collection::vec((0usize..4, 0u32..5), 0..60)) {
            let mut r = rng(11);
            let (key, issuer) = keygen(&QowfParams::new(16, 2, 3).unwrap(), 1, 2, &mut r).unwrap();
            let slots = key.slots();
            let mut granted = vec![0usize; slots.len()];
            for (which, holder) in ops {
                if which == 3 {
                    if issuer.issue_all(NodeId(holder)).is_ok() {
                        granted.iter_mut().for_each(|g| *g += 1);
                    }
                } else if issuer.issue(slots[which], NodeId(holder)).is_ok() {
                    granted[which] += 1;
                }
                for (i, s) in slots.iter().enumerate() {
                    prop_assert!(granted[i] <= 3);
                    prop_assert_eq!(issuer.issued(s), granted[i]);
                }
            }
        }

        #[test]
        fn qowf_is_a_pure_function(bits in prop::collection::vec(any::<bool>(), 32)) {
            let k = BitString::from_bits(bits);
            prop_assert_eq!(qowf(&k, &small()).unwrap(), qowf(&k, &small()).unwrap());
        }
    }
}
