use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::node::{Node, Role};
use super::transcript::{Outcome, TransactionEvent, TransactionResult, Transcript};
use super::{quorum_decision, select_verifiers, AdversaryScript, NetworkError, ScenarioConfig};
use crate::bits::BitString;
use crate::coin::{
    check_serial_consistency, ChainRecord, Coin, CoinRecord, CoinState, CoinVerification, Mint,
    PendingEntry, TransferPayload,
};
use crate::protocols::{
    apply_correction, run_bb84, sender_measure, CorrectionBits, EprPair, OneTimePad,
};
use crate::qsig::{
    forge_signature, keygen, sign, verify, KeySlot, Signature, Verdict, VerdictCounts,
};
use crate::qsim::StateVector;
use crate::NodeId;

/// Bits of the renewed record's digest sent alongside the corrections.
pub const DIGEST_BITS: usize = 32;

/// Where the encrypted payload will sit in the remitter's key stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PayloadSlot {
    pub offset: usize,
    pub bits: usize,
}

/// What verifiers receive: classical data only.
#[derive(Clone, Debug, PartialEq)]
pub struct RemittanceRequest {
    pub record: CoinRecord,
    pub payload: TransferPayload,
    pub signature: Signature,
    pub slot: PayloadSlot,
    pub verifiers: Vec<NodeId>,
}

/// The whole simulated world: nodes, mint and broadcast ledger.
#[derive(Debug)]
pub struct Network {
    config: ScenarioConfig,
    mint: Mint,
    nodes: Vec<Node>,
    ledger: Vec<ChainRecord>,
    clock: u64,
    next_serial: u64,
    rng: ChaCha20Rng,
}

struct Log {
    transcript: Transcript,
}

impl Log {
    fn push(&mut self, tick: u64, step: u8, actors: Vec<NodeId>, outcome: Outcome) {
        self.transcript.events.push(TransactionEvent {
            tick,
            step,
            actors,
            deferred: false,
            outcome,
        });
    }

    fn finish(mut self, result: TransactionResult) -> Transcript {
        self.transcript.result = result;
        self.transcript
    }
}

fn invoice_for(record: &CoinRecord, payload: &TransferPayload, bits: usize) -> BitString {
    let mut h = Sha256::new();
    h.update(record.serial().to_be_bytes());
    h.update((record.last_sequence() + 1).to_be_bytes());
    h.update(record.head_digest().unwrap_or_default());
    h.update(serde_json::to_vec(payload).expect("payload serializes"));
    BitString::from_bytes(&h.finalize(), bits)
}

fn digest_prefix(digest: &str) -> BitString {
    BitString::from_bytes(&hex::decode(digest).expect("hex digest"), DIGEST_BITS)
}

impl Network {
    /// Builds the mint (node 0) and participants `1..=n`, and hands every
    /// participant a fresh signing key with its public copies distributed.
    pub fn new(config: ScenarioConfig) -> Result<Self, NetworkError> {
        config.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(0);
        let mut nodes = vec![Node::new(NodeId(0), Role::Mint, config.seed)];
        for i in 1..=config.participants {
            nodes.push(Node::new(NodeId(i as u32), Role::Participant, config.seed));
        }
        let mut net = Self {
            config,
            mint: Mint::new(),
            nodes,
            ledger: Vec::new(),
            clock: 0,
            next_serial: 1,
            rng,
        };
        for id in net.participant_ids() {
            net.provision_key(id)?;
        }
        Ok(net)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn mint(&self) -> &Mint {
        &self.mint
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn ledger(&self) -> &[ChainRecord] {
        &self.ledger
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, NetworkError> {
        self.nodes
            .get(id.0 as usize)
            .ok_or(NetworkError::UnknownNode(id))
    }

    pub fn participant_ids(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.role() == Role::Participant)
            .map(Node::id)
            .collect()
    }

    fn participant(&self, id: NodeId) -> Result<usize, NetworkError> {
        match self.nodes.get(id.0 as usize) {
            Some(n) if n.role() == Role::Participant => Ok(id.0 as usize),
            _ => Err(NetworkError::UnknownNode(id)),
        }
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Mints a coin directly into `holder`'s hands and returns its serial.
    pub fn mint_coin_to(&mut self, holder: NodeId) -> Result<u64, NetworkError> {
        let idx = self.participant(holder)?;
        let serial = self.next_serial;
        let coin = self
            .mint
            .mint_coin(serial, self.config.coin_qubits, &mut self.nodes[0].rng)?;
        self.next_serial += 1;
        self.nodes[idx].coins.insert(serial, coin);
        Ok(serial)
    }

    /// Replaces `owner`'s signing key and sends `T` copies of every public
    /// state to randomly chosen other participants, one full set each.
    fn provision_key(&mut self, owner: NodeId) -> Result<(), NetworkError> {
        let idx = self.participant(owner)?;
        let cfg = &self.config;
        let (key, issuer) = keygen(
            &cfg.qowf,
            cfg.keys_per_bit,
            cfg.invoice_bits,
            &mut self.nodes[idx].rng,
        )?;
        let others: Vec<NodeId> = self
            .participant_ids()
            .into_iter()
            .filter(|&id| id != owner)
            .collect();
        let count = cfg.qowf.copies.min(others.len());
        let mut holders: Vec<NodeId> = rand::seq::index::sample(&mut self.rng, others.len(), count)
            .into_iter()
            .map(|i| others[i])
            .collect();
        holders.sort();
        for h in holders {
            let copies = issuer.issue_all(h)?;
            self.nodes[h.0 as usize].wallet.receive_all(copies);
        }
        self.nodes[idx].signing_key = Some(key);
        Ok(())
    }

    fn broadcast(&mut self, record: ChainRecord) {
        let digest = record.digest();
        self.ledger.push(record);
        for n in &mut self.nodes {
            n.ledger_view.push(digest.clone());
        }
    }

    /// The coin record as reconstructed from the public ledger.
    pub fn record_from_ledger(&self, serial: u64) -> CoinRecord {
        let mut record = CoinRecord::new(serial);
        for e in self.ledger.iter().filter(|e| e.serial == serial) {
            // A later fork at the same sequence is skipped.
            let _ = record.append(PendingEntry {
                sequence: e.sequence,
                payload: e.payload.clone(),
                signature_ref: e.signature_ref.clone(),
            });
        }
        record
    }

    /// Every node's view is a prefix of the broadcast ledger.
    pub fn ledger_views_consistent(&self) -> bool {
        let digests: Vec<String> = self.ledger.iter().map(ChainRecord::digest).collect();
        self.nodes
            .iter()
            .all(|n| digests.starts_with(n.ledger_view()))
    }

    /// Participants currently holding a coin with `serial`.
    pub fn holders_of(&self, serial: u64) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.holds(serial))
            .map(Node::id)
            .collect()
    }

    /// Has the mint check `holder`'s coin. An accepted coin goes back to
    /// the holder re-prepared; a rejected one is gone.
    pub fn audit_coin(&mut self, holder: NodeId, serial: u64) -> Result<bool, NetworkError> {
        let idx = self.participant(holder)?;
        let coin = self.nodes[idx]
            .coins
            .remove(&serial)
            .ok_or(NetworkError::CoinNotHeld {
                node: holder,
                serial,
            })?;
        match self.mint.verify_coin(coin, &mut self.nodes[0].rng)? {
            CoinVerification::Accepted(c) => {
                self.nodes[idx].coins.insert(serial, c);
                Ok(true)
            }
            CoinVerification::Rejected { .. } => Ok(false),
        }
    }

    /// Participants other than the two parties holding a live copy of
    /// every slot of `slots`.
    fn eligible_verifiers(&self, slots: &[KeySlot], parties: [NodeId; 2]) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.role() == Role::Participant && !parties.contains(&n.id()))
            .filter(|n| n.wallet().covers(slots))
            .map(Node::id)
            .collect()
    }

    /// Runs the seven-step transfer of coin `serial`. The Bell measurement
    /// is held back until the quorum has approved, so every abort leaves
    /// the remitter's coin intact.
    pub fn run_transaction(
        &mut self,
        remitter: NodeId,
        receiver: NodeId,
        serial: u64,
    ) -> Result<Transcript, NetworkError> {
        let from = self.participant(remitter)?;
        let to = self.participant(receiver)?;
        if from == to {
            return Err(NetworkError::SameParty(remitter));
        }
        if !self.nodes[from].holds(serial) {
            return Err(NetworkError::CoinNotHeld {
                node: remitter,
                serial,
            });
        }
        let parties = vec![remitter, receiver];
        let mut log = Log {
            transcript: Transcript {
                serial,
                remitter,
                receiver,
                events: Vec::new(),
                result: TransactionResult::Completed,
            },
        };

        // 1: key agreement.
        let tick = self.tick();
        let session = match run_bb84(
            self.config.bb84_raw_length,
            &self.config.eavesdrop,
            self.config.check_fraction,
            &mut self.rng,
        ) {
            Ok(s) => s,
            Err(e) => {
                log.push(
                    tick,
                    1,
                    parties,
                    Outcome::QkdFailed {
                        reason: e.to_string(),
                    },
                );
                return Ok(log.finish(TransactionResult::QkdAborted));
            }
        };
        if session.aborted {
            let outcome = Outcome::QkdAborted {
                check_bits: session.check_bits(),
                qber: session.qber,
            };
            log.push(tick, 1, parties, outcome);
            return Ok(log.finish(TransactionResult::QkdAborted));
        }
        log.push(
            tick,
            1,
            parties.clone(),
            Outcome::KeyShared {
                key_bits: session.sender_key.len(),
                check_bits: session.check_bits(),
                qber: session.qber,
            },
        );
        let mut sender_pad = OneTimePad::new(session.sender_key.clone());
        let mut receiver_pad = OneTimePad::new(session.receiver_key.clone());

        // 2: the record's serial must be the one bound to the state.
        let tick = self.tick();
        let coin = &self.nodes[from].coins[&serial];
        if !check_serial_consistency(coin, &self.mint) {
            log.push(tick, 2, parties, Outcome::SerialMismatch { serial });
            return Ok(log.finish(TransactionResult::SerialMismatch));
        }
        log.push(
            tick,
            2,
            parties.clone(),
            Outcome::SerialConsistent { serial },
        );
        let num_qubits = coin.num_qubits();
        let record = coin.record().clone();

        // 3: reserve the pad segment; the measurement itself comes later.
        let tick = self.tick();
        let slot = PayloadSlot {
            offset: sender_pad.consumed(),
            bits: 2 * num_qubits + DIGEST_BITS,
        };
        if sender_pad.remaining() < slot.bits {
            let outcome = Outcome::PadTooShort {
                needed: slot.bits,
                available: sender_pad.remaining(),
            };
            log.push(tick, 3, vec![remitter], outcome);
            return Ok(log.finish(TransactionResult::PadTooShort));
        }
        log.push(
            tick,
            3,
            vec![remitter],
            Outcome::PayloadReserved {
                offset: slot.offset,
                bits: slot.bits,
            },
        );

        // 4: sign the invoice and dispatch to randomly chosen holders.
        let tick = self.tick();
        let (key_id, slots) = {
            let key = self.nodes[from]
                .signing_key
                .as_ref()
                .expect("participants always hold a fresh key");
            (key.key_id(), key.slots())
        };
        let eligible = self.eligible_verifiers(&slots, [remitter, receiver]);
        let verifiers = select_verifiers(&eligible, self.config.quorum, &mut self.rng)?;
        let payload = TransferPayload {
            from: remitter,
            to: receiver,
            verifier: verifiers[0],
            reward: self.config.reward,
            tick,
        };
        let invoice = invoice_for(&record, &payload, self.config.invoice_bits);
        let signature = {
            let node = &mut self.nodes[from];
            if self.config.adversary == AdversaryScript::ForgedSignature {
                forge_signature(
                    key_id,
                    &invoice,
                    &self.config.qowf,
                    self.config.keys_per_bit,
                    &mut node.rng,
                )
            } else {
                sign(node.signing_key.as_mut().expect("present"), &invoice)?
            }
        };
        let mut actors = vec![remitter];
        actors.extend(&verifiers);
        log.push(
            tick,
            4,
            actors,
            Outcome::RequestDispatched {
                serial,
                sequence: record.last_sequence() + 1,
                key_id,
                invoice: invoice.clone(),
                verifiers: verifiers.clone(),
            },
        );
        let request = RemittanceRequest {
            record,
            payload,
            signature,
            slot,
            verifiers,
        };

        // 5: every chosen verifier checks the signature against its copies.
        let mut counts = Vec::with_capacity(request.verifiers.len());
        for &v in &request.verifiers {
            let tick = self.tick();
            let node = &mut self.nodes[v.0 as usize];
            let result = verify(
                &request.signature,
                &mut node.wallet,
                &self.config.qowf,
                self.config.verify_mode,
                &self.config.thresholds,
                &mut node.rng,
            );
            match result {
                Ok(sv) => {
                    let c = VerdictCounts {
                        checked: sv.per_bit.iter().map(|b| b.checked).sum(),
                        failures: sv.failures(),
                        verdict: sv.verdict(),
                    };
                    log.push(
                        tick,
                        5,
                        vec![v],
                        Outcome::SignatureChecked {
                            verdict: c.verdict,
                            checked: c.checked,
                            failures: c.failures,
                        },
                    );
                    counts.push(c);
                }
                Err(e) => {
                    log.push(
                        tick,
                        5,
                        vec![v],
                        Outcome::VerificationFailed {
                            reason: e.to_string(),
                        },
                    );
                    counts.push(VerdictCounts {
                        checked: 0,
                        failures: 0,
                        verdict: Verdict::Reject,
                    });
                }
            }
        }
        // The key has been revealed or its copies burnt either way.
        self.provision_key(remitter)?;
        if !quorum_decision(&counts, self.config.quorum_rule) {
            let tick = self.tick();
            let verdicts = counts.iter().map(|c| c.verdict).collect();
            log.push(
                tick,
                5,
                request.verifiers.clone(),
                Outcome::QuorumRejected { verdicts },
            );
            return Ok(log.finish(TransactionResult::SignatureRejected));
        }

        // 6: the first verifier renews and broadcasts the record.
        let tick = self.tick();
        let renewer = request.verifiers[0];
        let mut renewed = request.record.clone();
        let signature_ref = format!("{:016x}", request.signature.key_id);
        let entry = renewed.next_entry(request.payload.clone(), signature_ref);
        let head = renewed.append(entry)?.clone();
        let digest = head.digest();
        self.broadcast(head.clone());
        self.nodes[renewer.0 as usize].credits += self.config.reward;
        log.push(
            tick,
            6,
            vec![renewer],
            Outcome::RecordRenewed {
                sequence: head.sequence,
                reward: self.config.reward,
                digest: digest.clone(),
            },
        );

        // 3, deferred: Bell measurements and one-time-pad encoding.
        let tick = self.tick();
        let coin = self.nodes[from]
            .coins
            .remove(&serial)
            .expect("checked at entry");
        let (_, state) = coin.into_parts();
        let (handle, qubits) = state.into_qubits();
        let mut message = BitString::new();
        let mut halves = Vec::with_capacity(qubits.len());
        let mut residue = Vec::with_capacity(qubits.len());
        for q in qubits {
            let pair = EprPair::new();
            let out = sender_measure(q, pair, &mut self.nodes[from].rng)?;
            message.extend_from(&out.correction.to_bits());
            // The input qubit collapses onto the phase bit.
            residue.push(
                StateVector::basis_state(1, usize::from(out.correction.phase)).expect("one qubit"),
            );
            halves.push(out.receiver_half);
        }
        self.nodes[from]
            .residues
            .insert(serial, CoinState::from_qubits(handle, residue));
        message.extend_from(&digest_prefix(&digest));
        let ciphertext = sender_pad.encrypt_at(request.slot.offset, &message)?;
        log.transcript.events.push(TransactionEvent {
            tick,
            step: 3,
            actors: vec![remitter],
            deferred: true,
            outcome: Outcome::BellMeasured {
                qubits: halves.len(),
                ciphertext: ciphertext.bits.to_hex(),
            },
        });

        // 7: decrypt, correct, and present the coin to the mint.
        let tick = self.tick();
        let plain = receiver_pad.decrypt(&ciphertext)?;
        let mut corrected = Vec::with_capacity(halves.len());
        for (i, half) in halves.into_iter().enumerate() {
            let bits = CorrectionBits::from_bits(&plain.slice(2 * i, 2 * i + 2)).expect("two bits");
            corrected.push(apply_correction(half, bits)?);
        }
        let claimed = plain.slice(2 * num_qubits, plain.len());
        let view = self.record_from_ledger(serial);
        let digest_matches = view.head_digest().map(|d| digest_prefix(&d)) == Some(claimed);
        let delivered = Coin::assemble(view, CoinState::from_qubits(handle, corrected));
        match self.mint.verify_coin(delivered, &mut self.nodes[0].rng)? {
            CoinVerification::Accepted(c) => {
                self.nodes[to].coins.insert(serial, c);
                log.push(
                    tick,
                    7,
                    vec![receiver],
                    Outcome::CoinReceived { digest_matches },
                );
                Ok(log.finish(TransactionResult::Completed))
            }
            CoinVerification::Rejected { mismatches, .. } => {
                log.push(
                    tick,
                    7,
                    vec![receiver],
                    Outcome::CoinRejected { mismatches },
                );
                Ok(log.finish(TransactionResult::CoinRejected))
            }
        }
    }

    /// The remitter pays `first`, then tries to pay `second` with a copy of
    /// the public record and whatever its Bell measurements left behind.
    pub fn double_spend_attempt(
        &mut self,
        remitter: NodeId,
        first: NodeId,
        second: NodeId,
        serial: u64,
    ) -> Result<(Transcript, Transcript), NetworkError> {
        let honest = self.run_transaction(remitter, first, serial)?;
        let idx = self.participant(remitter)?;
        if let Some(state) = self.nodes[idx].residues.remove(&serial) {
            let record = self.record_from_ledger(serial);
            self.nodes[idx]
                .coins
                .insert(serial, Coin::assemble(record, state));
        }
        let replay = self.run_transaction(remitter, second, serial)?;
        Ok((honest, replay))
    }
}
