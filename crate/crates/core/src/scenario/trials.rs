use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::{AttackConfig, RunParams, Scenario, ScenarioError, TrialRow};
use crate::bits::BitString;
use crate::coin::{forge_by_measurement, Mint};
use crate::network::{Network, Outcome, ScenarioConfig, TransactionResult, Transcript};
use crate::protocols::{run_bb84, EavesdropPolicy};
use crate::qsig::{keygen, sign, KeyRecoveryAttacker};
use crate::NodeId;

const REMITTER: NodeId = NodeId(1);
const RECEIVER: NodeId = NodeId(2);
const SECOND_RECEIVER: NodeId = NodeId(3);

pub(super) fn attacker(attack: &AttackConfig) -> Result<KeyRecoveryAttacker, ScenarioError> {
    Ok(KeyRecoveryAttacker::new(
        attack.qowf_params(attack.max_copies)?,
        attack.plan,
    )?)
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn flag(b: bool) -> f64 {
    f64::from(u8::from(b))
}

fn result_name(result: TransactionResult) -> String {
    serde_json::to_value(result)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .expect("results serialize as strings")
}

struct Trial {
    result: String,
    coins_before: usize,
    coins_after: usize,
    transcript: String,
    metrics: BTreeMap<String, f64>,
}

impl Trial {
    fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }
}

pub(super) fn run_trial(
    scenario: Scenario,
    index: usize,
    seed: u64,
    params: &RunParams,
    attacker: Option<&KeyRecoveryAttacker>,
) -> Result<TrialRow, ScenarioError> {
    let trial = match scenario {
        Scenario::HonestTransfer => honest_transfer(seed, params)?,
        Scenario::DoubleSpend => double_spend(seed, params)?,
        Scenario::EavesdropQkd => eavesdrop_qkd(seed, params)?,
        Scenario::ForgedSignature => forged_signature(seed, params)?,
        Scenario::KeyRecovery => key_recovery(
            seed,
            &params.attack,
            attacker.expect("attacker is built for key recovery runs"),
        )?,
        Scenario::CounterfeitCoin => counterfeit_coin(seed, params)?,
    };
    Ok(TrialRow {
        trial: index,
        seed,
        result: trial.result,
        coins_before: trial.coins_before,
        coins_after: trial.coins_after,
        transcript_digest: digest(&trial.transcript),
        metrics: trial.metrics,
    })
}

fn network(seed: u64, params: &RunParams) -> Result<(Network, u64), ScenarioError> {
    let mut net = Network::new(ScenarioConfig {
        seed,
        ..params.network.clone()
    })?;
    let serial = net.mint_coin_to(REMITTER)?;
    Ok((net, serial))
}

/// Has the mint check whoever holds `serial` now.
fn holder_verifies(net: &mut Network, serial: u64) -> Result<bool, ScenarioError> {
    match net.holders_of(serial).as_slice() {
        [holder] => Ok(net.audit_coin(*holder, serial)?),
        _ => Ok(false),
    }
}

fn network_trial(
    net: &Network,
    result: TransactionResult,
    transcripts: &[&Transcript],
    before: usize,
) -> Trial {
    Trial {
        result: result_name(result),
        coins_before: before,
        coins_after: net.mint().coin_count(),
        transcript: transcripts.iter().map(|t| t.to_json_lines()).collect(),
        metrics: BTreeMap::new(),
    }
}

fn honest_transfer(seed: u64, params: &RunParams) -> Result<Trial, ScenarioError> {
    let (mut net, serial) = network(seed, params)?;
    let before = net.mint().coin_count();
    let t = net.run_transaction(REMITTER, RECEIVER, serial)?;
    let verified =
        t.completed() && net.holders_of(serial) == [RECEIVER] && holder_verifies(&mut net, serial)?;
    let holders = net.holders_of(serial).len();
    Ok(network_trial(&net, t.result, &[&t], before)
        .metric("completed", flag(t.completed()))
        .metric("receiver_verified", flag(verified))
        .metric("holders", holders as f64))
}

fn double_spend(seed: u64, params: &RunParams) -> Result<Trial, ScenarioError> {
    let (mut net, serial) = network(seed, params)?;
    let before = net.mint().coin_count();
    let (first, second) = net.double_spend_attempt(REMITTER, RECEIVER, SECOND_RECEIVER, serial)?;
    let holders = net.holders_of(serial).len();
    Ok(
        network_trial(&net, second.result, &[&first, &second], before)
            .metric("first_accepted", flag(first.completed()))
            .metric("second_accepted", flag(second.completed()))
            .metric("holders", holders as f64),
    )
}

fn eavesdrop_qkd(seed: u64, params: &RunParams) -> Result<Trial, ScenarioError> {
    let (mut net, serial) = network(seed, params)?;
    let before = net.mint().coin_count();
    let t = net.run_transaction(REMITTER, RECEIVER, serial)?;
    let (qber, check_bits) = match t.events.first().map(|e| &e.outcome) {
        Some(Outcome::KeyShared {
            qber, check_bits, ..
        })
        | Some(Outcome::QkdAborted { qber, check_bits }) => (*qber, *check_bits),
        _ => (0.0, 0),
    };
    let intact = holder_verifies(&mut net, serial)?;
    // The same link without the eavesdropper.
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let control = run_bb84(
        params.network.bb84_raw_length,
        &EavesdropPolicy::none(),
        params.network.check_fraction,
        &mut rng,
    )?;
    Ok(network_trial(&net, t.result, &[&t], before)
        .metric("aborted", flag(t.result == TransactionResult::QkdAborted))
        .metric("qber", qber)
        .metric("check_bits", check_bits as f64)
        .metric("control_qber", control.qber)
        .metric("coin_intact", flag(intact)))
}

fn forged_signature(seed: u64, params: &RunParams) -> Result<Trial, ScenarioError> {
    let (mut net, serial) = network(seed, params)?;
    let before = net.mint().coin_count();
    let t = net.run_transaction(REMITTER, RECEIVER, serial)?;
    let intact = holder_verifies(&mut net, serial)?;
    Ok(network_trial(&net, t.result, &[&t], before)
        .metric(
            "rejected",
            flag(t.result == TransactionResult::SignatureRejected),
        )
        .metric("coin_intact", flag(intact)))
}

fn key_recovery(
    seed: u64,
    attack: &AttackConfig,
    attacker: &KeyRecoveryAttacker,
) -> Result<Trial, ScenarioError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut trial = Trial {
        result: String::new(),
        coins_before: 0,
        coins_after: 0,
        transcript: String::new(),
        metrics: BTreeMap::new(),
    };
    let mut recovered = Vec::new();
    for copies in 0..=attack.max_copies {
        let (mut key, issuer) = keygen(&attack.qowf_params(copies)?, 1, 1, &mut rng)?;
        let slot = key.slots()[0];
        let stolen = (0..copies)
            .map(|_| issuer.issue(slot, NodeId(0)))
            .collect::<Result<Vec<_>, _>>()?;
        let guess = attacker.attack(stolen, &mut rng)?;
        // Signing a 0 reveals the string behind slot 0.
        let sig = sign(&mut key, &BitString::from_bits(vec![false]))?;
        let hit = sig.revealed[0][0] == guess;
        trial.transcript += &format!("{copies} {guess} {}\n", sig.revealed[0][0]);
        trial = trial.metric(&format!("success_t{copies}"), flag(hit));
        recovered.push(hit);
    }
    trial.result = match recovered.iter().position(|&h| h) {
        Some(t) => format!("recovered_from_{t}_copies"),
        None => "not_recovered".into(),
    };
    Ok(trial)
}

fn counterfeit_coin(seed: u64, params: &RunParams) -> Result<Trial, ScenarioError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mint = Mint::new();
    let coin = mint.mint_coin(1, params.network.coin_qubits, &mut rng)?;
    let before = mint.coin_count();
    let (a, b) = forge_by_measurement(coin, &mut rng);
    let first = mint.verify_coin(a, &mut rng)?.is_accepted();
    let second = mint.verify_coin(b, &mut rng)?.is_accepted();
    Ok(Trial {
        result: if first {
            "forgery_accepted"
        } else {
            "forgery_rejected"
        }
        .into(),
        coins_before: before,
        coins_after: mint.coin_count(),
        transcript: format!("{first} {second}\n"),
        metrics: BTreeMap::new(),
    }
    .metric("accepted", flag(first))
    .metric("both_accepted", flag(first && second)))
}
