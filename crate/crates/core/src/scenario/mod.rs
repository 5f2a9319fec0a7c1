//! Built-in scenarios, run as batches of independently seeded trials.
//!
//! Trial `i` of a run with master seed `s` gets its own seed drawn from
//! stream `i` of a ChaCha generator keyed by `s`, so trials can run on any
//! number of threads and still produce the same report.

mod report;
mod trials;

pub use report::{verify_report, RunReport, TrialRow, REPORT_SCHEMA_VERSION};

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::coin::CoinError;
use crate::network::{AdversaryScript, NetworkError, ScenarioConfig};
use crate::protocols::{EavesdropPolicy, ProtocolError};
use crate::qsig::{MeasurementPlan, QowfParams, QsigError, MAX_ATTACK_KEY_LENGTH};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Qsig(#[from] QsigError),
    #[error(transparent)]
    Coin(#[from] CoinError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    HonestTransfer,
    DoubleSpend,
    EavesdropQkd,
    ForgedSignature,
    KeyRecovery,
    CounterfeitCoin,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::HonestTransfer,
        Scenario::DoubleSpend,
        Scenario::EavesdropQkd,
        Scenario::ForgedSignature,
        Scenario::KeyRecovery,
        Scenario::CounterfeitCoin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::HonestTransfer => "honest_transfer",
            Scenario::DoubleSpend => "double_spend",
            Scenario::EavesdropQkd => "eavesdrop_qkd",
            Scenario::ForgedSignature => "forged_signature",
            Scenario::KeyRecovery => "key_recovery",
            Scenario::CounterfeitCoin => "counterfeit_coin",
        }
    }

    /// The property a run must exhibit to count as held.
    pub fn property(self) -> &'static str {
        match self {
            Scenario::HonestTransfer => "every transfer completes and the receiver's coin verifies",
            Scenario::DoubleSpend => "second-receiver acceptance at most 0.001",
            Scenario::EavesdropQkd => "intercept-resend detected in at least 99.9% of runs",
            Scenario::ForgedSignature => "forged signatures rejected in at least 99% of runs",
            Scenario::KeyRecovery => "attacker success nondecreasing in the number of copies",
            Scenario::CounterfeitCoin => "forgery acceptance within 0.05 of (3/4)^n",
        }
    }

    /// Network settings before any config overrides.
    pub fn base_config(self) -> ScenarioConfig {
        let base = ScenarioConfig::default();
        match self {
            Scenario::EavesdropQkd => ScenarioConfig {
                eavesdrop: EavesdropPolicy::intercept_resend(1.0).expect("valid"),
                ..base
            },
            Scenario::ForgedSignature => ScenarioConfig {
                adversary: AdversaryScript::ForgedSignature,
                ..base
            },
            Scenario::DoubleSpend => ScenarioConfig {
                adversary: AdversaryScript::DoubleSpend,
                ..base
            },
            _ => base,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| ScenarioError::UnknownScenario(s.to_string()))
    }
}

/// Settings of the exhaustive key-recovery experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub key_length: usize,
    pub output_qubits: usize,
    /// Copies handed to the attacker range over `0..=max_copies`.
    pub max_copies: usize,
    pub plan: MeasurementPlan,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            key_length: 8,
            output_qubits: 2,
            max_copies: 2,
            plan: MeasurementPlan::Computational,
        }
    }
}

impl AttackConfig {
    pub fn qowf_params(&self, copies: usize) -> Result<QowfParams, QsigError> {
        QowfParams::new(self.key_length, self.output_qubits, copies)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.key_length > MAX_ATTACK_KEY_LENGTH {
            return Err(ScenarioError::Config(format!(
                "attack.key_length above {MAX_ATTACK_KEY_LENGTH}"
            )));
        }
        self.qowf_params(self.max_copies)
            .and_then(|p| p.check_budget())
            .map_err(|e| ScenarioError::Config(e.to_string()))
    }
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Field-by-field overrides of the scenario's network settings.
    #[serde(default)]
    pub network: Map<String, Value>,
    #[serde(default)]
    pub attack: Option<AttackConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        if config.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ScenarioError::Config(format!(
                "unsupported schema_version {}",
                config.schema_version
            )));
        }
        if config.network.contains_key("seed") {
            return Err(ScenarioError::Config(
                "network.seed is derived per trial; use --seed".into(),
            ));
        }
        Ok(config)
    }
}

/// The complete parameter set a run used; echoed into its report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    pub network: ScenarioConfig,
    pub attack: AttackConfig,
}

impl RunParams {
    pub fn resolve(scenario: Scenario, config: Option<&RunConfig>) -> Result<Self, ScenarioError> {
        let mut network = serde_json::to_value(scenario.base_config()).expect("configs serialize");
        let mut attack = AttackConfig::default();
        if let Some(cfg) = config {
            let fields = network.as_object_mut().expect("configs are objects");
            for (k, v) in &cfg.network {
                fields.insert(k.clone(), v.clone());
            }
            if let Some(a) = cfg.attack {
                attack = a;
            }
        }
        let network: ScenarioConfig =
            serde_json::from_value(network).map_err(|e| ScenarioError::Config(e.to_string()))?;
        network
            .validate()
            .map_err(|e| ScenarioError::Config(e.to_string()))?;
        attack.validate()?;
        Ok(Self { network, attack })
    }
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Runs `trials` independent trials of `scenario` and summarizes them.
pub fn run_scenario(
    scenario: Scenario,
    seed: u64,
    trials: usize,
    params: &RunParams,
) -> Result<RunReport, ScenarioError> {
    if trials == 0 {
        return Err(ScenarioError::Config(
            "at least one trial is required".into(),
        ));
    }
    let attacker = match scenario {
        Scenario::KeyRecovery => Some(trials::attacker(&params.attack)?),
        _ => None,
    };
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| trials::run_trial(scenario, i, trial_seed(seed, i), params, attacker.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut echoed = params.clone();
    echoed.network.seed = seed;
    Ok(RunReport::new(scenario, seed, echoed, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(s: Scenario) -> RunParams {
        RunParams::resolve(s, None).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
            assert_eq!(serde_json::to_value(s).unwrap(), s.name());
        }
        assert_eq!(
            "nope".parse::<Scenario>().unwrap_err(),
            ScenarioError::UnknownScenario("nope".into())
        );
    }

    #[test]
    fn config_parsing_is_fail_closed() {
        assert!(RunConfig::parse(r#"{"schema_version": 1}"#).is_ok());
        for bad in [
            r#"{"schema_version": 2}"#,
            r#"{"schema_version": 1, "extra": true}"#,
            r#"{"schema_version": 1, "network": {"seed": 3}}"#,
            r#"{"network": {}}"#,
            "not json",
        ] {
            assert!(
                matches!(RunConfig::parse(bad), Err(ScenarioError::Config(_))),
                "{bad}"
            );
        }
        let unknown =
            RunConfig::parse(r#"{"schema_version": 1, "network": {"quorom": 3}}"#).unwrap();
        assert!(RunParams::resolve(Scenario::HonestTransfer, Some(&unknown)).is_err());
        let over_budget =
            RunConfig::parse(r#"{"schema_version": 1, "attack": {"max_copies": 3}}"#).unwrap();
        assert!(RunParams::resolve(Scenario::KeyRecovery, Some(&over_budget)).is_err());
    }

    #[test]
    fn overrides_keep_scenario_defaults() {
        let cfg =
            RunConfig::parse(r#"{"schema_version": 1, "network": {"coin_qubits": 4}}"#).unwrap();
        let p = RunParams::resolve(Scenario::EavesdropQkd, Some(&cfg)).unwrap();
        assert_eq!(p.network.coin_qubits, 4);
        assert_eq!(
            p.network.eavesdrop,
            EavesdropPolicy::intercept_resend(1.0).unwrap()
        );
    }

    #[test]
    fn every_scenario_is_deterministic() {
        for s in Scenario::ALL {
            let a = run_scenario(s, 11, 3, &params(s)).unwrap();
            let b = run_scenario(s, 11, 3, &params(s)).unwrap();
            assert_eq!(a.to_json(), b.to_json(), "{s}");
            assert!(
                a.rows.iter().all(|r| r.coins_before == r.coins_after),
                "{s}"
            );
            assert_eq!(verify_report(&a), Ok(()));
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let s = Scenario::DoubleSpend;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_scenario(s, 5, 6, &params(s)).unwrap().to_json())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn tampered_report_fails_verification() {
        let s = Scenario::HonestTransfer;
        let mut report = run_scenario(s, 7, 4, &params(s)).unwrap();
        assert!(report.property_held);
        let json = report.to_json();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        report.aggregates.insert("completion_rate".into(), 0.5);
        let diffs = verify_report(&report).unwrap_err();
        assert_eq!(diffs.len(), 1, "{diffs:?}");
        report.aggregates.insert("completion_rate".into(), 1.0);
        report.rows[0].seed ^= 1;
        assert!(verify_report(&report).is_err());
    }

    #[test]
    fn zero_trials_rejected() {
        let s = Scenario::CounterfeitCoin;
        assert!(matches!(
            run_scenario(s, 0, 0, &params(s)),
            Err(ScenarioError::Config(_))
        ));
    }
}
