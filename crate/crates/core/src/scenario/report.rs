use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{trial_seed, RunParams, Scenario};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub result: String,
    /// Coins in the mint registry when the trial started and ended.
    pub coins_before: usize,
    pub coins_after: usize,
    /// SHA-256 of the trial's transcript lines.
    pub transcript_digest: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub seed: u64,
    pub trials: usize,
    pub params: RunParams,
    pub rows: Vec<TrialRow>,
    pub aggregates: BTreeMap<String, f64>,
    pub property_held: bool,
}

fn mean(rows: &[TrialRow], metric: &str) -> f64 {
    let sum: f64 = rows
        .iter()
        .map(|r| r.metrics.get(metric).copied().unwrap_or(f64::NAN))
        .sum();
    sum / rows.len() as f64
}

fn extreme(rows: &[TrialRow], metric: &str, pick: fn(f64, f64) -> f64, start: f64) -> f64 {
    rows.iter()
        .map(|r| r.metrics.get(metric).copied().unwrap_or(f64::NAN))
        .fold(start, pick)
}

/// Aggregates of `rows` and whether the scenario's property held.
fn summarize(
    scenario: Scenario,
    rows: &[TrialRow],
    params: &RunParams,
) -> (BTreeMap<String, f64>, bool) {
    let mut agg = BTreeMap::new();
    let conserved = rows.iter().all(|r| r.coins_before == r.coins_after);
    agg.insert("trials".to_string(), rows.len() as f64);
    agg.insert(
        "conserved_rate".to_string(),
        rows.iter()
            .filter(|r| r.coins_before == r.coins_after)
            .count() as f64
            / rows.len() as f64,
    );
    let mut put = |k: &str, v: f64| {
        agg.insert(k.to_string(), v);
        v
    };
    let held = match scenario {
        Scenario::HonestTransfer => {
            let completed = put("completion_rate", mean(rows, "completed"));
            let verified = put("receiver_verified_rate", mean(rows, "receiver_verified"));
            completed == 1.0 && verified == 1.0
        }
        Scenario::DoubleSpend => {
            let first = put("first_acceptance_rate", mean(rows, "first_accepted"));
            let second = put("second_acceptance_rate", mean(rows, "second_accepted"));
            let holders = put("max_holders", extreme(rows, "holders", f64::max, 0.0));
            first == 1.0 && second <= 0.001 && holders <= 1.0
        }
        Scenario::EavesdropQkd => {
            let aborted = put("abort_rate", mean(rows, "aborted"));
            let qber = put("mean_qber", mean(rows, "qber"));
            let checks = put(
                "min_check_bits",
                extreme(rows, "check_bits", f64::min, f64::INFINITY),
            );
            let control = put(
                "max_control_qber",
                extreme(rows, "control_qber", f64::max, 0.0),
            );
            let intact = put("coin_intact_rate", mean(rows, "coin_intact"));
            aborted >= 0.999
                && (0.20..=0.30).contains(&qber)
                && checks >= 200.0
                && control == 0.0
                && intact == 1.0
        }
        Scenario::ForgedSignature => {
            let rejected = put("reject_rate", mean(rows, "rejected"));
            let intact = put("coin_intact_rate", mean(rows, "coin_intact"));
            rejected >= 0.99 && intact == 1.0
        }
        Scenario::KeyRecovery => {
            let rates: Vec<f64> = (0..=params.attack.max_copies)
                .map(|t| {
                    put(
                        &format!("success_rate_t{t}"),
                        mean(rows, &format!("success_t{t}")),
                    )
                })
                .collect();
            rates.windows(2).all(|w| w[0] <= w[1])
        }
        Scenario::CounterfeitCoin => {
            let rate = put("acceptance_rate", mean(rows, "accepted"));
            let expected = put(
                "expected_rate",
                0.75f64.powi(params.network.coin_qubits as i32),
            );
            put("both_accepted_rate", mean(rows, "both_accepted"));
            (rate - expected).abs() <= 0.05
        }
    };
    (agg, held && conserved)
}

impl RunReport {
    pub(super) fn new(
        scenario: Scenario,
        seed: u64,
        params: RunParams,
        rows: Vec<TrialRow>,
    ) -> Self {
        let (aggregates, property_held) = summarize(scenario, &rows, &params);
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            scenario,
            seed,
            trials: rows.len(),
            params,
            rows,
            aggregates,
            property_held,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

/// Recomputes everything derivable from the rows and lists each
/// disagreement with what the report states.
pub fn verify_report(report: &RunReport) -> Result<(), Vec<String>> {
    let mut diffs = Vec::new();
    if report.schema_version != REPORT_SCHEMA_VERSION {
        diffs.push(format!(
            "schema_version: {} unsupported",
            report.schema_version
        ));
    }
    if report.trials != report.rows.len() {
        diffs.push(format!(
            "trials: stated {}, rows {}",
            report.trials,
            report.rows.len()
        ));
    }
    for (i, row) in report.rows.iter().enumerate() {
        if row.trial != i || row.seed != trial_seed(report.seed, i) {
            diffs.push(format!(
                "rows[{i}]: trial index or seed does not follow the master seed"
            ));
        }
    }
    if report.rows.is_empty() {
        diffs.push("rows: empty".into());
        return Err(diffs);
    }
    let (aggregates, held) = summarize(report.scenario, &report.rows, &report.params);
    for (k, v) in &aggregates {
        match report.aggregates.get(k) {
            Some(stated) if same(*stated, *v) => {}
            Some(stated) => diffs.push(format!("aggregates.{k}: stated {stated}, recomputed {v}")),
            None => diffs.push(format!("aggregates.{k}: missing, recomputed {v}")),
        }
    }
    for k in report
        .aggregates
        .keys()
        .filter(|k| !aggregates.contains_key(*k))
    {
        diffs.push(format!("aggregates.{k}: not a known aggregate"));
    }
    if held != report.property_held {
        diffs.push(format!(
            "property_held: stated {}, recomputed {held}",
            report.property_held
        ));
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(diffs)
    }
}
