//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qbitcoin::bits::BitString;
use qbitcoin::protocols::{run_bb84, teleport, EavesdropPolicy, EprPair};
use qbitcoin::qsig::{
    forge_signature, keygen, qowf, sign, verify, CopyWallet, QowfParams, Thresholds, Verdict,
    VerifyMode,
};
use qbitcoin::qsim::{fidelity, StateVector};
use qbitcoin::scenario::{run_scenario, RunConfig, RunParams, Scenario};
use qbitcoin::NodeId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn check(ok: bool, what: String) -> Result<String, String> {
    if ok {
        Ok(what)
    } else {
        Err(what)
    }
}

fn chi_squared_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64)
        .unwrap()
        .cdf(stat)
}

fn within_sigmas(rate: f64, p: f64, trials: usize, k: f64) -> bool {
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    (rate - p).abs() <= k * sigma
}

fn params_with(scenario: Scenario, network: &str) -> RunParams {
    let text = format!(r#"{{"schema_version": 1, "network": {network}}}"#);
    RunParams::resolve(scenario, Some(&RunConfig::parse(&text).unwrap())).unwrap()
}

fn teleportation_exactness() -> Outcome {
    let mut r = rng(1);
    let mut corrections = [0u64; 4];
    let mut worst = 1.0f64;
    for _ in 0..1000 {
        let coin = StateVector::random(1, &mut r).unwrap();
        let out = teleport(coin.clone(), EprPair::new(), &mut r).unwrap();
        worst = worst.min(fidelity(&out.receiver_state, &coin).unwrap());
        corrections[out.correction.index()] += 1;
    }
    let p = chi_squared_p(&corrections);
    check(
        worst >= 1.0 - 1e-9 && p > 0.001,
        format!("min fidelity {worst:.12}, corrections {corrections:?} chi-squared p={p:.4}"),
    )
}

/// Pass probability of a double-spent `n`-qubit coin, from the Bell
/// measurement written out on raw amplitudes.
fn residue_oracle(n: i32) -> f64 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut per_qubit = 0.0;
    for psi in [[1.0, 0.0], [0.0, 1.0], [r, r], [r, -r]] {
        let mut amp = [0.0f64; 8];
        for q0 in 0..2 {
            amp[q0 * 4] = psi[q0] * r;
            amp[q0 * 4 + 3] = psi[q0] * r;
        }
        let mut cnot = [0.0; 8];
        for (i, a) in amp.iter().enumerate() {
            cnot[if i & 4 != 0 { i ^ 2 } else { i }] = *a;
        }
        let mut had = [0.0; 8];
        for (i, a) in cnot.iter().enumerate() {
            let sign = if i & 4 != 0 { -1.0 } else { 1.0 };
            had[i & 3] += r * a;
            had[4 | (i & 3)] += sign * r * a;
        }
        for m0 in 0..2 {
            let p: f64 = (0..4).map(|rest| had[m0 * 4 + rest].powi(2)).sum();
            per_qubit += 0.25 * p * psi[m0].powi(2);
        }
    }
    per_qubit.powi(n)
}

fn double_spend_detection() -> Outcome {
    let report = run_scenario(
        Scenario::DoubleSpend,
        2,
        500,
        &RunParams::resolve(Scenario::DoubleSpend, None).unwrap(),
    )
    .unwrap();
    let rate16 = report.aggregates["second_acceptance_rate"];
    let first16 = report.aggregates["first_acceptance_rate"];
    let oracle = residue_oracle(2);
    let trials2 = 400;
    let small = run_scenario(
        Scenario::DoubleSpend,
        3,
        trials2,
        &params_with(Scenario::DoubleSpend, r#"{"coin_qubits": 2}"#),
    )
    .unwrap();
    let rate2 = small.aggregates["second_acceptance_rate"];
    check(
        first16 == 1.0
            && rate16 <= 0.001
            && (oracle - 0.25).abs() < 1e-12
            && within_sigmas(rate2, oracle, trials2, 3.0),
        format!(
            "n_c=16: second acceptance {rate16} over 500 (first {first16}); \
             n_c=2: oracle {oracle}, empirical {rate2} over {trials2}"
        ),
    )
}

fn eavesdropper_detection() -> Outcome {
    let mut r = rng(3);
    let eve = EavesdropPolicy::intercept_resend(1.0).unwrap();
    let (mut aborts, mut qber_sum, mut min_checks) = (0, 0.0, usize::MAX);
    for _ in 0..1000 {
        let s = run_bb84(1024, &eve, 0.5, &mut r).unwrap();
        aborts += usize::from(s.aborted);
        qber_sum += s.qber;
        min_checks = min_checks.min(s.check_bits());
    }
    let mean_qber = qber_sum / 1000.0;
    let clean_max = (0..1000)
        .map(|_| {
            run_bb84(1024, &EavesdropPolicy::none(), 0.5, &mut r)
                .unwrap()
                .qber
        })
        .fold(0.0f64, f64::max);
    check(
        aborts >= 999
            && (0.20..=0.30).contains(&mean_qber)
            && min_checks >= 200
            && clean_max == 0.0,
        format!(
            "aborted {aborts}/1000, mean QBER {mean_qber:.4}, min check bits {min_checks}, \
             max no-Eve QBER {clean_max}"
        ),
    )
}

fn signature_soundness() -> Outcome {
    let mut r = rng(4);
    let p = QowfParams::default();
    let swap = VerifyMode::SwapTest { reps: 8 };
    let t = Thresholds::default();
    let (mut exact_ok, mut swap_ok, mut forged_rejected) = (0, 0, 0);
    for _ in 0..500 {
        let (mut key, issuer) = keygen(&p, 16, 1, &mut r).unwrap();
        let wallet = |id| {
            let mut w = CopyWallet::new(NodeId(id));
            w.receive_all(issuer.issue_all(NodeId(id)).unwrap());
            w
        };
        let (mut exact_holder, mut swap_holder, mut forged_holder) =
            (wallet(1), wallet(2), wallet(3));
        let msg = BitString::from_bits(vec![r.gen()]);
        let sig = sign(&mut key, &msg).unwrap();
        let v = verify(&sig, &mut exact_holder, &p, VerifyMode::Exact, &t, &mut r).unwrap();
        exact_ok += usize::from(v.verdict() == Verdict::AcceptTransferable);
        let v = verify(&sig, &mut swap_holder, &p, swap, &t, &mut r).unwrap();
        swap_ok += usize::from(v.verdict() == Verdict::AcceptTransferable);
        let forged = forge_signature(key.key_id(), &msg, &p, 16, &mut r);
        let v = verify(&forged, &mut forged_holder, &p, swap, &t, &mut r).unwrap();
        forged_rejected += usize::from(v.verdict() == Verdict::Reject);
    }
    check(
        exact_ok == 500 && swap_ok >= 500 * 999 / 1000 && forged_rejected >= 495,
        format!(
            "genuine exact {exact_ok}/500, genuine swap-test {swap_ok}/500, \
             forged rejected {forged_rejected}/500"
        ),
    )
}

/// Exact success probability of the maximum-likelihood attacker holding
/// `copies` computational-basis samples of `|f_k⟩` for a uniform key.
fn posterior_oracle(params: &QowfParams, copies: u32) -> f64 {
    let keys = 1u64 << params.key_length;
    let all: Vec<usize> = (0..params.output_qubits).collect();
    let dists: Vec<Vec<f64>> = (0..keys)
        .map(|k| {
            qowf(&BitString::from_u64(k, params.key_length), params)
                .unwrap()
                .outcome_probabilities(&all)
                .unwrap()
        })
        .collect();
    let outcomes = 1usize << params.output_qubits;
    let mut total = 0.0;
    for joint in 0..outcomes.pow(copies) {
        let likelihood = |d: &Vec<f64>| {
            (0..copies)
                .map(|t| d[(joint / outcomes.pow(t)) % outcomes])
                .product::<f64>()
        };
        total += dists.iter().map(likelihood).fold(0.0, f64::max);
    }
    total / keys as f64
}

fn copy_budget() -> Outcome {
    let trials = 1000;
    let params = RunParams::resolve(Scenario::KeyRecovery, None).unwrap();
    let report = run_scenario(Scenario::KeyRecovery, 5, trials, &params).unwrap();
    let qowf_params = params.attack.qowf_params(params.attack.max_copies).unwrap();
    let mut lines = Vec::new();
    let mut ok = report.property_held;
    let mut last = 0.0;
    for t in 0..=params.attack.max_copies {
        let rate = report.aggregates[&format!("success_rate_t{t}")];
        let oracle = posterior_oracle(&qowf_params, t as u32);
        ok &= rate >= last && within_sigmas(rate, oracle, trials, 3.0);
        last = rate;
        lines.push(format!("T={t}: {rate:.4} (oracle {oracle:.4})"));
    }
    check(ok, lines.join(", "))
}

/// Exact acceptance of guess-and-prepare forgery for `n` qubits, by
/// enumerating secret states, guessed bases and outcomes.
fn forgery_oracle(n: i32) -> f64 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let states = [[1.0, 0.0], [0.0, 1.0], [r, r], [r, -r]];
    let overlap = |a: [f64; 2], b: [f64; 2]| (a[0] * b[0] + a[1] * b[1]).powi(2);
    let mut per_qubit = 0.0;
    for secret in states {
        for basis in [&states[0..2], &states[2..4]] {
            for seen in basis {
                per_qubit += 0.25 * 0.5 * overlap(secret, *seen) * overlap(secret, *seen);
            }
        }
    }
    per_qubit.powi(n)
}

fn counterfeit_bound() -> Outcome {
    let mut lines = vec![format!("n_c=2 enumeration {}", forgery_oracle(2))];
    let mut ok = (forgery_oracle(2) - 0.5625).abs() < 1e-12;
    for n in [4, 8] {
        let params = params_with(
            Scenario::CounterfeitCoin,
            &format!(r#"{{"coin_qubits": {n}}}"#),
        );
        let report = run_scenario(Scenario::CounterfeitCoin, 6, 2000, &params).unwrap();
        let rate = report.aggregates["acceptance_rate"];
        let expected = 0.75f64.powi(n);
        ok &= (rate - expected).abs() <= 0.05;
        lines.push(format!("n_c={n}: {rate:.4} vs {expected:.4}"));
    }
    check(ok, lines.join(", "))
}

fn conservation_and_determinism(suite_start: Instant) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for s in Scenario::ALL {
        let params = RunParams::resolve(s, None).unwrap();
        let a = run_scenario(s, 77, 20, &params).unwrap();
        let b = run_scenario(s, 77, 20, &params).unwrap();
        let identical = a.to_json() == b.to_json();
        let conserved = a.rows.iter().all(|r| r.coins_before == r.coins_after);
        ok &= identical && conserved;
        if !(identical && conserved) {
            notes.push(format!("{s}: identical={identical} conserved={conserved}"));
        }
    }
    let wall = suite_start.elapsed();
    ok &= wall < Duration::from_secs(300);
    notes.push(format!(
        "{} scenarios byte-identical and conserved, suite wall time {:.1}s",
        Scenario::ALL.len(),
        wall.as_secs_f64()
    ));
    check(ok, notes.join("; "))
}

type Criterion = (&'static str, u64, Box<dyn Fn() -> Outcome>);

fn main() -> ExitCode {
    let start = Instant::now();
    let criteria: [Criterion; 7] = [
        (
            "teleportation exactness",
            5,
            Box::new(teleportation_exactness),
        ),
        (
            "double-spend detection",
            30,
            Box::new(double_spend_detection),
        ),
        (
            "eavesdropper detection",
            10,
            Box::new(eavesdropper_detection),
        ),
        (
            "signature completeness/soundness",
            60,
            Box::new(signature_soundness),
        ),
        ("copy budget", 60, Box::new(copy_budget)),
        ("counterfeit-coin bound", 30, Box::new(counterfeit_bound)),
        (
            "conservation and determinism",
            300,
            Box::new(move || conservation_and_determinism(start)),
        ),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        let in_time = secs < *limit as f64;
        let (status, detail) = match &outcome {
            Ok(d) if in_time => ("PASS", d),
            Ok(d) | Err(d) => ("FAIL", d),
        };
        failed += usize::from(status == "FAIL");
        println!(
            "{status} [{}] {name}: {detail} ({secs:.1}s, limit {limit}s)",
            i + 1
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
