//! Exact dense statevector simulation.
//!
//! Registers are small (at most [`MAX_QUBITS`] qubits), every amplitude is
//! kept, and all randomness comes from a caller-supplied generator.

mod gate;
mod state;

pub use gate::Gate;
pub use state::{MeasurementOutcome, StateVector};

use rand::Rng;
use thiserror::Error;

use crate::bits::BitString;

pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("register size {0} outside 1..={MAX_QUBITS}")]
    SizeOutOfRange(usize),
    #[error("qubit index {index} out of range for {num_qubits}-qubit register")]
    IndexOutOfRange { index: usize, num_qubits: usize },
    #[error("qubit index {0} used twice")]
    DuplicateIndex(usize),
    #[error("registers differ in size: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("amplitude vector of length {0} is not a valid register")]
    BadDimension(usize),
    #[error("state has squared norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("qubits {q1} and {q2} are not both in |0⟩")]
    NotGroundState { q1: usize, q2: usize },
    #[error("conditioning on an outcome of zero probability")]
    ImpossibleOutcome,
}

/// `|0…0⟩` on `num_qubits` qubits.
pub fn new_register(num_qubits: usize) -> Result<StateVector, QsimError> {
    StateVector::new(num_qubits)
}

/// Entangles `q1` and `q2` into `(|00⟩ + |11⟩)/√2`; both must start in `|0⟩`.
pub fn make_epr_pair(
    mut state: StateVector,
    q1: usize,
    q2: usize,
) -> Result<StateVector, QsimError> {
    let probs = state.outcome_probabilities(&[q1, q2])?;
    if probs[1..].iter().sum::<f64>() > 1e-12 {
        return Err(QsimError::NotGroundState { q1, q2 });
    }
    state.apply(&Gate::H(q1))?;
    state.apply(&Gate::Cnot {
        control: q1,
        target: q2,
    })?;
    Ok(state)
}

/// Bell-basis measurement of `q1`, `q2` as CNOT(q1→q2), H(q1), then a
/// computational measurement.
///
/// The first bit is the phase bit (from `q1`), the second the parity bit
/// (from `q2`): Φ+ → `00`, Ψ+ → `01`, Φ− → `10`, Ψ− → `11`.
pub fn bell_measure<R: Rng + ?Sized>(
    mut state: StateVector,
    q1: usize,
    q2: usize,
    rng: &mut R,
) -> Result<MeasurementOutcome, QsimError> {
    state.apply(&Gate::Cnot {
        control: q1,
        target: q2,
    })?;
    state.apply(&Gate::H(q1))?;
    state.measure(&[q1, q2], rng)
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64, QsimError> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Full swap-test circuit: an ancilla in `|+⟩` controls a swap of every
/// qubit pair of `a ⊗ b`, then is measured in the X basis.
///
/// Returns the ancilla bit; `false` (0) occurs with probability
/// `(1 + |⟨a|b⟩|²)/2`.
pub fn swap_test<R: Rng + ?Sized>(
    a: &StateVector,
    b: &StateVector,
    rng: &mut R,
) -> Result<bool, QsimError> {
    let n = check_pair(a, b)?;
    let mut reg = StateVector::new(1)?.tensor(a)?.tensor(b)?;
    reg.apply(&Gate::H(0))?;
    for q in 0..n {
        reg.apply(&Gate::Cswap {
            control: 0,
            a: 1 + q,
            b: 1 + n + q,
        })?;
    }
    reg.apply(&Gate::H(0))?;
    Ok(reg.measure_in_place(&[0], rng)?.get(0).expect("one bit"))
}

/// Samples the ancilla of the swap-test circuit from its marginal
/// `P(0) = (1 + |⟨a|b⟩|²)/2` without building the `2n + 1` qubit register.
///
/// Used where the joint post-measurement state is discarded anyway.
pub fn swap_test_sampled<R: Rng + ?Sized>(
    a: &StateVector,
    b: &StateVector,
    rng: &mut R,
) -> Result<bool, QsimError> {
    check_pair(a, b)?;
    let p_zero = (1.0 + fidelity(a, b)?) / 2.0;
    Ok(rng.gen::<f64>() >= p_zero)
}

fn check_pair(a: &StateVector, b: &StateVector) -> Result<usize, QsimError> {
    if a.num_qubits() != b.num_qubits() {
        return Err(QsimError::DimensionMismatch {
            left: a.num_qubits(),
            right: b.num_qubits(),
        });
    }
    Ok(a.num_qubits())
}

/// Measures `qubits` and returns only the bits.
pub fn measure_bits<R: Rng + ?Sized>(
    state: &mut StateVector,
    qubits: &[usize],
    rng: &mut R,
) -> Result<BitString, QsimError> {
    state.measure_in_place(qubits, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn new_register_is_ground_state() {
        assert_eq!(new_register(1).unwrap().amplitudes(), &[c(1.0), c(0.0)]);
        assert_eq!(
            new_register(2).unwrap().amplitudes(),
            &[c(1.0), c(0.0), c(0.0), c(0.0)]
        );
        assert_eq!(new_register(21), Err(QsimError::SizeOutOfRange(21)));
        assert_eq!(new_register(0), Err(QsimError::SizeOutOfRange(0)));
    }

    #[test]
    fn hadamard_on_zero() {
        let s = new_register(1).unwrap().apply_gate(&Gate::H(0)).unwrap();
        assert!(close(s.amplitudes(), &[c(R), c(R)], 1e-15));
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩ → |11⟩ with qubit 0 as control.
        let s = StateVector::basis_state(2, 0b10)
            .unwrap()
            .apply_gate(&Gate::Cnot {
                control: 0,
                target: 1,
            })
            .unwrap();
        assert_eq!(s, StateVector::basis_state(2, 0b11).unwrap());
        let s = StateVector::basis_state(2, 0b01)
            .unwrap()
            .apply_gate(&Gate::Cnot {
                control: 0,
                target: 1,
            })
            .unwrap();
        assert_eq!(s, StateVector::basis_state(2, 0b01).unwrap());
    }

    #[test]
    fn x_is_an_involution() {
        let mut r = rng(1);
        let s = StateVector::random(3, &mut r).unwrap();
        let t = s
            .clone()
            .apply_gate(&Gate::X(1))
            .unwrap()
            .apply_gate(&Gate::X(1))
            .unwrap();
        assert!(close(s.amplitudes(), t.amplitudes(), 1e-12));
    }

    #[test]
    fn gate_index_errors() {
        let s = new_register(2).unwrap();
        assert_eq!(
            s.clone().apply_gate(&Gate::H(2)).unwrap_err(),
            QsimError::IndexOutOfRange {
                index: 2,
                num_qubits: 2
            }
        );
        assert!(s.clone().measure(&[3], &mut rng(0)).is_err());
        assert!(s.measure(&[0, 0], &mut rng(0)).is_err());
    }

    #[test]
    fn deterministic_measurement() {
        let one = StateVector::basis_state(1, 1).unwrap();
        let out = one.measure(&[0], &mut rng(3)).unwrap();
        assert_eq!(out.bits.to_string(), "1");
        assert_eq!(out.post_state, StateVector::basis_state(1, 1).unwrap());
    }

    #[test]
    fn born_rule_on_plus_state() {
        let plus = new_register(1).unwrap().apply_gate(&Gate::H(0)).unwrap();
        let mut r = rng(11);
        let trials = 10_000;
        let zeros = (0..trials)
            .filter(|_| {
                let out = plus.clone().measure(&[0], &mut r).unwrap();
                !out.bits.get(0).unwrap()
            })
            .count();
        let freq = zeros as f64 / trials as f64;
        assert!((0.48..=0.52).contains(&freq), "freq {freq}");
    }

    #[test]
    fn epr_pair_amplitudes_and_correlation() {
        let pair = make_epr_pair(new_register(2).unwrap(), 0, 1).unwrap();
        assert!(close(
            pair.amplitudes(),
            &[c(R), c(0.0), c(0.0), c(R)],
            1e-15
        ));

        // Oracle from Φ+ amplitudes: P(00) = P(11) = 1/2, P(01) = P(10) = 0.
        let mut r = rng(5);
        let mut first_ones = 0;
        for _ in 0..2000 {
            let mut s = pair.clone();
            let a = s.measure_in_place(&[0], &mut r).unwrap();
            let b = s.measure_in_place(&[1], &mut r).unwrap();
            assert_eq!(a, b);
            first_ones += usize::from(a.get(0).unwrap());
        }
        let freq = first_ones as f64 / 2000.0;
        // 3σ for p = 1/2, n = 2000 is about 0.034.
        assert!((freq - 0.5).abs() < 0.034, "freq {freq}");
    }

    #[test]
    fn epr_requires_ground_qubits() {
        let s = StateVector::basis_state(2, 0b01).unwrap();
        assert_eq!(
            make_epr_pair(s, 0, 1).unwrap_err(),
            QsimError::NotGroundState { q1: 0, q2: 1 }
        );
        // A third qubit outside the pair may hold anything.
        let s = StateVector::basis_state(3, 0b001).unwrap();
        assert!(make_epr_pair(s, 0, 1).is_ok());
    }

    fn bell_state(which: usize) -> StateVector {
        let amps = match which {
            0 => vec![c(R), c(0.0), c(0.0), c(R)],  // Φ+
            1 => vec![c(0.0), c(R), c(R), c(0.0)],  // Ψ+
            2 => vec![c(R), c(0.0), c(0.0), c(-R)], // Φ−
            _ => vec![c(0.0), c(R), c(-R), c(0.0)], // Ψ−
        };
        StateVector::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn bell_measurement_identifies_each_bell_state() {
        let mut r = rng(9);
        for (which, expected) in ["00", "01", "10", "11"].iter().enumerate() {
            for _ in 0..20 {
                let out = bell_measure(bell_state(which), 0, 1, &mut r).unwrap();
                assert_eq!(out.bits.to_string(), *expected);
            }
        }
    }

    #[test]
    fn fidelity_examples() {
        let zero = new_register(1).unwrap();
        let one = StateVector::basis_state(1, 1).unwrap();
        let plus = zero.clone().apply_gate(&Gate::H(0)).unwrap();
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&zero, &new_register(2).unwrap()).is_err());
    }

    #[test]
    fn swap_test_identical_states_always_pass() {
        let mut r = rng(2);
        let s = StateVector::random(2, &mut r).unwrap();
        for _ in 0..200 {
            assert!(!swap_test(&s, &s, &mut r).unwrap());
            assert!(!swap_test_sampled(&s, &s, &mut r).unwrap());
        }
        assert!(swap_test(&s, &new_register(1).unwrap(), &mut r).is_err());
    }

    fn pass_rate(a: &StateVector, b: &StateVector, trials: usize, sampled: bool, seed: u64) -> f64 {
        let mut r = rng(seed);
        let passes = (0..trials)
            .filter(|_| {
                let bit = if sampled {
                    swap_test_sampled(a, b, &mut r)
                } else {
                    swap_test(a, b, &mut r)
                };
                !bit.unwrap()
            })
            .count();
        passes as f64 / trials as f64
    }

    #[test]
    fn swap_test_law_on_overlap_grid() {
        // Single-qubit states with |⟨0|b⟩|² ∈ {0, 0.25, 0.5, 1}.
        let zero = new_register(1).unwrap();
        let trials = 10_000;
        for overlap in [0.0f64, 0.25, 0.5, 1.0] {
            let b = StateVector::qubit(c(overlap.sqrt()), c((1.0 - overlap).sqrt())).unwrap();
            let expected = (1.0 + overlap) / 2.0;
            let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
            for sampled in [false, true] {
                let rate = pass_rate(&zero, &b, trials, sampled, 17);
                assert!(
                    (rate - expected).abs() <= 3.0 * sigma + 1e-12,
                    "overlap {overlap} sampled {sampled}: {rate} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn swap_test_examples() {
        let zero = new_register(1).unwrap();
        let one = StateVector::basis_state(1, 1).unwrap();
        let plus = zero.clone().apply_gate(&Gate::H(0)).unwrap();
        let r1 = pass_rate(&zero, &one, 10_000, false, 21);
        assert!((r1 - 0.5).abs() < 0.015, "{r1}");
        let r2 = pass_rate(&zero, &plus, 10_000, false, 22);
        assert!((r2 - 0.75).abs() < 0.013, "{r2}");
    }

    #[test]
    fn amplitude_dump_is_pairs() {
        let s = new_register(1).unwrap().apply_gate(&Gate::X(0)).unwrap();
        assert_eq!(s.to_json().to_string(), "[[0.0,0.0],[1.0,0.0]]");
    }

    #[test]
    fn project_out_conditions_remaining_qubits() {
        let pair = make_epr_pair(new_register(2).unwrap(), 0, 1).unwrap();
        let rest = pair
            .project_out(&[0], &BitString::parse("1").unwrap())
            .unwrap();
        assert_eq!(rest, StateVector::basis_state(1, 1).unwrap());
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let q = 0..n;
        prop_oneof![
            q.clone().prop_map(Gate::H),
            q.clone().prop_map(Gate::X),
            q.clone().prop_map(Gate::Y),
            q.clone().prop_map(Gate::Z),
            q.clone().prop_map(Gate::S),
            (q.clone(), -3.2f64..3.2).prop_map(|(qubit, theta)| Gate::Phase { qubit, theta }),
            (q.clone(), -3.2f64..3.2, -3.2f64..3.2, -3.2f64..3.2).prop_map(
                |(qubit, theta, phi, lambda)| Gate::Rotation {
                    qubit,
                    theta,
                    phi,
                    lambda
                }
            ),
            (q.clone(), 1..n).prop_map(move |(a, d)| Gate::Cnot {
                control: a,
                target: (a + d) % n
            }),
            (q.clone(), 1..n).prop_map(move |(a, d)| Gate::Cz {
                control: a,
                target: (a + d) % n
            }),
            (q, 1..n - 1).prop_map(move |(a, d)| Gate::Cswap {
                control: a,
                a: (a + d) % n,
                b: (a + d + 1) % n
            }),
        ]
    }

    proptest! {
        #[test]
        fn gates_preserve_norm_and_invert(seed in any::<u64>(), gates in prop::collection::vec(arb_gate(4), 1..30)) {
            let start = StateVector::random(4, &mut rng(seed)).unwrap();
            let mut s = start.clone();
            for g in &gates {
                s.apply(g).unwrap();
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
            }
            for g in gates.iter().rev() {
                s.apply(&g.inverse()).unwrap();
            }
            prop_assert!(close(s.amplitudes(), start.amplitudes(), 1e-12));
        }

        #[test]
        fn measurement_leaves_normalized_state(seed in any::<u64>(), q in 0usize..3) {
            let mut r = rng(seed);
            let s = StateVector::random(3, &mut r).unwrap();
            let p1 = s.probability_one(q).unwrap();
            let out = s.measure(&[q], &mut r).unwrap();
            prop_assert!((out.post_state.norm_sqr() - 1.0).abs() < 1e-9);
            let bit = out.bits.get(0).unwrap();
            let possible = if bit { p1 > 0.0 } else { p1 < 1.0 };
            prop_assert!(possible);
        }
    }
}
