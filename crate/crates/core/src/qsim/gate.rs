use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::QsimError;

/// Gate applied to a [`StateVector`](super::StateVector).
///
/// Qubit 0 is the leftmost label in a ket, so `|10⟩` has qubit 0 set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    S(usize),
    /// `diag(1, e^{iθ})`.
    Phase {
        qubit: usize,
        theta: f64,
    },
    /// General single-qubit rotation `U3(θ, φ, λ)`.
    Rotation {
        qubit: usize,
        theta: f64,
        phi: f64,
        lambda: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Cz {
        control: usize,
        target: usize,
    },
    /// Fredkin gate: swaps `a` and `b` when `control` is set.
    Cswap {
        control: usize,
        a: usize,
        b: usize,
    },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::S(q) => vec![q],
            Gate::Phase { qubit, .. } | Gate::Rotation { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } | Gate::Cz { control, target } => vec![control, target],
            Gate::Cswap { control, a, b } => vec![control, a, b],
        }
    }

    /// The gate that undoes this one.
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::S(qubit) => Gate::Phase {
                qubit,
                theta: -FRAC_PI_2,
            },
            Gate::Phase { qubit, theta } => Gate::Phase {
                qubit,
                theta: -theta,
            },
            Gate::Rotation {
                qubit,
                theta,
                phi,
                lambda,
            } => Gate::Rotation {
                qubit,
                theta: -theta,
                phi: -lambda,
                lambda: -phi,
            },
            other => other,
        }
    }

    pub(crate) fn validate(&self, num_qubits: usize) -> Result<(), QsimError> {
        let qubits = self.qubits();
        for (i, &q) in qubits.iter().enumerate() {
            if q >= num_qubits {
                return Err(QsimError::IndexOutOfRange {
                    index: q,
                    num_qubits,
                });
            }
            if qubits[..i].contains(&q) {
                return Err(QsimError::DuplicateIndex(q));
            }
        }
        Ok(())
    }

    /// 2x2 matrix for single-qubit gates, row-major.
    pub(crate) fn matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let m = match *self {
            Gate::H(_) => [
                [Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
                [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)],
            ],
            Gate::X(_) => [[zero, one], [one, zero]],
            Gate::Y(_) => [[zero, -i], [i, zero]],
            Gate::Z(_) => [[one, zero], [zero, -one]],
            Gate::S(_) => [[one, zero], [zero, i]],
            Gate::Phase { theta, .. } => [[one, zero], [zero, Complex64::from_polar(1.0, theta)]],
            Gate::Rotation {
                theta, phi, lambda, ..
            } => {
                let (s, c) = (theta / 2.0).sin_cos();
                [
                    [Complex64::new(c, 0.0), -Complex64::from_polar(s, lambda)],
                    [
                        Complex64::from_polar(s, phi),
                        Complex64::from_polar(c, phi + lambda),
                    ],
                ]
            }
            _ => return None,
        };
        Some(m)
    }
}
