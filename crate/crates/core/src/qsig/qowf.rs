use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::QsigError;
use crate::bits::BitString;
use crate::qsim::{Gate, StateVector};

pub const MAX_OUTPUT_QUBITS: usize = 12;

/// Shape of the one-way function `k ↦ |f_k⟩` and its copy budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QowfParams {
    /// Bits per private key string (L).
    pub key_length: usize,
    /// Qubits per public-key state (n).
    pub output_qubits: usize,
    /// Copies of each public-key state that may ever exist (T).
    pub copies: usize,
    /// Rotation layers in the circuit.
    pub circuit_depth: usize,
}

impl QowfParams {
    /// Depth defaults to `2·L/n` layers.
    pub fn new(key_length: usize, output_qubits: usize, copies: usize) -> Result<Self, QsigError> {
        let depth = (2 * key_length)
            .checked_div(output_qubits)
            .unwrap_or(1)
            .max(1);
        Self::with_depth(key_length, output_qubits, copies, depth)
    }

    pub fn with_depth(
        key_length: usize,
        output_qubits: usize,
        copies: usize,
        circuit_depth: usize,
    ) -> Result<Self, QsigError> {
        let params = Self {
            key_length,
            output_qubits,
            copies,
            circuit_depth,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), QsigError> {
        if self.key_length == 0
            || self.output_qubits == 0
            || self.output_qubits > MAX_OUTPUT_QUBITS
            || self.circuit_depth == 0
        {
            return Err(QsigError::BadParams(*self));
        }
        Ok(())
    }

    /// Holevo margin: at most `n·T` bits about a key leak from its copies,
    /// and at least half of the key must stay hidden (`L − nT ≥ L/2`).
    pub fn check_budget(&self) -> Result<(), QsigError> {
        let leaked = self.output_qubits * self.copies;
        if leaked > self.key_length || 2 * (self.key_length - leaked) < self.key_length {
            return Err(QsigError::BudgetViolation {
                key_length: self.key_length,
                output_qubits: self.output_qubits,
                copies: self.copies,
            });
        }
        Ok(())
    }
}

impl Default for QowfParams {
    fn default() -> Self {
        Self::new(128, 8, 8).expect("default parameters are valid")
    }
}

/// Deterministic byte stream keyed by the parameters and the key string.
struct AngleStream {
    seed: Vec<u8>,
    counter: u64,
    block: [u8; 32],
    pos: usize,
}

impl AngleStream {
    fn new(k: &BitString, params: &QowfParams) -> Self {
        let mut seed = b"qowf-angles-v1".to_vec();
        for v in [
            params.key_length,
            params.output_qubits,
            params.circuit_depth,
        ] {
            seed.extend_from_slice(&(v as u64).to_be_bytes());
        }
        seed.extend_from_slice(&k.to_bytes());
        Self {
            seed,
            counter: 0,
            block: [0; 32],
            pos: 32,
        }
    }

    fn next_u16(&mut self) -> u16 {
        if self.pos + 2 > self.block.len() {
            let mut h = Sha256::new();
            h.update(&self.seed);
            h.update(self.counter.to_be_bytes());
            self.block = h.finalize().into();
            self.counter += 1;
            self.pos = 0;
        }
        let v = u16::from_be_bytes([self.block[self.pos], self.block[self.pos + 1]]);
        self.pos += 2;
        v
    }

    fn next_angle(&mut self) -> f64 {
        TAU * f64::from(self.next_u16()) / 65536.0
    }
}

/// Gate list of the circuit preparing `|f_k⟩` from `|0…0⟩`: per layer a
/// keyed `U3` rotation on every qubit followed by a CNOT ladder.
pub fn qowf_circuit(k: &BitString, params: &QowfParams) -> Result<Vec<Gate>, QsigError> {
    params.validate()?;
    if k.len() != params.key_length {
        return Err(QsigError::KeyLength {
            expected: params.key_length,
            got: k.len(),
        });
    }
    let n = params.output_qubits;
    let mut stream = AngleStream::new(k, params);
    let mut gates = Vec::with_capacity(params.circuit_depth * (2 * n));
    for _ in 0..params.circuit_depth {
        for qubit in 0..n {
            gates.push(Gate::Rotation {
                qubit,
                theta: stream.next_angle(),
                phi: stream.next_angle(),
                lambda: stream.next_angle(),
            });
        }
        for q in 0..n.saturating_sub(1) {
            gates.push(Gate::Cnot {
                control: q,
                target: q + 1,
            });
        }
    }
    Ok(gates)
}

/// Evaluates `k ↦ |f_k⟩`.
pub fn qowf(k: &BitString, params: &QowfParams) -> Result<StateVector, QsigError> {
    let gates = qowf_circuit(k, params)?;
    let mut state = StateVector::new(params.output_qubits)?;
    state.apply_all(&gates)?;
    Ok(state)
}
