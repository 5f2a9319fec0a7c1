use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::{Gate, QsimError, MAX_QUBITS};
use crate::bits::BitString;

const NORM_TOLERANCE: f64 = 1e-9;

/// Dense, normalized amplitude vector over an n-qubit register.
///
/// Basis index bit `n - 1 - q` holds qubit `q`, so qubit 0 is the leftmost
/// symbol of a ket label.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Result of a computational-basis measurement.
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    /// One bit per measured qubit, in the order the qubits were requested.
    pub bits: BitString,
    pub post_state: StateVector,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn new(num_qubits: usize) -> Result<Self, QsimError> {
        Self::basis_state(num_qubits, 0)
    }

    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self, QsimError> {
        check_size(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QsimError::IndexOutOfRange { index, num_qubits });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps caller-supplied amplitudes; they must already be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QsimError> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(QsimError::BadDimension(dim));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        check_size(num_qubits)?;
        let state = Self {
            num_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Single-qubit state `α|0⟩ + β|1⟩`, normalized on the way in.
    pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<Self, QsimError> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm < 1e-15 {
            return Err(QsimError::NotNormalized(0.0));
        }
        Self::from_amplitudes(vec![alpha / norm, beta / norm])
    }

    /// Haar-random pure state drawn from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self, QsimError> {
        check_size(num_qubits)?;
        let dim = 1usize << num_qubits;
        let mut amplitudes: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect();
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    #[inline]
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    fn check_index(&self, qubit: usize) -> Result<(), QsimError> {
        if qubit >= self.num_qubits {
            return Err(QsimError::IndexOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn check_distinct(&self, qubits: &[usize]) -> Result<(), QsimError> {
        for (i, &q) in qubits.iter().enumerate() {
            self.check_index(q)?;
            if qubits[..i].contains(&q) {
                return Err(QsimError::DuplicateIndex(q));
            }
        }
        Ok(())
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<(), QsimError> {
        gate.validate(self.num_qubits)?;
        if let Some(m) = gate.matrix() {
            let qubit = gate.qubits()[0];
            self.apply_single(qubit, &m, None);
            return Ok(());
        }
        match *gate {
            Gate::Cnot { control, target } => {
                let x = Gate::X(target).matrix().expect("single-qubit");
                self.apply_single(target, &x, Some(self.mask(control)));
            }
            Gate::Cz { control, target } => {
                let (c, t) = (self.mask(control), self.mask(target));
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if i & c != 0 && i & t != 0 {
                        *amp = -*amp;
                    }
                }
            }
            Gate::Cswap { control, a, b } => {
                let (c, ma, mb) = (self.mask(control), self.mask(a), self.mask(b));
                for i in 0..self.amplitudes.len() {
                    // Visit each swapped pair once, from the side with `a` set.
                    if i & c != 0 && i & ma != 0 && i & mb == 0 {
                        let j = (i & !ma) | mb;
                        self.amplitudes.swap(i, j);
                    }
                }
            }
            _ => unreachable!("single-qubit gates handled above"),
        }
        Ok(())
    }

    /// Consuming form of [`apply`](Self::apply).
    pub fn apply_gate(mut self, gate: &Gate) -> Result<Self, QsimError> {
        self.apply(gate)?;
        Ok(self)
    }

    pub fn apply_all<'a, I>(&mut self, gates: I) -> Result<(), QsimError>
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    fn apply_single(&mut self, qubit: usize, m: &[[Complex64; 2]; 2], control: Option<usize>) {
        let mask = self.mask(qubit);
        let control = control.unwrap_or(0);
        let [[m00, m01], [m10, m11]] = *m;
        for (n, block) in self.amplitudes.chunks_exact_mut(2 * mask).enumerate() {
            let start = n * 2 * mask;
            let (lo, hi) = block.split_at_mut(mask);
            for (offset, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (start + offset) & control != control {
                    continue;
                }
                let (x, y) = (*a, *b);
                *a = m00 * x + m01 * y;
                *b = m10 * x + m11 * y;
            }
        }
    }

    /// Probability that `qubit` reads 1.
    pub fn probability_one(&self, qubit: usize) -> Result<f64, QsimError> {
        self.check_index(qubit)?;
        let mask = self.mask(qubit);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Joint outcome distribution of `qubits`, indexed big-endian in request order.
    pub fn outcome_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>, QsimError> {
        self.check_distinct(qubits)?;
        let masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        let mut probs = vec![0.0; 1 << qubits.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            probs[gather(i, &masks)] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Born-rule measurement of `qubits` in the computational basis; the
    /// state collapses and is renormalized.
    pub fn measure_in_place<R: Rng + ?Sized>(
        &mut self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<BitString, QsimError> {
        let probs = self.outcome_probabilities(qubits)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut outcome = probs.len() - 1;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = k;
                break;
            }
        }
        // Guard against rounding picking a zero-probability tail outcome.
        while probs[outcome] <= 0.0 && outcome > 0 {
            outcome -= 1;
        }
        let masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        let scale = 1.0 / probs[outcome].sqrt();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if gather(i, &masks) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(BitString::from_u64(outcome as u64, qubits.len()))
    }

    /// Consuming measurement returning the outcome and the collapsed state.
    pub fn measure<R: Rng + ?Sized>(
        mut self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<MeasurementOutcome, QsimError> {
        let bits = self.measure_in_place(qubits, rng)?;
        Ok(MeasurementOutcome {
            bits,
            post_state: self,
        })
    }

    /// Register holding `self` on the leading qubits and `other` on the rest.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, QsimError> {
        let num_qubits = self.num_qubits + other.num_qubits;
        check_size(num_qubits)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64, QsimError> {
        if self.num_qubits != other.num_qubits {
            return Err(QsimError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Conditions on `qubits` reading `bits` and returns the state of the
    /// remaining qubits, in their original order.
    pub fn project_out(
        &self,
        qubits: &[usize],
        bits: &BitString,
    ) -> Result<StateVector, QsimError> {
        self.check_distinct(qubits)?;
        if bits.len() != qubits.len() {
            return Err(QsimError::BadDimension(bits.len()));
        }
        let kept: Vec<usize> = (0..self.num_qubits)
            .filter(|q| !qubits.contains(q))
            .collect();
        if kept.is_empty() {
            return Err(QsimError::BadDimension(0));
        }
        let fixed_masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        let kept_masks: Vec<usize> = kept.iter().map(|&q| self.mask(q)).collect();
        let target = bits.to_u64() as usize;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << kept.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if gather(i, &fixed_masks) == target {
                amplitudes[gather(i, &kept_masks)] = *a;
            }
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if norm < 1e-15 {
            return Err(QsimError::ImpossibleOutcome);
        }
        let scale = 1.0 / norm.sqrt();
        for a in &mut amplitudes {
            *a *= scale;
        }
        Ok(StateVector {
            num_qubits: kept.len(),
            amplitudes,
        })
    }

    /// Debug dump: JSON array of `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Pair(f64, f64);
        let pairs: Vec<Pair> = self.amplitudes.iter().map(|a| Pair(a.re, a.im)).collect();
        serde_json::to_value(pairs).expect("amplitudes serialize")
    }
}

fn check_size(num_qubits: usize) -> Result<(), QsimError> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(QsimError::SizeOutOfRange(num_qubits));
    }
    Ok(())
}

/// Packs the bits of `index` selected by `masks` into a big-endian integer.
#[inline]
fn gather(index: usize, masks: &[usize]) -> usize {
    masks
        .iter()
        .fold(0, |acc, &m| (acc << 1) | usize::from(index & m != 0))
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
