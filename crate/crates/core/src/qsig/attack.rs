use rand::Rng;
use serde::{Deserialize, Serialize};

use super::keys::PublicKeyCopy;
use super::{qowf, QowfParams, QsigError};
use crate::bits::BitString;
use crate::qsim::{Gate, StateVector};

/// Largest key length the exhaustive attacker will enumerate.
pub const MAX_ATTACK_KEY_LENGTH: usize = 16;

/// Basis the attacker measures each stolen copy in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementPlan {
    #[default]
    Computational,
    Hadamard,
    /// Even-numbered copies computational, odd-numbered Hadamard.
    Alternating,
}

impl MeasurementPlan {
    /// Whether copy number `t` is rotated by `H⊗n` before measuring.
    pub fn hadamard_for(self, t: usize) -> bool {
        match self {
            MeasurementPlan::Computational => false,
            MeasurementPlan::Hadamard => true,
            MeasurementPlan::Alternating => t % 2 == 1,
        }
    }
}

/// Maximum-likelihood key guesser that knows the public map `k ↦ |f_k⟩`
/// and enumerates every key.
#[derive(Debug)]
pub struct KeyRecoveryAttacker {
    params: QowfParams,
    plan: MeasurementPlan,
    /// Outcome distributions per key: `[computational, hadamard][outcome]`.
    likelihoods: Vec<[Vec<f64>; 2]>,
}

fn rotated(state: &StateVector, hadamard: bool) -> Result<StateVector, QsigError> {
    let mut s = state.clone();
    if hadamard {
        for q in 0..s.num_qubits() {
            s.apply(&Gate::H(q))?;
        }
    }
    Ok(s)
}

impl KeyRecoveryAttacker {
    pub fn new(params: QowfParams, plan: MeasurementPlan) -> Result<Self, QsigError> {
        params.validate()?;
        if params.key_length > MAX_ATTACK_KEY_LENGTH {
            return Err(QsigError::BadParams(params));
        }
        let all: Vec<usize> = (0..params.output_qubits).collect();
        let likelihoods = (0..1u64 << params.key_length)
            .map(|k| {
                let state = qowf(&BitString::from_u64(k, params.key_length), &params)?;
                Ok([
                    rotated(&state, false)?.outcome_probabilities(&all)?,
                    rotated(&state, true)?.outcome_probabilities(&all)?,
                ])
            })
            .collect::<Result<Vec<_>, QsigError>>()?;
        Ok(Self {
            params,
            plan,
            likelihoods,
        })
    }

    pub fn params(&self) -> &QowfParams {
        &self.params
    }

    /// Measures every copy and returns the most likely key; ties are broken
    /// uniformly at random. With no copies this is a blind guess.
    pub fn attack<R: Rng + ?Sized>(
        &self,
        copies: Vec<PublicKeyCopy>,
        rng: &mut R,
    ) -> Result<BitString, QsigError> {
        let all: Vec<usize> = (0..self.params.output_qubits).collect();
        let mut observations = Vec::with_capacity(copies.len());
        for (t, copy) in copies.into_iter().enumerate() {
            let hadamard = self.plan.hadamard_for(t);
            let mut state = rotated(&copy.state, hadamard)?;
            let outcome = state.measure_in_place(&all, rng)?.to_u64() as usize;
            observations.push((usize::from(hadamard), outcome));
        }

        let scores: Vec<f64> = self
            .likelihoods
            .iter()
            .map(|dist| {
                observations
                    .iter()
                    .map(|&(basis, outcome)| dist[basis][outcome])
                    .product()
            })
            .collect();
        let best = scores.iter().copied().fold(0.0f64, f64::max);
        let ties: Vec<usize> = scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >= best * (1.0 - 1e-9))
            .map(|(k, _)| k)
            .collect();
        let guess = ties[rng.gen_range(0..ties.len())];
        Ok(BitString::from_u64(guess as u64, self.params.key_length))
    }
}
