//! Exact outcome distributions and Monte Carlo runs of a compiled protocol.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::protocol::{AliceOutcome, Protocol, ProtocolError, INCONCLUSIVE};
use crate::states::StateFamily;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error(transparent)]
    Incompatible(#[from] ProtocolError),
    #[error("no state labelled {0:?}")]
    UnknownLabel(String),
    #[error("state index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("trials must be at least 1")]
    NoTrials,
}

/// Probability of one `(k, Alice outcome)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeProbability {
    pub k: usize,
    pub outcome: AliceOutcome,
    pub verdict: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub true_label: String,
    /// `P(k) = |X_l g_k|^2`.
    pub bob: Vec<f64>,
    /// Per `k`, Alice's outcomes in branch order followed by the remainder.
    pub alice: Vec<Vec<OutcomeProbability>>,
}

impl OutcomeDistribution {
    pub fn entries(&self) -> impl Iterator<Item = &OutcomeProbability> {
        self.alice.iter().flatten()
    }

    pub fn total(&self) -> f64 {
        self.entries().map(|e| e.probability).sum()
    }

    pub fn verdict_probabilities(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for e in self.entries() {
            *out.entry(e.verdict.clone()).or_insert(0.0) += e.probability;
        }
        out
    }

    pub fn success(&self) -> f64 {
        self.entries()
            .filter(|e| e.verdict == self.true_label)
            .map(|e| e.probability)
            .fold(0.0, |acc, p| acc + p)
    }

    pub fn inconclusive(&self) -> f64 {
        self.entries()
            .filter(|e| e.verdict == INCONCLUSIVE)
            .map(|e| e.probability)
            .fold(0.0, |acc, p| acc + p)
    }

    pub fn misidentification(&self) -> f64 {
        self.entries()
            .filter(|e| e.verdict != INCONCLUSIVE && e.verdict != self.true_label)
            .map(|e| e.probability)
            .fold(0.0, |acc, p| acc + p)
    }

    /// Mass landing on Alice's remainder outside the error slots; zero up to leakage.
    pub fn remainder_leakage(&self, protocol: &Protocol) -> f64 {
        self.entries()
            .filter(|e| e.outcome == AliceOutcome::Remainder && !protocol.is_error_slot(e.k))
            .map(|e| e.probability)
            .fold(0.0, |acc, p| acc + p)
    }
}

pub fn resolve_label(family: &StateFamily, label: &str) -> Result<usize, SimulationError> {
    family
        .label_index(label)
        .ok_or_else(|| SimulationError::UnknownLabel(label.to_string()))
}

pub fn outcome_distribution(
    protocol: &Protocol,
    family: &StateFamily,
    true_index: usize,
) -> Result<OutcomeDistribution, SimulationError> {
    protocol.check_compatible(family)?;
    if true_index >= family.len() {
        return Err(SimulationError::IndexOutOfRange(true_index));
    }
    let x = &family.operators().matrices[true_index];
    let mut bob = Vec::with_capacity(protocol.dim_b());
    let mut alice = Vec::with_capacity(protocol.dim_b());
    for k in 0..protocol.dim_b() {
        let xi = x * protocol.basis_vector(k);
        let pk = xi.norm_squared();
        let mut row = Vec::new();
        let mut covered = 0.0;
        for (j, b) in protocol.branches(k).iter().enumerate() {
            let p = b.vector.dotc(&xi).norm_sqr();
            covered += p;
            row.push(OutcomeProbability {
                k,
                outcome: AliceOutcome::Branch(j),
                verdict: protocol.decide(k, AliceOutcome::Branch(j)).to_string(),
                probability: p,
            });
        }
        row.push(OutcomeProbability {
            k,
            outcome: AliceOutcome::Remainder,
            verdict: INCONCLUSIVE.to_string(),
            probability: (pk - covered).max(0.0),
        });
        bob.push(pk);
        alice.push(row);
    }
    Ok(OutcomeDistribution {
        true_label: family.labels()[true_index].clone(),
        bob,
        alice,
    })
}

fn inverse_cdf(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let ws: Vec<f64> = weights.collect();
    let total: f64 = ws.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in ws.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    // rounding at the top end: fall back to the last outcome with weight
    ws.iter().rposition(|w| *w > 0.0).unwrap_or(ws.len() - 1)
}

/// One sampled run: Bob's outcome (0-based), Alice's outcome and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub k: usize,
    pub outcome: AliceOutcome,
    pub verdict: String,
}

/// Draws `trials` runs from the exact distribution: Bob's `k` first, then
/// Alice's outcome from the conditional law given `k`.
pub fn sample_trials(dist: &OutcomeDistribution, trials: usize, seed: u64) -> Vec<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let k = inverse_cdf(dist.bob.iter().copied(), rng.random::<f64>());
            let row = &dist.alice[k];
            let j = inverse_cdf(row.iter().map(|e| e.probability), rng.random::<f64>());
            Trial {
                k,
                outcome: row[j].outcome,
                verdict: row[j].verdict.clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationStats {
    pub trials: u64,
    pub true_state: String,
    /// Counts for every label and `INCONCLUSIVE`, zeros included.
    pub verdicts: BTreeMap<String, u64>,
    pub success_rate: f64,
    pub inconclusive_rate: f64,
    pub misid_rate: f64,
    /// Runs that hit Alice's remainder outside the error slots.
    pub remainder_events: u64,
    pub seed: u64,
}

impl SimulationStats {
    pub fn successes(&self) -> u64 {
        self.verdicts[&self.true_state]
    }
    pub fn inconclusives(&self) -> u64 {
        self.verdicts[INCONCLUSIVE]
    }
    pub fn misidentifications(&self) -> u64 {
        self.trials - self.successes() - self.inconclusives()
    }
}

pub fn simulate(
    protocol: &Protocol,
    family: &StateFamily,
    true_index: usize,
    trials: u64,
    seed: u64,
) -> Result<SimulationStats, SimulationError> {
    if trials == 0 {
        return Err(SimulationError::NoTrials);
    }
    let dist = outcome_distribution(protocol, family, true_index)?;
    let mut verdicts: BTreeMap<String, u64> =
        family.labels().iter().map(|l| (l.clone(), 0)).collect();
    verdicts.insert(INCONCLUSIVE.to_string(), 0);
    let mut remainder_events = 0;
    for t in sample_trials(&dist, trials as usize, seed) {
        if t.outcome == AliceOutcome::Remainder && !protocol.is_error_slot(t.k) {
            remainder_events += 1;
        }
        *verdicts
            .get_mut(&t.verdict)
            .expect("verdict is a known label") += 1;
    }
    let n = trials as f64;
    let success = verdicts[&dist.true_label];
    let inconclusive = verdicts[INCONCLUSIVE];
    Ok(SimulationStats {
        trials,
        true_state: dist.true_label.clone(),
        success_rate: success as f64 / n,
        inconclusive_rate: inconclusive as f64 / n,
        misid_rate: (trials - success - inconclusive) as f64 / n,
        verdicts,
        remainder_events,
        seed,
    })
}

/// Half-width of the 3-sigma binomial band at rate `p` over `trials` runs.
pub fn three_sigma(p: f64, trials: u64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}
