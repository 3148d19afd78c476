use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{agent_decide, trace_rng, ServerState};
use crate::distributions::{EmpiricalDistribution, JobDistribution, JobLaw, ProbeCounts};
use crate::error::{Error, Result};

/// Which `(price, declared state)` pairs to probe and how often.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub pairs: Vec<(f64, u32)>,
    pub per_pair_samples: u64,
    /// Idle for the purchased length after every sale, as a real server
    /// would have to before declaring the next state.
    pub cooldown: bool,
    /// Failure probability used for the reported error bound.
    pub delta: f64,
}

impl ProbePlan {
    /// Every value in the support of `q` against every state.
    pub fn covering(q: &JobDistribution, per_pair_samples: u64, delta: f64, cooldown: bool) -> Self {
        let pairs = q
            .values()
            .iter()
            .flat_map(|&v| (0..=q.max_state()).map(move |s| (v, s)))
            .collect();
        ProbePlan {
            pairs,
            per_pair_samples,
            cooldown,
            delta,
        }
    }

    pub fn total_samples(&self) -> u64 {
        self.pairs.len() as u64 * self.per_pair_samples
    }
}

/// Learns the joint tails of `q` from accept/reject outcomes.
///
/// For each planned pair, `per_pair_samples` fresh jobs see a flat menu at
/// that price with the server claiming that state. With equal prices a
/// buyer picks its own length, so each purchase reveals the true length.
/// Pair `i` draws from stream `i` of `seed`.
pub fn probe_and_learn(q: &JobDistribution, plan: &ProbePlan, seed: u64) -> Result<EmpiricalDistribution> {
    if plan.per_pair_samples == 0 {
        return Err(Error::InvalidParameter("per-pair sample count must be at least 1".into()));
    }
    let values = q.values();
    let max_state = q.max_state();
    let mut index = Vec::with_capacity(plan.pairs.len());
    for &(v, s) in &plan.pairs {
        let vi = values
            .iter()
            .position(|&x| (x - v).abs() <= 1e-12 * x.abs().max(1.0));
        match vi {
            Some(vi) if s <= max_state => index.push((vi, s)),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "probe pair (price {v}, state {s}) is outside the support"
                )))
            }
        }
    }
    for (vi, &v) in values.iter().enumerate() {
        for s in 0..=max_state {
            if !index.contains(&(vi, s)) {
                return Err(Error::MissingProbePair { value: v, state: s });
            }
        }
    }
    let lengths = q.lengths();
    let menu_len = lengths.len();
    // Outcomes per pair: purchase counts by length index, and slots used.
    let outcomes: Vec<(Vec<u64>, u64, u64)> = index
        .par_iter()
        .enumerate()
        .map(|(i, &(vi, s))| {
            let mut rng = trace_rng(seed, i as u64);
            let menu = vec![values[vi]; menu_len];
            let mut bought = vec![0u64; menu_len];
            let mut slots = 0u64;
            for _ in 0..plan.per_pair_samples {
                let job = q.sample(&mut rng);
                let d = agent_decide(&job, &menu, lengths, ServerState(s));
                slots += 1;
                if d.accepted {
                    let li = lengths.binary_search(&d.purchased_length).unwrap();
                    bought[li] += 1;
                    if plan.cooldown {
                        slots += d.purchased_length as u64;
                    }
                }
            }
            (bought, plan.per_pair_samples, slots)
        })
        .collect();
    let mut counts = ProbeCounts::new(lengths.to_vec(), values.to_vec(), max_state);
    let mut elapsed = 0;
    for (&(vi, s), (bought, n, slots)) in index.iter().zip(&outcomes) {
        counts.add(vi, s, *n, bought);
        elapsed += slots;
    }
    EmpiricalDistribution::from_counts(&counts, plan.delta, elapsed)
}
