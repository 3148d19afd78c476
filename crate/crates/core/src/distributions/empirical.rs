//! Estimates of the joint tails built from censored probe outcomes.

use serde::{Deserialize, Serialize};

use super::TailSource;
use crate::error::{Error, Result};

/// Raw tallies from probing: for each probed `(price, state)` pair, how many
/// jobs were shown the flat menu and how many bought each length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCounts {
    lengths: Vec<u32>,
    values: Vec<f64>,
    max_state: u32,
    /// `[value][state]`
    samples: Vec<u64>,
    /// `[length][value][state]`
    purchases: Vec<u64>,
}

impl ProbeCounts {
    pub fn new(lengths: Vec<u32>, values: Vec<f64>, max_state: u32) -> Self {
        let cells = values.len() * (max_state as usize + 1);
        ProbeCounts {
            samples: vec![0; cells],
            purchases: vec![0; lengths.len() * cells],
            lengths,
            values,
            max_state,
        }
    }

    fn cell(&self, vi: usize, state: u32) -> usize {
        vi * (self.max_state as usize + 1) + state as usize
    }

    /// Records one probe at `(values[vi], state)`; `bought` is the index of
    /// the purchased length, if any.
    pub fn record(&mut self, vi: usize, state: u32, bought: Option<usize>) {
        let c = self.cell(vi, state);
        self.samples[c] += 1;
        if let Some(li) = bought {
            let cells = self.samples.len();
            self.purchases[li * cells + c] += 1;
        }
    }

    /// Adds `samples` probes at `(values[vi], state)` of which `bought[li]`
    /// purchased length `lengths[li]`.
    pub fn add(&mut self, vi: usize, state: u32, samples: u64, bought: &[u64]) {
        let c = self.cell(vi, state);
        self.samples[c] += samples;
        let cells = self.samples.len();
        for (li, &b) in bought.iter().enumerate() {
            self.purchases[li * cells + c] += b;
        }
    }

    pub fn samples(&self, vi: usize, state: u32) -> u64 {
        self.samples[self.cell(vi, state)]
    }
}

/// `Q-hat`: estimated `P[L = l, V >= v, D >= s]` on the probed grid of
/// values and every state `0..=max_state`.
///
/// Raw frequencies come from independent probe batches, so they need not be
/// monotone. The published estimate is the running minimum over smaller
/// prices and states, which is non-increasing in both and never moves
/// further from a non-increasing truth than the raw frequency was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    lengths: Vec<u32>,
    values: Vec<f64>,
    max_state: u32,
    raw: Vec<f64>,
    estimates: Vec<f64>,
    samples: Vec<u64>,
    delta: f64,
    epsilon_bound: f64,
    elapsed_slots: u64,
}

/// Uniform error that holds with probability `1 - delta` for `n` probes per
/// pair: `sqrt(3 ln(2K/delta) / (2n))`.
pub fn hoeffding_epsilon(kappa: usize, delta: f64, n: u64) -> f64 {
    (3.0 * (2.0 * kappa as f64 / delta).ln() / (2.0 * n as f64)).sqrt()
}

impl EmpiricalDistribution {
    /// Turns probe tallies into estimates. Every `(value, state)` pair must
    /// have been probed at least once.
    pub fn from_counts(counts: &ProbeCounts, delta: f64, elapsed_slots: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 1)")));
        }
        let ns = counts.max_state as usize + 1;
        let nv = counts.values.len();
        let cells = nv * ns;
        for vi in 0..nv {
            for s in 0..ns {
                if counts.samples[vi * ns + s] == 0 {
                    return Err(Error::MissingProbePair {
                        value: counts.values[vi],
                        state: s as u32,
                    });
                }
            }
        }
        let mut raw = vec![0.0; counts.lengths.len() * cells];
        for li in 0..counts.lengths.len() {
            for c in 0..cells {
                raw[li * cells + c] =
                    counts.purchases[li * cells + c] as f64 / counts.samples[c] as f64;
            }
        }
        let mut estimates = raw.clone();
        for li in 0..counts.lengths.len() {
            let block = &mut estimates[li * cells..(li + 1) * cells];
            for vi in 0..nv {
                for s in 0..ns {
                    let mut x = block[vi * ns + s].clamp(0.0, 1.0);
                    if vi > 0 {
                        x = x.min(block[(vi - 1) * ns + s]);
                    }
                    if s > 0 {
                        x = x.min(block[vi * ns + s - 1]);
                    }
                    block[vi * ns + s] = x;
                }
            }
        }
        let n = counts.samples.iter().copied().min().unwrap_or(0);
        let kappa = (counts.max_state as usize).max(nv);
        Ok(EmpiricalDistribution {
            lengths: counts.lengths.clone(),
            values: counts.values.clone(),
            max_state: counts.max_state,
            raw,
            estimates,
            samples: counts.samples.clone(),
            delta,
            epsilon_bound: hoeffding_epsilon(kappa, delta, n),
            elapsed_slots,
        })
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_state(&self) -> u32 {
        self.max_state
    }

    /// `max(max_state, |values|)`.
    pub fn kappa(&self) -> usize {
        (self.max_state as usize).max(self.values.len())
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// High-probability bound on `|Q - Q-hat|` at the smallest per-pair count.
    pub fn epsilon_bound(&self) -> f64 {
        self.epsilon_bound
    }

    /// Time slots spent probing, including cooldown idling.
    pub fn elapsed_slots(&self) -> u64 {
        self.elapsed_slots
    }

    /// Smallest number of probes spent on any pair.
    pub fn min_samples(&self) -> u64 {
        self.samples.iter().copied().min().unwrap_or(0)
    }

    pub fn total_samples(&self) -> u64 {
        self.samples.iter().sum()
    }

    fn value_index(&self, price: f64) -> Option<usize> {
        self.values
            .iter()
            .position(|&v| (v - price).abs() <= 1e-12 * v.abs().max(1.0))
    }

    fn index(&self, length: u32, price: f64, state: u32) -> Result<usize> {
        let li = self
            .lengths
            .binary_search(&length)
            .map_err(|_| Error::LengthOutsideSupport(length))?;
        let vi = self.value_index(price);
        match vi {
            Some(vi) if state <= self.max_state => {
                let ns = self.max_state as usize + 1;
                Ok((li * self.values.len() + vi) * ns + state as usize)
            }
            _ => Err(Error::NotEstimated {
                length,
                value: price,
                state,
            }),
        }
    }

    /// Monotone estimate of `P[L = length, V >= price, D >= state]`.
    pub fn estimate(&self, length: u32, price: f64, state: u32) -> Result<f64> {
        self.index(length, price, state).map(|i| self.estimates[i])
    }

    /// The unprojected empirical frequency.
    pub fn raw_estimate(&self, length: u32, price: f64, state: u32) -> Result<f64> {
        self.index(length, price, state).map(|i| self.raw[i])
    }

    /// Number of probes at `(price, state)`.
    pub fn sample_count(&self, price: f64, state: u32) -> Option<u64> {
        let vi = self.value_index(price)?;
        (state <= self.max_state).then(|| self.samples[vi * (self.max_state as usize + 1) + state as usize])
    }

    /// Estimated `P[L = length]`, read off at the smallest value and state 0.
    pub fn length_mass(&self, length: u32) -> Result<f64> {
        let v0 = *self.values.first().ok_or(Error::EmptyValueSupport)?;
        self.estimate(length, v0, 0)
    }
}

impl TailSource for EmpiricalDistribution {
    fn tail_lengths(&self) -> &[u32] {
        &self.lengths
    }

    fn value_grid(&self) -> Vec<f64> {
        self.values.clone()
    }

    fn max_tail_state(&self) -> u32 {
        self.max_state
    }

    fn exhaustive(&self) -> bool {
        false
    }

    fn tail(&self, length: u32, price: f64, state: u32) -> Result<f64> {
        self.estimate(length, price, state)
    }
}
