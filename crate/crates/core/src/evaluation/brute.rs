//! Exhaustive search over every menu table, for cross-checking the solver
//! on tiny instances.

use crate::distributions::JobDistribution;
use crate::error::{Error, Result};
use crate::solver::{Horizon, PricingPolicy};

/// Largest number of complete menu tables the search will visit.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    /// Best expected revenue from state 0 at time 0.
    pub value: f64,
    /// A policy attaining it. Cells that cannot be reached from state 0 are
    /// left unpriced.
    pub policy: PricingPolicy,
    /// Number of menu tables evaluated.
    pub evaluated: u64,
}

struct Search<'a> {
    q: &'a JobDistribution,
    discount: f64,
    /// Candidate prices: the value support, then `+inf`.
    candidates: Vec<f64>,
    /// States reachable at each step from state 0.
    reachable: Vec<Vec<usize>>,
    num_states: usize,
    /// Current choice per step, `[reachable state][length]` flattened.
    choice: Vec<Vec<usize>>,
    best_value: f64,
    best_choice: Vec<Vec<usize>>,
    evaluated: u64,
}

impl Search<'_> {
    /// Expected revenue from `(t, s)` onwards for one menu, given the next
    /// step's values, computed from unconditional masses: an accepted job
    /// pays and moves the state, everybody else leaves it to drain.
    fn state_value(&self, s: usize, menu: &[f64], next: &[f64]) -> f64 {
        let lengths = self.q.lengths();
        let reject = next[s.saturating_sub(1)];
        let mut total = 0.0;
        for (li, &l) in lengths.iter().enumerate() {
            let mass = self.q.length_mass(l).unwrap();
            // Strategic purchase: cheapest offer among lengths >= l.
            let mut offer: Option<(usize, f64)> = None;
            for (j, &p) in menu.iter().enumerate().skip(li) {
                if p.is_finite() && offer.is_none_or(|(_, b)| p < b) {
                    offer = Some((j, p));
                }
            }
            let accepted = match offer {
                Some((_, p)) => self.q.joint_tail(l, p, s as u32).unwrap(),
                None => 0.0,
            };
            let gain = match offer {
                Some((j, p)) => {
                    let a = (s + lengths[j] as usize - 1).min(self.num_states - 1);
                    accepted * (p + self.discount * next[a])
                }
                None => 0.0,
            };
            total += gain + (mass - accepted) * self.discount * reject;
        }
        total
    }

    /// Enumerates all assignments of step `t`'s cells, given `U[t+1]`.
    fn layer(&mut self, t: usize, next: &[f64]) {
        let nl = self.q.lengths().len();
        let cells = self.reachable[t].len() * nl;
        let k = self.candidates.len();
        let mut digits = vec![0usize; cells];
        loop {
            self.choice[t].copy_from_slice(&digits);
            let mut u = vec![0.0; self.num_states];
            for (r, &s) in self.reachable[t].iter().enumerate() {
                let menu: Vec<f64> = digits[r * nl..(r + 1) * nl]
                    .iter()
                    .map(|&d| self.candidates[d])
                    .collect();
                u[s] = self.state_value(s, &menu, next);
            }
            if t == 0 {
                self.evaluated += 1;
                if u[0] > self.best_value {
                    self.best_value = u[0];
                    self.best_choice = self.choice.clone();
                }
            } else {
                self.layer(t - 1, &u);
            }
            // Odometer increment, last cell fastest.
            let mut i = cells;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < k {
                    break;
                }
                digits[i] = 0;
            }
        }
    }
}

/// Best expected revenue from state 0 over all menu tables with prices in
/// the value support or `+inf`, under strategic agents.
///
/// Every price assignment to every `(t, s, l)` cell reachable from state 0
/// is evaluated; ties keep the first table found. Errors when more than
/// [`BRUTE_FORCE_LIMIT`] tables would be needed.
pub fn brute_force_optimal(
    q: &JobDistribution,
    horizon: usize,
    discount: f64,
) -> Result<BruteForceResult> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if !(discount > 0.0 && discount <= 1.0) {
        return Err(Error::InvalidParameter(format!("discount {discount} outside (0, 1]")));
    }
    let num_states = q.max_state() as usize + 1;
    let nl = q.lengths().len();
    let mut reachable = vec![vec![0usize]];
    for t in 1..horizon {
        let mut next: Vec<usize> = Vec::new();
        for &s in &reachable[t - 1] {
            next.push(s.saturating_sub(1));
            for &l in q.lengths() {
                next.push((s + l as usize - 1).min(num_states - 1));
            }
        }
        next.sort_unstable();
        next.dedup();
        reachable.push(next);
    }
    let mut candidates = q.values().to_vec();
    candidates.push(f64::INFINITY);
    let cells: usize = reachable.iter().map(|r| r.len() * nl).sum();
    let size = (candidates.len() as f64).powi(cells as i32);
    if size > BRUTE_FORCE_LIMIT as f64 {
        return Err(Error::InstanceTooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut search = Search {
        q,
        discount,
        choice: reachable.iter().map(|r| vec![0; r.len() * nl]).collect(),
        best_choice: Vec::new(),
        candidates,
        reachable,
        num_states,
        best_value: f64::NEG_INFINITY,
        evaluated: 0,
    };
    search.layer(horizon - 1, &vec![0.0; num_states]);

    let mut prices = vec![f64::INFINITY; horizon * num_states * nl];
    for (t, states) in search.reachable.iter().enumerate() {
        for (r, &s) in states.iter().enumerate() {
            for li in 0..nl {
                let d = search.best_choice[t][r * nl + li];
                prices[(t * num_states + s) * nl + li] = search.candidates[d];
            }
        }
    }
    let policy = PricingPolicy::new(
        Horizon::Finite(horizon),
        discount,
        q.lengths().to_vec(),
        num_states,
        q.values().to_vec(),
        prices,
    )?;
    Ok(BruteForceResult {
        value: search.best_value,
        policy,
        evaluated: search.evaluated,
    })
}
