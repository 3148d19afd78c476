//! Backward induction over `(time, server state, job length)`.
//!
//! At step `t`, in state `s`, facing a job of length `l`, the seller picks a
//! single price `mu` (or declines with `+inf`) to maximize
//!
//! ```text
//! p(mu) * (mu + g * U[t+1][accept] - g * U[t+1][reject]) + g * U[t+1][reject]
//! ```
//!
//! where `p(mu) = P[V >= mu, D >= s | L = l]`, `accept = min(s + l - 1, S)`
//! and `reject = max(s - 1, 0)`. `U[t][s]` is the length-weighted sum of the
//! per-length optima. Ties go to the largest price, except that a length
//! which sells nothing is given the cheapest price at which it still sells
//! nothing, raised to the shorter length's price if needed.

mod model;
mod policy;

pub use model::{AcceptanceTable, GridModel, GridSpec, PriceModel};
pub use policy::{
    check_monotone, cheapest_offer, project_monotone, Horizon, MonotoneReport, PolicyFile,
    PricingPolicy, ValueTables,
};

use crate::distributions::ContinuousValueDistribution;
use crate::error::{Error, Result};

/// A policy together with the value tables it was derived from.
#[derive(Debug, Clone)]
pub struct Solution {
    pub policy: PricingPolicy,
    pub values: ValueTables,
    /// Number of backward steps actually run; for the infinite horizon this
    /// is the truncation horizon.
    pub horizon: usize,
}

/// Expected value of posting a price accepted with probability
/// `accept_prob`, given discounted continuation values after acceptance and
/// rejection.
#[inline]
pub fn maximand(accept_prob: f64, price: f64, cont_accept: f64, cont_reject: f64) -> f64 {
    accept_prob * (price + cont_accept - cont_reject) + cont_reject
}

#[inline]
fn beats(candidate: f64, best: f64) -> bool {
    candidate > best + 1e-12 * best.abs().max(1.0)
}

/// Next state after a length-`length` purchase in state `s`.
#[inline]
pub fn accept_state(s: usize, length: u32, max_state: usize) -> usize {
    (s + length as usize - 1).min(max_state)
}

/// Next state after a rejection in state `s`.
#[inline]
pub fn reject_state(s: usize) -> usize {
    s.saturating_sub(1)
}

fn check_discount(discount: f64) -> Result<()> {
    if discount > 0.0 && discount <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("discount {discount} outside (0, 1]")))
    }
}

/// Rewrites the "no sale" entries of one menu without changing its value.
///
/// A length that sells nothing here, either because it is not offered or
/// because nobody of that length accepts its price, may carry any price at
/// which its acceptance mass is zero. Among those, take the smallest that
/// keeps the menu non-decreasing so far; this keeps menus monotone when a
/// shorter length sells nothing at every price.
fn no_sale_floor(table: &AcceptanceTable, s: usize, menu: &mut [f64]) {
    let mut previous = f64::NEG_INFINITY;
    for (li, price) in menu.iter_mut().enumerate() {
        let idx = table.prices.iter().position(|p| p == price);
        let sells = idx.is_some_and(|pi| table.joint(li, pi, s) > 0.0);
        if !sells {
            let floor = (0..table.prices.len())
                .find(|&pi| table.joint(li, pi, s) <= 0.0)
                .map_or(f64::INFINITY, |pi| table.prices[pi]);
            *price = floor.max(previous);
        }
        previous = *price;
    }
}

/// Runs the recurrence for `horizon` steps; returns the dense `[t][s][l]`
/// prices and the full value tables.
fn backward(table: &AcceptanceTable, horizon: usize, discount: f64) -> (Vec<f64>, ValueTables) {
    let ns = table.num_states();
    let nl = table.lengths.len();
    let np = table.prices.len();
    let max_state = ns - 1;
    let mut values = ValueTables::zeros(horizon, ns, nl);
    let mut prices = vec![f64::INFINITY; horizon * ns * nl];
    for t in (0..horizon).rev() {
        let next: Vec<f64> = values.u_row(t + 1).iter().map(|u| discount * u).collect();
        let mut row = vec![0.0; ns];
        for s in 0..ns {
            let cont_reject = next[reject_state(s)];
            let mut total = 0.0;
            for li in 0..nl {
                let m = table.length_mass[li];
                let cell = (t * ns + s) * nl + li;
                let mut best = (f64::INFINITY, cont_reject);
                if m > 0.0 {
                    let a = accept_state(s, table.lengths[li], max_state);
                    let cont_accept = next[a];
                    for pi in (0..np).rev() {
                        let mu = table.prices[pi];
                        let q = table.joint(li, pi, s) / m;
                        let v = maximand(q, mu, cont_accept, cont_reject);
                        if beats(v, best.1) {
                            best = (mu, v);
                        }
                    }
                }
                prices[cell] = best.0;
                values.set_w(t, s, li, best.1);
                total += m * best.1;
            }
            no_sale_floor(table, s, &mut prices[(t * ns + s) * nl..(t * ns + s + 1) * nl]);
            row[s] = total;
        }
        values.u_row_mut(t).copy_from_slice(&row);
    }
    (prices, values)
}

/// Optimal menus for a finite horizon `T` with discount in `(0, 1]`.
pub fn solve_finite<M: PriceModel + ?Sized>(
    model: &M,
    horizon: usize,
    discount: f64,
) -> Result<Solution> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    check_discount(discount)?;
    let table = AcceptanceTable::build(model)?;
    let (prices, values) = backward(&table, horizon, discount);
    let policy = PricingPolicy::new(
        Horizon::Finite(horizon),
        discount,
        table.lengths.clone(),
        table.num_states(),
        table.prices.clone(),
        prices,
    )?;
    Ok(Solution {
        policy,
        values,
        horizon,
    })
}

/// Horizon after which discounted revenue is below `epsilon`:
/// `ceil(log_discount(epsilon * (1 - discount) / value_bound))`, at least 1.
pub fn truncation_horizon(value_bound: f64, discount: f64, epsilon: f64) -> Result<usize> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "infinite horizon needs a discount in (0, 1), got {discount}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
    }
    if value_bound <= 0.0 {
        return Ok(1);
    }
    let x = (epsilon * (1.0 - discount) / value_bound).ln() / discount.ln();
    Ok(((x - 1e-9).ceil() as i64).max(1) as usize)
}

/// Stationary menus within `epsilon` of optimal for discounted revenue over
/// an unbounded horizon: the first-step menus of the truncated problem.
pub fn solve_infinite<M: PriceModel + ?Sized>(
    model: &M,
    discount: f64,
    epsilon: f64,
) -> Result<Solution> {
    let horizon = truncation_horizon(model.model_value_bound(), discount, epsilon)?;
    let table = AcceptanceTable::build(model)?;
    let (prices, values) = backward(&table, horizon, discount);
    let first = table.num_states() * table.lengths.len();
    let policy = PricingPolicy::new(
        Horizon::Stationary,
        discount,
        table.lengths.clone(),
        table.num_states(),
        table.prices.clone(),
        prices[..first].to_vec(),
    )?;
    Ok(Solution {
        policy,
        values,
        horizon,
    })
}

/// Finite-horizon menus restricted to the price grid of `grid`.
pub fn solve_grid(
    law: &ContinuousValueDistribution,
    grid: GridSpec,
    horizon: usize,
    discount: f64,
) -> Result<Solution> {
    solve_finite(&GridModel::new(law, grid), horizon, discount)
}
