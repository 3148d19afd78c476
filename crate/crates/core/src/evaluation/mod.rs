//! Exact evaluation of fixed policies, an exhaustive oracle for tiny
//! instances, and closed-form error and sample-size bounds.

mod bounds;
mod brute;

pub use bounds::{
    azuma_bound, grid_bound, implied_epsilon, revenue_gap_bound, robustness_bound, sample_size,
    BoundKind, BoundReport, HorizonParam, SampleSizeMode,
};
pub use brute::{brute_force_optimal, BruteForceResult, BRUTE_FORCE_LIMIT};

use crate::distributions::JobLaw;
use crate::error::{Error, Result};
use crate::solver::{
    accept_state, cheapest_offer, maximand, reject_state, truncation_horizon, PricingPolicy,
    ValueTables,
};

fn check_shape<L: JobLaw + ?Sized>(law: &L, policy: &PricingPolicy, horizon: usize) -> Result<()> {
    if !policy.covers(horizon) {
        return Err(Error::PolicyShape(format!(
            "policy horizon {:?} is shorter than {horizon} steps",
            policy.horizon()
        )));
    }
    if policy.lengths() != law.lengths() {
        return Err(Error::PolicyShape(format!(
            "policy lengths {:?} differ from the distribution's {:?}",
            policy.lengths(),
            law.lengths()
        )));
    }
    let states = law.max_state() as usize + 1;
    if policy.num_states() != states {
        return Err(Error::PolicyShape(format!(
            "policy has {} states, the distribution needs {states}",
            policy.num_states()
        )));
    }
    Ok(())
}

/// How a length-`l` job responds to a menu: strategic agents buy the
/// cheapest offer among lengths `>= l`, truthful ones only their own.
#[derive(Clone, Copy)]
enum Agents {
    Strategic,
    Truthful,
}

fn evaluate<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    horizon: usize,
    discount: f64,
    agents: Agents,
) -> Result<ValueTables> {
    check_shape(law, policy, horizon)?;
    if !(discount > 0.0 && discount <= 1.0) {
        return Err(Error::InvalidParameter(format!("discount {discount} outside (0, 1]")));
    }
    let lengths = law.lengths();
    let nl = lengths.len();
    let ns = law.max_state() as usize + 1;
    let mut values = ValueTables::zeros(horizon, ns, nl);
    for t in (0..horizon).rev() {
        let next: Vec<f64> = values.u_row(t + 1).iter().map(|u| discount * u).collect();
        let mut row = vec![0.0; ns];
        for (s, slot) in row.iter_mut().enumerate() {
            let menu = policy.menu(t, s as u32);
            let cont_reject = next[reject_state(s)];
            let mut total = 0.0;
            for li in 0..nl {
                let m = law.length_mass_at(li);
                let offer = match agents {
                    Agents::Strategic => cheapest_offer(menu, li),
                    Agents::Truthful => menu[li].is_finite().then_some((li, menu[li])),
                };
                let w = match offer {
                    Some((bought, price)) if m > 0.0 => {
                        let q = law.accept_mass(li, price, s as u32) / m;
                        let a = accept_state(s, lengths[bought], ns - 1);
                        maximand(q, price, next[a], cont_reject)
                    }
                    _ => cont_reject,
                };
                values.set_w(t, s, li, w);
                total += m * w;
            }
            *slot = total;
        }
        values.u_row_mut(t).copy_from_slice(&row);
    }
    Ok(values)
}

/// Expected revenue tables of a fixed policy over `horizon` steps when each
/// job buys the cheapest affordable offer among lengths at least its own
/// (shorter length on ties), provided its deadline admits the current state.
///
/// For monotone policies this is the plain fixed-policy recurrence.
pub fn evaluate_policy_exact<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    horizon: usize,
    discount: f64,
) -> Result<ValueTables> {
    evaluate(law, policy, horizon, discount, Agents::Strategic)
}

/// The fixed-policy recurrence with every job restricted to its own
/// length. Differs from [`evaluate_policy_exact`] only for menus that are
/// not monotone.
pub fn evaluate_policy_truthful<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    horizon: usize,
    discount: f64,
) -> Result<ValueTables> {
    evaluate(law, policy, horizon, discount, Agents::Truthful)
}

/// Discounted value of a stationary policy from every state, accurate to
/// `tolerance`: the recurrence is run for the horizon past which at most
/// `tolerance` revenue remains.
pub fn evaluate_stationary<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    discount: f64,
    tolerance: f64,
) -> Result<Vec<f64>> {
    if !policy.is_stationary() {
        return Err(Error::PolicyShape("expected a stationary policy".into()));
    }
    let horizon = truncation_horizon(law.value_upper_bound(), discount, tolerance)?;
    let values = evaluate_policy_exact(law, policy, horizon, discount)?;
    Ok(values.u_row(0).to_vec())
}

/// Expected undiscounted revenue of step `t` in state `s` under strategic
/// agents.
pub fn expected_step_revenue<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    t: usize,
    s: u32,
) -> f64 {
    let menu = policy.menu(t, s);
    (0..law.lengths().len())
        .filter_map(|li| cheapest_offer(menu, li).map(|(_, p)| p * law.accept_mass(li, p, s)))
        .sum()
}

#[cfg(test)]
mod tests;
