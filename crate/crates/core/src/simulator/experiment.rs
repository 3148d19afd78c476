use serde::{Deserialize, Serialize};

use super::ensemble_revenues;
use crate::distributions::JobLaw;
use crate::error::{Error, Result};
use crate::evaluation::{azuma_bound, evaluate_policy_exact, BoundReport, HorizonParam};
use crate::solver::{check_monotone, PricingPolicy};

/// Spread of simulated cumulative revenue around its exact mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// Cumulative (discounted) revenue of each trace.
    pub cumulative: Vec<f64>,
    /// `|cumulative - expectation|` per trace.
    pub deviations: Vec<f64>,
    /// Exact expected cumulative revenue from state 0.
    pub expectation: f64,
    pub bound: BoundReport,
    /// Fraction of traces whose deviation is within the bound; 1 when there
    /// are no traces.
    pub coverage: f64,
}

/// Runs `traces` independent traces of `horizon` steps and compares their
/// spread with the concentration bound for monotone policies.
///
/// A discount of 1 uses the finite-horizon bound, anything smaller the
/// discounted one.
pub fn concentration_experiment<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    horizon: usize,
    discount: f64,
    traces: usize,
    delta: f64,
    seed: u64,
) -> Result<ConcentrationReport> {
    require_monotone(policy)?;
    let cumulative = ensemble_revenues(law, policy, horizon, discount, seed, traces)?;
    concentration_report(law, policy, horizon, discount, delta, cumulative)
}

fn require_monotone(policy: &PricingPolicy) -> Result<()> {
    let report = check_monotone(policy);
    if report.monotone {
        Ok(())
    } else {
        Err(Error::NonMonotonePolicy {
            violations: report.violations.len(),
        })
    }
}

/// Scores cumulative revenues that were simulated elsewhere, for example
/// when the full traces are needed too.
pub fn concentration_report<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    horizon: usize,
    discount: f64,
    delta: f64,
    cumulative: Vec<f64>,
) -> Result<ConcentrationReport> {
    require_monotone(policy)?;
    let expectation = evaluate_policy_exact(law, policy, horizon, discount)?.u(0, 0);
    let param = if discount >= 1.0 {
        HorizonParam::Finite(horizon)
    } else {
        HorizonParam::Discounted(discount)
    };
    let bound = azuma_bound(law.value_upper_bound(), delta, param)?;
    let deviations: Vec<f64> = cumulative.iter().map(|c| (c - expectation).abs()).collect();
    let coverage = if cumulative.is_empty() {
        1.0
    } else {
        deviations.iter().filter(|&&d| d <= bound.bound).count() as f64 / cumulative.len() as f64
    };
    Ok(ConcentrationReport {
        cumulative,
        deviations,
        expectation,
        bound,
        coverage,
    })
}
