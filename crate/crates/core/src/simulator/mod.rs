//! The online process: one job per slot, strategic purchases, server-state
//! transitions and revenue accounting.

mod experiment;
mod probe;

pub use experiment::{concentration_experiment, concentration_report, ConcentrationReport};
pub use probe::{probe_and_learn, ProbePlan};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{affordable, JobLaw, JobType};
use crate::error::{Error, Result};
use crate::solver::{cheapest_offer, PricingPolicy};

/// Earliest slot offset at which a new job can start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ServerState(pub u32);

impl ServerState {
    pub const IDLE: ServerState = ServerState(0);

    pub fn get(self) -> u32 {
        self.0
    }

    /// State after a rejection: one slot drains.
    pub fn after_reject(self) -> ServerState {
        ServerState(self.0.saturating_sub(1))
    }

    /// State after a purchase of `length` slots.
    pub fn after_purchase(self, length: u32) -> ServerState {
        ServerState(self.0 + length - 1)
    }
}

/// What a job did when shown a menu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub accepted: bool,
    /// Purchased length, 0 when nothing was bought.
    pub purchased_length: u32,
    /// Price paid, 0 when nothing was bought.
    pub paid: f64,
}

impl AgentDecision {
    pub const REJECT: AgentDecision = AgentDecision {
        accepted: false,
        purchased_length: 0,
        paid: 0.0,
    };
}

/// A job facing `menu` (one price per entry of `lengths`) in state `s` buys
/// the cheapest affordable interval at least as long as it needs, the
/// shorter one on ties, provided it tolerates a start delay of `s`.
pub fn agent_decide(job: &JobType, menu: &[f64], lengths: &[u32], s: ServerState) -> AgentDecision {
    debug_assert_eq!(menu.len(), lengths.len());
    if job.deadline < s.0 {
        return AgentDecision::REJECT;
    }
    let from = lengths.partition_point(|&l| l < job.length);
    match cheapest_offer(menu, from) {
        Some((j, price)) if affordable(job.value, price) => AgentDecision {
            accepted: true,
            purchased_length: lengths[j],
            paid: price,
        },
        _ => AgentDecision::REJECT,
    }
}

/// Applies one arrival at step `t`. Returns the next state and the decision;
/// the step's revenue is `decision.paid`.
pub fn step(
    state: ServerState,
    job: &JobType,
    policy: &PricingPolicy,
    t: usize,
) -> (ServerState, AgentDecision) {
    let decision = agent_decide(job, policy.menu(t, state.0), policy.lengths(), state);
    let next = if decision.accepted {
        state.after_purchase(decision.purchased_length)
    } else {
        state.after_reject()
    };
    (next, decision)
}

/// One simulated step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub state_before: u32,
    pub job: JobType,
    pub decision: AgentDecision,
    pub state_after: u32,
    /// Undiscounted revenue of the step.
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub records: Vec<TraceRecord>,
    /// `sum_t discount^t * revenue_t`.
    pub cumulative: f64,
    pub discount: f64,
    pub seed: u64,
    pub stream: u64,
}

impl SimulationTrace {
    pub const CSV_HEADER: &'static str = "t,s_before,l,v,d,accepted,bought_len,price,s_after,revenue";

    /// Records as CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.t,
                r.state_before,
                r.job.length,
                r.job.value,
                r.job.deadline,
                r.decision.accepted as u8,
                r.decision.purchased_length,
                r.decision.paid,
                r.state_after,
                r.revenue
            ));
        }
        out
    }
}

/// Generator for trace `stream` of an experiment seeded with `seed`.
pub fn trace_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn check_policy<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    horizon: usize,
) -> Result<()> {
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
    Ok(())
}

/// Simulates `horizon` arrivals from state 0.
pub fn run_trace<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    horizon: usize,
    discount: f64,
    seed: u64,
    stream: u64,
) -> Result<SimulationTrace> {
    check_policy(law, policy, horizon)?;
    let mut rng = trace_rng(seed, stream);
    let jobs: Vec<JobType> = (0..horizon).map(|_| law.sample(&mut rng)).collect();
    Ok(replay(law, policy, &jobs, discount, seed, stream))
}

/// Runs a fixed job sequence through a policy.
pub fn replay<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    jobs: &[JobType],
    discount: f64,
    seed: u64,
    stream: u64,
) -> SimulationTrace {
    let max_state = law.max_state();
    let mut state = ServerState::IDLE;
    let mut weight = 1.0;
    let mut cumulative = 0.0;
    let mut records = Vec::with_capacity(jobs.len());
    for (t, job) in jobs.iter().enumerate() {
        let (next, decision) = step(state, job, policy, t);
        assert!(
            !decision.accepted || job.deadline >= state.0,
            "accepted a job whose deadline is below the state"
        );
        assert!(next.0 <= max_state, "state {} beyond {max_state}", next.0);
        cumulative += weight * decision.paid;
        weight *= discount;
        records.push(TraceRecord {
            t,
            state_before: state.0,
            job: *job,
            decision,
            state_after: next.0,
            revenue: decision.paid,
        });
        state = next;
    }
    SimulationTrace {
        records,
        cumulative,
        discount,
        seed,
        stream,
    }
}

/// `count` independent traces; trace `i` uses stream `i`, so results do
/// not depend on scheduling.
pub fn run_ensemble<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    horizon: usize,
    discount: f64,
    seed: u64,
    count: usize,
) -> Result<Vec<SimulationTrace>> {
    check_policy(law, policy, horizon)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| run_trace(law, policy, horizon, discount, seed, i))
        .collect()
}

/// Cumulative revenues only, without keeping the records.
pub fn ensemble_revenues<L: JobLaw + ?Sized>(
    law: &L,
    policy: &PricingPolicy,
    horizon: usize,
    discount: f64,
    seed: u64,
    count: usize,
) -> Result<Vec<f64>> {
    check_policy(law, policy, horizon)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| run_trace(law, policy, horizon, discount, seed, i).map(|tr| tr.cumulative))
        .collect()
}
