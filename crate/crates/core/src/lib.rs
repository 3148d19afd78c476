//! Posted-price menus for selling time on a single non-preemptive server.
//!
//! One job arrives per time slot with a random length, value and maximum
//! start delay. Before the job is revealed the server posts a price for every
//! interval length together with its earliest available slot. The crate
//! computes revenue-optimal menus by backward induction over (state, length)
//! pairs, evaluates arbitrary menus against strategic buyers, simulates the
//! online process and learns the job distribution from censored
//! accept/reject observations.
//!
//! Module map:
//!
//! * [`distributions`]: tabular and continuous job laws, log-concave
//!   families, the tail-ratio condition that guarantees monotone optima, and
//!   censored empirical estimates.
//! * [`solver`]: finite, discounted and price-grid backward induction,
//!   monotonicity checks and projection.
//! * [`evaluation`]: exact policy evaluation, a brute-force oracle for tiny
//!   instances, and the closed-form concentration / robustness / sample-size
//!   bounds.
//! * [`simulator`]: agents, server transitions, seeded traces, concentration
//!   experiments and the probing learner.

pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod simulator;
pub mod solver;

pub use error::{Error, Result};
