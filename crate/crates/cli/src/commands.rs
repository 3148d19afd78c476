//! The subcommands, plus the in-memory pipeline they share with tests.

use std::fmt::Write as _;

use log::{info, warn};
use serde::Serialize;
use slotprice_core::distributions::{
    check_assumption1, distance, Assumption1Report, DistributionSpec, JobDistribution, JobLaw,
    LoadedDistribution,
};
use slotprice_core::evaluation::{
    evaluate_policy_exact, implied_epsilon, revenue_gap_bound, sample_size, BoundReport,
    HorizonParam, SampleSizeMode,
};
use slotprice_core::simulator::{
    concentration_report, ensemble_revenues, probe_and_learn, run_ensemble, ProbePlan,
};
use slotprice_core::solver::{
    check_monotone, project_monotone, solve_finite, solve_grid, solve_infinite, GridSpec,
    MonotoneReport, PolicyFile, PricingPolicy, Solution,
};

use crate::config::{DistributionSource, ExperimentConfig, Plan};
use crate::output::{OutDir, Report, Stamp, Stamped};
use crate::{CliError, Status};

/// Largest per-pair probe count the harness will run without an explicit
/// `--samples`.
pub const PROBE_LIMIT: u64 = 1_000_000;

/// Simulation seeds are offset from probing seeds so the two never share
/// a random stream.
const TRACE_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// A validated config with its distribution loaded.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub plan: Plan,
    pub dist: LoadedDistribution,
    dist_json: String,
}

impl Experiment {
    pub fn open(config: &ExperimentConfig) -> Result<Self, CliError> {
        let plan = config.plan()?;
        let (dist, dist_json) = config.distribution()?;
        Ok(Experiment {
            config: config.clone(),
            plan,
            dist,
            dist_json,
        })
    }

    /// Digest of everything that determines the outputs: the config with
    /// the distribution inlined and paths dropped, plus `extra` inputs.
    pub fn stamp(&self, extra: &[&str]) -> Stamp {
        let mut canonical = self.config.clone();
        canonical.out = Default::default();
        canonical.policy = None;
        canonical.distribution = DistributionSource::Inline(
            DistributionSpec::from_json(&self.dist_json).expect("canonical distribution parses"),
        );
        let text = serde_json::to_string(&canonical).expect("configs serialize");
        let mut parts = vec![text.as_str()];
        parts.extend_from_slice(extra);
        Stamp::new(&parts, self.config.seed)
    }

    fn out_dir(&self, extra: &[&str]) -> Result<OutDir, CliError> {
        OutDir::create(&self.config.out, self.stamp(extra))
    }

    fn tabular(&self, command: &str) -> Result<&JobDistribution, CliError> {
        self.dist.as_tabular().ok_or_else(|| {
            CliError::Config(format!("`{command}` needs a distribution with discrete values"))
        })
    }

    pub fn value_bound(&self) -> f64 {
        match &self.dist {
            LoadedDistribution::Tabular(q) => q.value_upper_bound(),
            LoadedDistribution::Continuous(c) => c.value_upper_bound(),
        }
    }

    /// Runs the solver matching the mode.
    pub fn solve(&self) -> Result<Solution, CliError> {
        solve_plan(&self.dist, self.plan)
    }

    fn assumption1(&self) -> Option<Assumption1Report> {
        self.dist.as_tabular().map(check_assumption1)
    }
}

pub fn solve_plan(dist: &LoadedDistribution, plan: Plan) -> Result<Solution, CliError> {
    let need_table = || {
        dist.as_tabular().ok_or_else(|| {
            CliError::Config("continuous values can only be solved in grid mode".into())
        })
    };
    Ok(match plan {
        Plan::Finite { horizon, discount } => solve_finite(need_table()?, horizon, discount)?,
        Plan::Infinite { discount, epsilon } => solve_infinite(need_table()?, discount, epsilon)?,
        Plan::Grid {
            horizon,
            discount,
            eta,
        } => {
            let law = dist.to_continuous();
            let grid = GridSpec::new(eta, law.value_upper_bound())?;
            solve_grid(&law, grid, horizon, discount)?
        }
    })
}

fn mode_name(plan: Plan) -> &'static str {
    match plan {
        Plan::Finite { .. } => "finite",
        Plan::Infinite { .. } => "infinite",
        Plan::Grid { .. } => "grid",
    }
}

fn describe_assumption1(report: &Option<Assumption1Report>) -> &'static str {
    match report {
        Some(r) if r.holds => "holds",
        Some(_) => "fails",
        None => "not-checked",
    }
}

fn violations_csv(report: &MonotoneReport) -> String {
    let mut out = String::from("t,s,l\n");
    for (t, s, l) in &report.violations {
        let _ = writeln!(out, "{t},{s},{l}");
    }
    out
}

/// Shared by `solve` and `check`: the monotonicity verdict and report rows.
fn monotone_rows(
    exp: &Experiment,
    sol: &Solution,
    report: &mut Report,
) -> (MonotoneReport, Status) {
    let a1 = exp.assumption1();
    let mono = check_monotone(&sol.policy);
    report
        .add("mode", mode_name(exp.plan))
        .add("steps", sol.horizon);
    if let Plan::Infinite { .. } = exp.plan {
        report.add("truncation_horizon", sol.horizon);
    }
    report
        .add("assumption1", describe_assumption1(&a1))
        .add("monotone", mono.monotone)
        .add("violations", mono.violations.len());
    if let Some(w) = a1.as_ref().and_then(|r| r.witness) {
        report.add(
            "assumption1_witness",
            format!(
                "s={} prices={}<{} lengths={}<{} ratios={}>{}",
                w.state, w.lower_price, w.higher_price, w.length, w.next_length, w.ratio,
                w.next_ratio
            ),
        );
    }
    let a1_fails = a1.as_ref().is_some_and(|r| !r.holds);
    let status = if mono.monotone {
        if a1_fails {
            warn!("the tail-ratio condition fails, but the computed menus are monotone");
        }
        Status::Ok
    } else {
        warn!(
            "{} menu entries are not monotone (tail-ratio condition {})",
            mono.violations.len(),
            describe_assumption1(&a1)
        );
        Status::Violation
    };
    (mono, status)
}

/// `solve`: policy, value tables and a monotonicity report.
pub fn solve(config: &ExperimentConfig) -> Result<Status, CliError> {
    let exp = Experiment::open(config)?;
    let sol = exp.solve()?;
    let out = exp.out_dir(&[])?;
    let mut report = Report::default();
    let (mono, status) = monotone_rows(&exp, &sol, &mut report);
    report
        .add("price_candidates", sol.policy.price_set().len())
        .add("value_0_0", sol.values.u(0, 0));
    out.json("policy.json", sol.policy.to_file())?;
    out.csv("values_u.csv", &sol.values.u_csv())?;
    out.csv("values_w.csv", &sol.values.w_csv(sol.policy.lengths()))?;
    out.csv("violations.csv", &violations_csv(&mono))?;
    out.csv("report.csv", &report.to_csv())?;
    info!("solved {} steps; U(0,0) = {}", sol.horizon, sol.values.u(0, 0));
    Ok(status)
}

/// `check`: the tail-ratio condition and menu monotonicity only.
pub fn check(config: &ExperimentConfig) -> Result<Status, CliError> {
    let exp = Experiment::open(config)?;
    let sol = exp.solve()?;
    let out = exp.out_dir(&[])?;
    let mut report = Report::default();
    let (mono, status) = monotone_rows(&exp, &sol, &mut report);
    out.csv("violations.csv", &violations_csv(&mono))?;
    out.csv("report.csv", &report.to_csv())?;
    Ok(status)
}

fn read_policy(path: &std::path::Path) -> Result<(PricingPolicy, String), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: Stamped<PolicyFile> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("policy {}: {e}", path.display())))?;
    Ok((doc.body.into_policy()?, text))
}

/// `simulate`: trace files and a concentration report.
pub fn simulate(config: &ExperimentConfig) -> Result<Status, CliError> {
    let exp = Experiment::open(config)?;
    let (policy, policy_text) = match &config.policy {
        Some(path) => {
            let (p, text) = read_policy(path)?;
            (p, Some(text))
        }
        None => (exp.solve()?.policy, None),
    };
    let mono = check_monotone(&policy);
    let policy = if mono.monotone {
        policy
    } else if config.project {
        warn!("projecting {} non-monotone menu entries", mono.violations.len());
        project_monotone(&policy)
    } else {
        return Err(CliError::Refused(format!(
            "the policy has {} non-monotone menu entries; pass --project to use its monotone \
             projection",
            mono.violations.len()
        )));
    };
    let extra: Vec<&str> = policy_text.iter().map(String::as_str).collect();
    let out = exp.out_dir(&extra)?;
    let steps = exp.plan.steps(exp.value_bound())?;
    match &exp.dist {
        LoadedDistribution::Tabular(q) => simulate_with(q, &policy, &exp, steps, &out, !mono.monotone),
        LoadedDistribution::Continuous(c) => {
            simulate_with(c, &policy, &exp, steps, &out, !mono.monotone)
        }
    }
}

fn simulate_with<L: JobLaw>(
    law: &L,
    policy: &PricingPolicy,
    exp: &Experiment,
    steps: usize,
    out: &OutDir,
    projected: bool,
) -> Result<Status, CliError> {
    let c = &exp.config;
    let discount = exp.plan.discount();
    let traces = run_ensemble(law, policy, steps, discount, c.seed, c.traces)?;
    for (i, tr) in traces.iter().enumerate() {
        out.csv(&format!("traces/trace_{i:05}.csv"), &tr.to_csv())?;
    }
    let cumulative = traces.iter().map(|t| t.cumulative).collect();
    let conc = concentration_report(law, policy, steps, discount, c.delta, cumulative)?;
    let mut rows = String::from("trace,cumulative,deviation,within\n");
    for (i, (x, d)) in conc.cumulative.iter().zip(&conc.deviations).enumerate() {
        let _ = writeln!(rows, "{i},{x},{d},{}", (*d <= conc.bound.bound) as u8);
    }
    out.csv("concentration.csv", &rows)?;
    let mut report = Report::default();
    report
        .add("steps", steps)
        .add("discount", discount)
        .add("traces", c.traces)
        .add("projected", projected)
        .add("expectation", conc.expectation)
        .add("bound_kind", conc.bound.kind)
        .add("bound", conc.bound.bound)
        .add("delta", c.delta)
        .add("coverage", conc.coverage);
    out.csv("report.csv", &report.to_csv())?;
    Ok(if conc.coverage >= 1.0 - c.delta {
        Status::Ok
    } else {
        Status::Violation
    })
}

/// Per-pair probe count: the explicit one, or what `epsilon` requires
/// under `mode`, provided that is within [`PROBE_LIMIT`].
fn probe_count(
    samples: Option<u64>,
    epsilon: Option<f64>,
    kappa: usize,
    delta: f64,
    mode: SampleSizeMode,
) -> Result<u64, CliError> {
    if let Some(n) = samples {
        if n == 0 {
            return Err(CliError::Config("`samples` must be at least 1".into()));
        }
        return Ok(n);
    }
    let Some(eps) = epsilon else {
        return Err(CliError::Config("give `learn_epsilon` or `samples`".into()));
    };
    let required = sample_size(kappa, delta, eps, mode)?.bound;
    if required > PROBE_LIMIT as f64 {
        return Err(CliError::Infeasible {
            required: required.min(u64::MAX as f64) as u64,
            limit: PROBE_LIMIT,
        });
    }
    Ok(required as u64)
}

/// `learn`: probe the true distribution and report the estimate's error.
pub fn learn(config: &ExperimentConfig) -> Result<Status, CliError> {
    let exp = Experiment::open(config)?;
    let q = exp.tabular("learn")?;
    let kappa = q.kappa();
    let n = probe_count(
        config.samples,
        config.learn_epsilon,
        kappa,
        config.delta,
        SampleSizeMode::PerPair,
    )?;
    let plan = ProbePlan::covering(q, n, config.delta, false);
    let est = probe_and_learn(q, &plan, config.seed)?;
    let dist = distance(q, &est)?;
    let out = exp.out_dir(&[])?;
    let mut rows = String::from("l,v,s,true,raw,estimate\n");
    for &l in q.lengths() {
        for &v in q.values() {
            for s in 0..=q.max_state() {
                let _ = writeln!(
                    rows,
                    "{l},{v},{s},{},{},{}",
                    q.joint_tail(l, v, s)?,
                    est.raw_estimate(l, v, s)?,
                    est.estimate(l, v, s)?
                );
            }
        }
    }
    out.csv("estimate.csv", &rows)?;
    let within = dist <= est.epsilon_bound();
    let mut report = Report::default();
    report
        .add("K", kappa)
        .add("samples_per_pair", n)
        .add("total_probes", est.total_samples())
        .add("elapsed_slots", est.elapsed_slots())
        .add("delta", config.delta)
        .add("epsilon_bound", est.epsilon_bound())
        .add("distance", dist)
        .add("within", within);
    out.csv("report.csv", &report.to_csv())?;
    Ok(if within { Status::Ok } else { Status::Violation })
}

/// Knobs of [`run_pipeline`].
#[derive(Debug, Clone, Copy)]
pub struct PipelineSettings {
    pub delta: f64,
    pub samples: Option<u64>,
    /// Target revenue accuracy; sets the probe count when `samples` is absent.
    pub epsilon: Option<f64>,
    pub zero_noise: bool,
    pub traces: usize,
    pub seed: u64,
}

/// Outcome of learning, solving on the estimate, and racing it against
/// the optimal policy on shared job sequences.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineOutcome {
    pub kappa: usize,
    /// Probes per pair; `None` with zero noise.
    pub samples: Option<u64>,
    /// Accuracy the probes buy, used in the gap bound; 0 with zero noise.
    pub epsilon: f64,
    /// `distance(Q, Q-hat)` and its high-probability bound.
    pub distance: f64,
    pub epsilon_bound: Option<f64>,
    pub steps: usize,
    pub discount: f64,
    /// Exact expected revenue on the true distribution.
    pub value_optimal: f64,
    pub value_learned: f64,
    pub learned_monotone: bool,
    pub bound: BoundReport,
    /// Per trace: revenue of the optimal and of the learned policy.
    pub paired: Vec<(f64, f64)>,
    /// Fraction of traces whose shortfall is within the bound.
    pub coverage: f64,
    #[serde(skip)]
    pub optimal: PricingPolicy,
    #[serde(skip)]
    pub learned: PricingPolicy,
}

pub fn run_pipeline(
    q: &JobDistribution,
    plan: Plan,
    settings: PipelineSettings,
) -> Result<PipelineOutcome, CliError> {
    let (mode, horizon) = match plan {
        Plan::Finite { horizon, .. } => (
            SampleSizeMode::PipelineFinite(horizon),
            HorizonParam::Finite(horizon),
        ),
        Plan::Infinite { discount, .. } => (
            SampleSizeMode::PipelineDiscounted(discount),
            HorizonParam::Discounted(discount),
        ),
        Plan::Grid { .. } => {
            return Err(CliError::Config("the pipeline runs in finite or infinite mode".into()))
        }
    };
    let kappa = q.kappa();
    let table = LoadedDistribution::Tabular(q.clone());
    let optimal = solve_plan(&table, plan)?;
    let (learned, samples, epsilon, dist, epsilon_bound) = if settings.zero_noise {
        (optimal.policy.clone(), None, 0.0, 0.0, None)
    } else {
        let n = probe_count(settings.samples, settings.epsilon, kappa, settings.delta, mode)?;
        let probes = ProbePlan::covering(q, n, settings.delta, false);
        let est = probe_and_learn(q, &probes, settings.seed)?;
        let policy = match plan {
            Plan::Infinite { discount, epsilon } => solve_infinite(&est, discount, epsilon)?,
            Plan::Finite { horizon, discount } => solve_finite(&est, horizon, discount)?,
            Plan::Grid { .. } => unreachable!(),
        }
        .policy;
        let eps = implied_epsilon(kappa, settings.delta, n, mode)?;
        (policy, Some(n), eps, distance(q, &est)?, Some(est.epsilon_bound()))
    };
    let steps = optimal.horizon;
    let discount = plan.discount();
    let bound = revenue_gap_bound(q.value_upper_bound(), settings.delta, epsilon, horizon)?;
    let value_optimal = evaluate_policy_exact(q, &optimal.policy, steps, discount)?.u(0, 0);
    let value_learned = evaluate_policy_exact(q, &learned, steps, discount)?.u(0, 0);
    let seed = settings.seed.wrapping_add(TRACE_SEED_OFFSET);
    let best = ensemble_revenues(q, &optimal.policy, steps, discount, seed, settings.traces)?;
    let mine = ensemble_revenues(q, &learned, steps, discount, seed, settings.traces)?;
    let paired: Vec<(f64, f64)> = best.into_iter().zip(mine).collect();
    let coverage = if paired.is_empty() {
        1.0
    } else {
        paired.iter().filter(|(b, m)| b - m <= bound.bound).count() as f64 / paired.len() as f64
    };
    Ok(PipelineOutcome {
        kappa,
        samples,
        epsilon,
        distance: dist,
        epsilon_bound,
        steps,
        discount,
        value_optimal,
        value_learned,
        learned_monotone: check_monotone(&learned).monotone,
        bound,
        paired,
        coverage,
        optimal: optimal.policy,
        learned,
    })
}

/// `pipeline`: learn, solve on the estimate, and compare with the optimum.
pub fn pipeline(config: &ExperimentConfig) -> Result<Status, CliError> {
    let exp = Experiment::open(config)?;
    let q = exp.tabular("pipeline")?;
    let r = run_pipeline(
        q,
        exp.plan,
        PipelineSettings {
            delta: config.delta,
            samples: config.samples,
            epsilon: config.learn_epsilon,
            zero_noise: config.zero_noise,
            traces: config.traces,
            seed: config.seed,
        },
    )?;
    let out = exp.out_dir(&[])?;
    out.json("policy_optimal.json", r.optimal.to_file())?;
    out.json("policy_learned.json", r.learned.to_file())?;
    let mut rows = String::from("trace,optimal,learned,gap,within\n");
    for (i, (b, m)) in r.paired.iter().enumerate() {
        let _ = writeln!(rows, "{i},{b},{m},{},{}", b - m, (b - m <= r.bound.bound) as u8);
    }
    out.csv("gaps.csv", &rows)?;
    let mut report = Report::default();
    report
        .add("mode", mode_name(exp.plan))
        .add("steps", r.steps)
        .add("discount", r.discount)
        .add("K", r.kappa)
        .add("zero_noise", config.zero_noise)
        .add("samples_per_pair", r.samples.map_or("none".into(), |n| n.to_string()))
        .add("implied_epsilon", r.epsilon)
        .add("distance", r.distance)
        .add(
            "epsilon_bound",
            r.epsilon_bound.map_or("none".into(), |e| e.to_string()),
        )
        .add("learned_monotone", r.learned_monotone)
        .add("value_optimal", r.value_optimal)
        .add("value_learned", r.value_learned)
        .add("bound", r.bound.bound)
        .add("traces", r.paired.len())
        .add("coverage", r.coverage);
    out.csv("report.csv", &report.to_csv())?;
    Ok(if r.coverage >= 1.0 - config.delta {
        Status::Ok
    } else {
        Status::Violation
    })
}
