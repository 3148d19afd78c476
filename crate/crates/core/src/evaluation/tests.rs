use proptest::prelude::*;

use super::*;
use crate::distributions::{JobDistribution, JobType};
use crate::solver::{check_monotone, solve_finite, solve_infinite, Horizon};

const INF: f64 = f64::INFINITY;

fn flat(q: &JobDistribution, horizon: Horizon, discount: f64, menu: &[f64]) -> PricingPolicy {
    PricingPolicy::constant(
        horizon,
        discount,
        q.lengths().to_vec(),
        q.max_state() as usize + 1,
        menu,
    )
    .unwrap()
}

/// Length-1 jobs with value 2 and a long deadline; length 2 is offered but
/// nobody needs it.
fn short_jobs() -> JobDistribution {
    JobDistribution::new(
        vec![1, 2],
        vec![2.0],
        vec![9],
        &[(JobType::new(1, 2.0, 9), 1.0)],
    )
    .unwrap()
}

#[test]
fn unpriced_menus_earn_nothing() {
    let q = short_jobs();
    let v = evaluate_policy_exact(&q, &flat(&q, Horizon::Finite(3), 1.0, &[INF, INF]), 3, 1.0).unwrap();
    for t in 0..=3 {
        assert!(v.u_row(t).iter().all(|&u| u == 0.0));
    }
}

#[test]
fn evaluation_reproduces_solver() {
    let q = JobDistribution::independent(&[(1, 1.0)], &[(1.0, 0.6), (3.0, 0.4)], &[(9, 1.0)])
        .unwrap();
    let sol = solve_finite(&q, 2, 1.0).unwrap();
    let v = evaluate_policy_exact(&q, &sol.policy, 2, 1.0).unwrap();
    assert!((v.u(0, 0) - 2.4).abs() < 1e-12);
}

#[test]
fn strategic_buyer_takes_cheaper_longer_slot() {
    // Menu (3, 2): the length-1 job with value 2 buys length 2 at price 2,
    // which occupies one extra slot (state 0 -> 1); the next job still fits.
    let q = short_jobs();
    let p = flat(&q, Horizon::Finite(2), 1.0, &[3.0, 2.0]);
    let strategic = evaluate_policy_exact(&q, &p, 2, 1.0).unwrap();
    let truthful = evaluate_policy_truthful(&q, &p, 2, 1.0).unwrap();
    assert_eq!(strategic.u(1, 0), 2.0);
    assert_eq!(strategic.u(0, 0), 4.0);
    assert_eq!(truthful.u(0, 0), 0.0);
    assert_eq!(expected_step_revenue(&q, &p, 0, 0), 2.0);
}

#[test]
fn projection_over_unsold_lengths_keeps_value() {
    // Raising the price of a length nobody buys leaves revenue unchanged.
    let q = JobDistribution::new(
        vec![1, 2],
        vec![1.0, 2.0],
        vec![3],
        &[(JobType::new(1, 2.0, 3), 1.0)],
    )
    .unwrap();
    let p = flat(&q, Horizon::Finite(3), 1.0, &[2.0, 1.0]);
    let projected = crate::solver::project_monotone(&p);
    let naive = evaluate_policy_truthful(&q, &p, 3, 1.0).unwrap();
    let fixed = evaluate_policy_exact(&q, &projected, 3, 1.0).unwrap();
    assert!(fixed.u(0, 0) >= naive.u(0, 0));
}

#[test]
fn shape_mismatch_rejected() {
    let q = short_jobs();
    let short = flat(&q, Horizon::Finite(1), 1.0, &[1.0, 1.0]);
    assert!(evaluate_policy_exact(&q, &short, 2, 1.0).is_err());
    let other = JobDistribution::point_mass(JobType::new(1, 2.0, 9)).unwrap();
    assert!(evaluate_policy_exact(&other, &short, 1, 1.0).is_err());
}

#[test]
fn stationary_geometric_series() {
    let q = JobDistribution::point_mass(JobType::new(1, 1.0, 20)).unwrap();
    let sol = solve_infinite(&q, 0.5, 0.01).unwrap();
    let u = evaluate_stationary(&q, &sol.policy, 0.5, 1e-10).unwrap();
    assert!((u[0] - 2.0).abs() < 1e-9);
    assert!((u[0] - sol.values.u(0, 0)).abs() <= 0.01);
}

#[test]
fn brute_force_examples() {
    let q = JobDistribution::independent(&[(1, 1.0)], &[(1.0, 0.5), (2.0, 0.5)], &[(0, 1.0)])
        .unwrap();
    let best = brute_force_optimal(&q, 1, 1.0).unwrap();
    assert!((best.value - 1.0).abs() < 1e-15);
    assert_eq!(best.evaluated, 3);

    // One value with acceptance probability 0.4 (deadline), one step.
    let q = JobDistribution::from_atoms(&[
        (JobType::new(1, 3.0, 0), 0.4),
        (JobType::new(1, 3.0, 1), 0.6),
    ])
    .unwrap();
    let best = brute_force_optimal(&q, 1, 1.0).unwrap();
    assert!((best.value - 3.0).abs() < 1e-15);
}

#[test]
fn brute_force_size_limit() {
    let q = JobDistribution::independent(
        &[(1, 0.5), (2, 0.5)],
        &[(1.0, 0.5), (2.0, 0.5)],
        &[(3, 1.0)],
    )
    .unwrap();
    match brute_force_optimal(&q, 6, 1.0) {
        Err(Error::InstanceTooLarge { size, limit }) => {
            assert!(size > limit as f64);
        }
        other => panic!("expected size error, got {other:?}"),
    }
}

#[test]
fn bound_examples() {
    let a = azuma_bound(10.0, 0.05, HorizonParam::Finite(100)).unwrap();
    assert!((a.bound - 271.6203).abs() < 1e-3);
    assert_eq!(a.kind, BoundKind::AzumaFinite);
    assert_eq!(azuma_bound(10.0, 2.0, HorizonParam::Finite(100)).unwrap().bound, 0.0);
    let d = azuma_bound(1.0, 0.05, HorizonParam::Discounted(0.9)).unwrap();
    assert!((d.bound - 6.2314).abs() < 1e-3);
    assert_eq!(d.kind, BoundKind::AzumaDiscounted);

    let r = robustness_bound(HorizonParam::Finite(10), 0, 5.0, 3, 0.01).unwrap();
    assert!((r.bound - 3.0).abs() < 1e-12);
    assert_eq!(robustness_bound(HorizonParam::Finite(10), 0, 5.0, 3, 0.0).unwrap().bound, 0.0);
    let r = robustness_bound(HorizonParam::Discounted(0.5), 0, 1.0, 2, 0.1).unwrap();
    assert!((r.bound - 0.8).abs() < 1e-12);

    assert!((grid_bound(HorizonParam::Finite(4), 1, 0.25).unwrap().bound - 0.75).abs() < 1e-15);
    assert!((grid_bound(HorizonParam::Discounted(0.5), 0, 0.25).unwrap().bound - 0.5).abs() < 1e-15);
}

#[test]
fn sample_size_examples() {
    // 3 ln(200) / 0.005 = 3178.99...
    let n = sample_size(10, 0.1, 0.05, SampleSizeMode::PerPair).unwrap();
    assert_eq!(n.bound, 3179.0);
    assert_eq!(n.input("K"), Some(10.0));
    // 6 * 5 * 256 * ln(80) / 0.25 = 134615.86...
    let n = sample_size(4, 0.1, 0.5, SampleSizeMode::ValueFinite(5)).unwrap();
    assert_eq!(n.bound, 134616.0);
    let pipeline = sample_size(4, 0.1, 0.5, SampleSizeMode::PipelineFinite(5)).unwrap();
    let expected = (24.0 * 5.0 * 256.0 * (32.0f64 / 0.1).ln() / 0.25).ceil();
    assert_eq!(pipeline.bound, expected);
    let n = 10_000;
    let eps = implied_epsilon(4, 0.1, n, SampleSizeMode::PerPair).unwrap();
    assert!(sample_size(4, 0.1, eps, SampleSizeMode::PerPair).unwrap().bound <= n as f64);
    assert!(sample_size(4, 0.1, 1.0, SampleSizeMode::PerPair).is_err());
}

#[test]
fn gap_bound_forms() {
    let f = revenue_gap_bound(2.0, 0.1, 0.3, HorizonParam::Finite(9)).unwrap();
    let expected = 4.0 * (2.0 * 80f64.ln() * 10.0).sqrt() + 0.3;
    assert!((f.bound - expected).abs() < 1e-12);
    let d = revenue_gap_bound(2.0, 0.1, 0.3, HorizonParam::Discounted(0.5)).unwrap();
    let expected = 4.0 * (2.0 * 80f64.ln() / 0.75).sqrt() + 0.6;
    assert!((d.bound - expected).abs() < 1e-12);
    assert!(f.csv_row().starts_with("revenue-gap,V=2;delta=0.1;epsilon=0.3;T=9,"));
}

#[test]
fn bounds_are_monotone_in_their_parameters() {
    let grid_t = [1usize, 2, 5, 10, 50];
    let grid_v = [0.5, 1.0, 3.0];
    let grid_d = [0.01, 0.05, 0.2, 0.5];
    for w in grid_t.windows(2) {
        let a = |t| azuma_bound(1.0, 0.05, HorizonParam::Finite(t)).unwrap().bound;
        assert!(a(w[0]) < a(w[1]));
        let n = |t| sample_size(3, 0.1, 0.2, SampleSizeMode::ValueFinite(t)).unwrap().bound;
        assert!(n(w[0]) <= n(w[1]));
    }
    for w in grid_v.windows(2) {
        let a = |v| azuma_bound(v, 0.05, HorizonParam::Finite(10)).unwrap().bound;
        assert!(a(w[0]) < a(w[1]));
    }
    for w in grid_d.windows(2) {
        let a = |d| azuma_bound(1.0, d, HorizonParam::Finite(10)).unwrap().bound;
        assert!(a(w[0]) > a(w[1]));
    }
    for k in [2usize, 3, 4] {
        let n = |k| sample_size(k, 0.1, 0.2, SampleSizeMode::ValueFinite(3)).unwrap().bound;
        assert!(n(k) < n(k + 1));
    }
    for w in [0.05, 0.1, 0.2, 0.4].windows(2) {
        let n = |e| sample_size(3, 0.1, e, SampleSizeMode::PerPair).unwrap().bound;
        assert!(n(w[0]) >= n(w[1]));
    }
    let r = |e| robustness_bound(HorizonParam::Finite(7), 2, 1.5, 2, e).unwrap().bound;
    assert!((r(0.02) - 2.0 * r(0.01)).abs() < 1e-12);
}

prop_compose! {
    fn tiny_distribution()(
        two_lengths in any::<bool>(),
        values in prop::sample::subsequence(vec![0.5, 1.0, 2.0], 1..=2),
        deadlines in prop::sample::subsequence(vec![0u32, 1], 1..=2),
        weights in prop::collection::vec(0.0f64..1.0, 8),
    ) -> JobDistribution {
        let lengths = if two_lengths { vec![1, 2] } else { vec![1] };
        let mut atoms = Vec::new();
        let mut k = 0;
        for &l in &lengths {
            for &v in &values {
                for &d in &deadlines {
                    atoms.push((JobType::new(l, v, d), weights[k] + 0.01));
                    k += 1;
                }
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        JobDistribution::new(lengths, values, deadlines, &atoms).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_never_beats_solver(q in tiny_distribution(), horizon in 1usize..=2, discount in prop::sample::select(vec![0.7, 1.0])) {
        let sol = solve_finite(&q, horizon, discount).unwrap();
        let best = brute_force_optimal(&q, horizon, discount).unwrap();
        prop_assert!(best.value <= sol.values.u(0, 0) + 1e-9);
        if check_monotone(&sol.policy).monotone {
            prop_assert!((best.value - sol.values.u(0, 0)).abs() <= 1e-9);
        }
    }

    #[test]
    fn evaluating_a_monotone_solution_reproduces_its_tables(q in tiny_distribution(), horizon in 1usize..5) {
        let sol = solve_finite(&q, horizon, 0.9).unwrap();
        prop_assume!(check_monotone(&sol.policy).monotone);
        let v = evaluate_policy_exact(&q, &sol.policy, horizon, 0.9).unwrap();
        for t in 0..=horizon {
            for s in 0..v.num_states() {
                prop_assert!((v.u(t, s) - sol.values.u(t, s)).abs() <= 1e-9);
            }
        }
    }
}
