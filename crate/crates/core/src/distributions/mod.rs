//! Joint distributions over job parameters `(length, value, deadline)`.
//!
//! A [`JobDistribution`] is a finite table of atoms. Everything downstream
//! only ever needs the joint acceptance mass `P[L = l, V >= v, D >= s]`, so
//! the table keeps a suffix-summed copy indexed by (length, value, deadline)
//! and answers [`JobDistribution::joint_tail`] with a lookup.

mod continuous;
mod empirical;
mod family;
pub mod file;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use continuous::ContinuousValueDistribution;
pub use empirical::{hoeffding_epsilon, EmpiricalDistribution, ProbeCounts};
pub use file::{parse_distribution, DistributionSpec, LoadedDistribution};
pub use family::{
    build_continuous_family, build_logconcave_family, BaseKind, Construction,
    LogConcaveFamilySpec,
};

/// Tolerance used when the masses of a table are checked to sum to one.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// `true` when a buyer holding `value` can pay `price`.
///
/// Prices and values that differ only by floating-point noise compare as
/// equal so that grid prices such as `3.0 * 0.1` still clear an atom at `0.3`.
#[inline]
pub fn affordable(value: f64, price: f64) -> bool {
    value >= price - 1e-12 * price.abs().max(1.0)
}

/// One realized job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobType {
    pub length: u32,
    pub value: f64,
    pub deadline: u32,
}

impl JobType {
    pub fn new(length: u32, value: f64, deadline: u32) -> Self {
        JobType {
            length,
            value,
            deadline,
        }
    }
}

/// Anything that can say how likely a job is to accept a posted price and
/// that can produce fresh jobs.
pub trait JobLaw: Sync {
    /// Ordered length support.
    fn lengths(&self) -> &[u32];

    /// `P[L = lengths()[idx]]`.
    fn length_mass_at(&self, idx: usize) -> f64;

    fn max_deadline(&self) -> u32;

    fn value_upper_bound(&self) -> f64;

    /// `P[L = lengths()[idx], V >= price, D >= state]`.
    fn accept_mass(&self, idx: usize, price: f64, state: u32) -> f64;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> JobType;

    fn max_length(&self) -> u32 {
        *self.lengths().last().expect("non-empty length support")
    }

    /// Largest server state, `max deadline + max length`.
    fn max_state(&self) -> u32 {
        self.max_deadline() + self.max_length()
    }
}

/// Tabular joint distribution of `(L, V, D)`.
#[derive(Debug, Clone)]
pub struct JobDistribution {
    lengths: Vec<u32>,
    values: Vec<f64>,
    deadlines: Vec<u32>,
    /// Dense `[length][value][deadline]` masses.
    mass: Vec<f64>,
    /// `tail[l][i][j] = sum of mass[l][i'][j']` over `i' >= i`, `j' >= j`;
    /// padded by one in the value and deadline axes.
    tail: Vec<f64>,
    length_mass: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl PartialEq for JobDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.lengths == other.lengths
            && self.values == other.values
            && self.deadlines == other.deadlines
            && self.mass == other.mass
    }
}

fn sorted_unique_u32(mut xs: Vec<u32>) -> Vec<u32> {
    xs.sort_unstable();
    xs.dedup();
    xs
}

fn sorted_unique_f64(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

impl JobDistribution {
    /// Builds a table from declared supports and `(job, probability)` atoms.
    ///
    /// Repeated atoms are merged. The total mass may deviate from one by at
    /// most [`MASS_TOLERANCE`]; the masses are then rescaled to sum to one.
    pub fn new(
        lengths: Vec<u32>,
        values: Vec<f64>,
        deadlines: Vec<u32>,
        atoms: &[(JobType, f64)],
    ) -> Result<Self> {
        let lengths = sorted_unique_u32(lengths);
        let values = sorted_unique_f64(values);
        let deadlines = sorted_unique_u32(deadlines);
        if lengths.is_empty() || deadlines.is_empty() {
            return Err(Error::InvalidDistribution(
                "length and deadline supports must be non-empty".into(),
            ));
        }
        if values.is_empty() {
            return Err(Error::EmptyValueSupport);
        }
        if lengths[0] == 0 {
            return Err(Error::InvalidDistribution("lengths must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution(
                "values must be finite and non-negative".into(),
            ));
        }

        let (nl, nv, nd) = (lengths.len(), values.len(), deadlines.len());
        let mut mass = vec![0.0; nl * nv * nd];
        for (job, p) in atoms {
            if !p.is_finite() || *p < 0.0 || *p > 1.0 {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} of atom ({}, {}, {}) is outside [0, 1]",
                    job.length, job.value, job.deadline
                )));
            }
            let li = lengths
                .binary_search(&job.length)
                .map_err(|_| Error::LengthOutsideSupport(job.length))?;
            let vi = values
                .binary_search_by(|x| x.total_cmp(&job.value))
                .map_err(|_| {
                    Error::InvalidDistribution(format!("value {} outside support", job.value))
                })?;
            let di = deadlines.binary_search(&job.deadline).map_err(|_| {
                Error::InvalidDistribution(format!("deadline {} outside support", job.deadline))
            })?;
            mass[(li * nv + vi) * nd + di] += p;
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "atom masses sum to {total}, not 1"
            )));
        }
        for m in &mut mass {
            *m /= total;
        }
        Self::from_dense(lengths, values, deadlines, mass)
    }

    /// Infers the supports from the atoms themselves.
    pub fn from_atoms(atoms: &[(JobType, f64)]) -> Result<Self> {
        let lengths = atoms.iter().map(|(j, _)| j.length).collect();
        let values = atoms.iter().map(|(j, _)| j.value).collect();
        let deadlines = atoms.iter().map(|(j, _)| j.deadline).collect();
        Self::new(lengths, values, deadlines, atoms)
    }

    /// Point mass on a single job.
    pub fn point_mass(job: JobType) -> Result<Self> {
        Self::from_atoms(&[(job, 1.0)])
    }

    /// `L`, `V` and `D` independent with the given marginals.
    pub fn independent(
        length_marginal: &[(u32, f64)],
        value_marginal: &[(f64, f64)],
        deadline_marginal: &[(u32, f64)],
    ) -> Result<Self> {
        let mut atoms = Vec::new();
        for &(l, pl) in length_marginal {
            for &(v, pv) in value_marginal {
                for &(d, pd) in deadline_marginal {
                    atoms.push((JobType::new(l, v, d), pl * pv * pd));
                }
            }
        }
        Self::new(
            length_marginal.iter().map(|x| x.0).collect(),
            value_marginal.iter().map(|x| x.0).collect(),
            deadline_marginal.iter().map(|x| x.0).collect(),
            &atoms,
        )
    }

    pub(crate) fn from_dense(
        lengths: Vec<u32>,
        values: Vec<f64>,
        deadlines: Vec<u32>,
        mass: Vec<f64>,
    ) -> Result<Self> {
        let (nl, nv, nd) = (lengths.len(), values.len(), deadlines.len());
        debug_assert_eq!(mass.len(), nl * nv * nd);
        let stride_v = nd + 1;
        let stride_l = (nv + 1) * stride_v;
        let mut tail = vec![0.0; nl * stride_l];
        for li in 0..nl {
            let base = li * stride_l;
            for vi in (0..nv).rev() {
                // suffix over deadlines within the row, then add the row above
                let mut row = 0.0;
                for di in (0..nd).rev() {
                    row += mass[(li * nv + vi) * nd + di];
                    tail[base + vi * stride_v + di] = row + tail[base + (vi + 1) * stride_v + di];
                }
            }
        }
        let length_mass = (0..nl).map(|li| tail[li * stride_l]).collect();
        let sampler = WeightedIndex::new(&mass)
            .map_err(|e| Error::InvalidDistribution(format!("cannot sample: {e}")))?;
        Ok(JobDistribution {
            lengths,
            values,
            deadlines,
            mass,
            tail,
            length_mass,
            sampler,
        })
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn deadlines(&self) -> &[u32] {
        &self.deadlines
    }

    pub fn max_length(&self) -> u32 {
        *self.lengths.last().unwrap()
    }

    pub fn max_deadline(&self) -> u32 {
        *self.deadlines.last().unwrap()
    }

    pub fn value_upper_bound(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Largest server state, `max deadline + max length`.
    pub fn max_state(&self) -> u32 {
        self.max_deadline() + self.max_length()
    }

    /// `max(max deadline + max length, |values|)`, the size parameter of
    /// the runtime and sample-size bounds.
    pub fn kappa(&self) -> usize {
        (self.max_state() as usize).max(self.values.len())
    }

    pub fn length_index(&self, length: u32) -> Result<usize> {
        self.lengths
            .binary_search(&length)
            .map_err(|_| Error::LengthOutsideSupport(length))
    }

    /// `P[L = length]`.
    pub fn length_mass(&self, length: u32) -> Result<f64> {
        Ok(self.length_mass[self.length_index(length)?])
    }

    /// Mass of a single atom (zero when the atom is not in the table).
    pub fn mass(&self, job: &JobType) -> f64 {
        let Ok(li) = self.length_index(job.length) else {
            return 0.0;
        };
        let Ok(vi) = self.values.binary_search_by(|x| x.total_cmp(&job.value)) else {
            return 0.0;
        };
        let Ok(di) = self.deadlines.binary_search(&job.deadline) else {
            return 0.0;
        };
        self.mass[(li * self.values.len() + vi) * self.deadlines.len() + di]
    }

    /// All atoms with positive mass in table order.
    pub fn atoms(&self) -> Vec<(JobType, f64)> {
        let (nv, nd) = (self.values.len(), self.deadlines.len());
        let mut out = Vec::new();
        for (li, &l) in self.lengths.iter().enumerate() {
            for (vi, &v) in self.values.iter().enumerate() {
                for (di, &d) in self.deadlines.iter().enumerate() {
                    let p = self.mass[(li * nv + vi) * nd + di];
                    if p > 0.0 {
                        out.push((JobType::new(l, v, d), p));
                    }
                }
            }
        }
        out
    }

    #[inline]
    fn tail_at(&self, li: usize, price: f64, state: u32) -> f64 {
        let vi = self.values.partition_point(|&v| !affordable(v, price));
        let di = self.deadlines.partition_point(|&d| d < state);
        let stride_v = self.deadlines.len() + 1;
        let stride_l = (self.values.len() + 1) * stride_v;
        self.tail[li * stride_l + vi * stride_v + di]
    }

    /// `P[L = length, V >= price, D >= state]`.
    pub fn joint_tail(&self, length: u32, price: f64, state: u32) -> Result<f64> {
        let li = self.length_index(length)?;
        Ok(self.tail_at(li, price, state))
    }

    /// `P[L = length] - P[L = length, V >= price, D >= state]`: the mass of
    /// length-`length` jobs that would walk away.
    pub fn reject_mass(&self, length: u32, price: f64, state: u32) -> Result<f64> {
        let li = self.length_index(length)?;
        Ok((self.length_mass[li] - self.tail_at(li, price, state)).max(0.0))
    }

    /// `P[V >= price, D >= state | L = length]`; `None` when the length has
    /// zero mass.
    pub fn conditional_tail(&self, length: u32, price: f64, state: u32) -> Result<Option<f64>> {
        let li = self.length_index(length)?;
        let m = self.length_mass[li];
        Ok((m > 0.0).then(|| self.tail_at(li, price, state) / m))
    }

    /// Draws one job.
    pub fn sample_job<R: Rng + ?Sized>(&self, rng: &mut R) -> JobType {
        let idx = self.sampler.sample(rng);
        let nd = self.deadlines.len();
        let nv = self.values.len();
        let di = idx % nd;
        let vi = (idx / nd) % nv;
        let li = idx / (nd * nv);
        JobType::new(self.lengths[li], self.values[vi], self.deadlines[di])
    }

    /// Moves `amount` of probability from one atom to another, returning the
    /// perturbed table.
    pub fn move_mass(&self, from: &JobType, to: &JobType, amount: f64) -> Result<Self> {
        let mut atoms = self.atoms();
        let available = self.mass(from);
        if amount < 0.0 || amount > available + 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "cannot move {amount} from an atom holding {available}"
            )));
        }
        atoms.push((*from, -amount));
        atoms.push((*to, amount));
        let mut merged: Vec<(JobType, f64)> = Vec::new();
        for (job, p) in atoms {
            match merged.iter_mut().find(|(j, _)| j == &job) {
                Some(entry) => entry.1 += p,
                None => merged.push((job, p)),
            }
        }
        for entry in &mut merged {
            entry.1 = entry.1.max(0.0);
        }
        let mut values = self.values.clone();
        values.push(to.value);
        Self::new(
            [self.lengths.clone(), vec![to.length]].concat(),
            values,
            [self.deadlines.clone(), vec![to.deadline]].concat(),
            &merged,
        )
    }
}

impl JobLaw for JobDistribution {
    fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    fn length_mass_at(&self, idx: usize) -> f64 {
        self.length_mass[idx]
    }

    fn max_deadline(&self) -> u32 {
        JobDistribution::max_deadline(self)
    }

    fn value_upper_bound(&self) -> f64 {
        JobDistribution::value_upper_bound(self)
    }

    fn accept_mass(&self, idx: usize, price: f64, state: u32) -> f64 {
        if price.is_infinite() {
            return 0.0;
        }
        self.tail_at(idx, price, state)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> JobType {
        self.sample_job(rng)
    }
}

/// A source of joint tails that [`distance`] can compare.
pub trait TailSource {
    fn tail_lengths(&self) -> &[u32];
    /// Prices at which tails are known.
    fn value_grid(&self) -> Vec<f64>;
    /// Largest state at which tails are known.
    fn max_tail_state(&self) -> u32;
    /// Whether tails are available at every price and state, not just on the grid.
    fn exhaustive(&self) -> bool;
    fn tail(&self, length: u32, price: f64, state: u32) -> Result<f64>;
}

impl TailSource for JobDistribution {
    fn tail_lengths(&self) -> &[u32] {
        &self.lengths
    }

    fn value_grid(&self) -> Vec<f64> {
        self.values.clone()
    }

    fn max_tail_state(&self) -> u32 {
        self.max_state()
    }

    fn exhaustive(&self) -> bool {
        true
    }

    fn tail(&self, length: u32, price: f64, state: u32) -> Result<f64> {
        self.joint_tail(length, price, state)
    }
}

/// Sup-distance between the joint tails of two distributions:
/// `max |P[L=l, V>=v, D>=s] - P'[L=l, V>=v, D>=s]|` over the length
/// support, the union of value supports and states `0..=D+L`.
///
/// When one side only knows tails on a grid (an empirical estimate) the
/// comparison runs over that grid.
pub fn distance<A: TailSource + ?Sized, B: TailSource + ?Sized>(a: &A, b: &B) -> Result<f64> {
    if a.tail_lengths() != b.tail_lengths() {
        return Err(Error::MismatchedSupports);
    }
    let (values, max_state) = match (a.exhaustive(), b.exhaustive()) {
        (true, true) => {
            let mut v = a.value_grid();
            v.extend(b.value_grid());
            (sorted_unique_f64(v), a.max_tail_state().max(b.max_tail_state()))
        }
        (true, false) => (b.value_grid(), b.max_tail_state()),
        (false, _) => (a.value_grid(), a.max_tail_state()),
    };
    let mut worst: f64 = 0.0;
    for &l in a.tail_lengths() {
        for &v in &values {
            for s in 0..=max_state {
                let d = (a.tail(l, v, s)? - b.tail(l, v, s)?).abs();
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}

/// First violation found by [`check_assumption1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioWitness {
    pub state: u32,
    pub lower_price: f64,
    pub higher_price: f64,
    /// The shorter length whose ratio exceeds that of the next defined length.
    pub length: u32,
    pub next_length: u32,
    pub ratio: f64,
    pub next_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Report {
    pub holds: bool,
    pub witness: Option<RatioWitness>,
}

/// Absolute slack allowed when comparing tail ratios.
pub const RATIO_TOLERANCE: f64 = 1e-9;

/// Checks that `P[V >= mu', D >= s | L = l] / P[V >= mu, D >= s | L = l]`
/// is non-decreasing in `l` for every state `s` in `0..=D+L` and every pair of
/// support values `mu < mu'`.
///
/// Ratios with a zero denominator (and hence a zero numerator) are undefined
/// and dropped from the chain, as are lengths with zero mass.
pub fn check_assumption1(q: &JobDistribution) -> Assumption1Report {
    let values = q.values();
    for s in 0..=q.max_state() {
        for (i, &mu) in values.iter().enumerate() {
            for &mu_hi in &values[i + 1..] {
                let mut previous: Option<(u32, f64)> = None;
                for (li, &l) in q.lengths().iter().enumerate() {
                    let denom = q.tail_at(li, mu, s);
                    if denom <= 0.0 {
                        continue;
                    }
                    let ratio = q.tail_at(li, mu_hi, s) / denom;
                    if let Some((pl, pr)) = previous {
                        if ratio < pr - RATIO_TOLERANCE {
                            return Assumption1Report {
                                holds: false,
                                witness: Some(RatioWitness {
                                    state: s,
                                    lower_price: mu,
                                    higher_price: mu_hi,
                                    length: pl,
                                    next_length: l,
                                    ratio: pr,
                                    next_ratio: ratio,
                                }),
                            };
                        }
                    }
                    previous = Some((l, ratio));
                }
            }
        }
    }
    Assumption1Report {
        holds: true,
        witness: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_value() -> JobDistribution {
        JobDistribution::independent(&[(1, 1.0)], &[(1.0, 0.5), (2.0, 0.5)], &[(5, 1.0)]).unwrap()
    }

    /// Direct enumeration of the atoms, independent of the suffix table.
    fn enumerate_tail(q: &JobDistribution, l: u32, v: f64, s: u32) -> f64 {
        q.atoms()
            .iter()
            .filter(|(j, _)| j.length == l && j.value >= v && j.deadline >= s)
            .map(|(_, p)| p)
            .sum()
    }

    #[test]
    fn joint_tail_point_mass() {
        let q = JobDistribution::point_mass(JobType::new(1, 2.0, 3)).unwrap();
        assert_eq!(q.joint_tail(1, 2.0, 3).unwrap(), 1.0);
        assert_eq!(q.joint_tail(1, 2.01, 3).unwrap(), 0.0);
        assert_eq!(q.joint_tail(1, 2.0, 4).unwrap(), 0.0);
    }

    #[test]
    fn joint_tail_two_atoms() {
        let q = two_value();
        assert_eq!(enumerate_tail(&q, 1, 2.0, 0), 0.5);
        assert_eq!(q.joint_tail(1, 2.0, 0).unwrap(), 0.5);
        assert_eq!(q.joint_tail(1, 1.5, 0).unwrap(), 0.5);
        assert_eq!(q.joint_tail(1, 0.0, 0).unwrap(), 1.0);
    }

    #[test]
    fn unknown_length_rejected() {
        let q = two_value();
        assert_eq!(q.joint_tail(3, 1.0, 0), Err(Error::LengthOutsideSupport(3)));
        assert_eq!(q.reject_mass(0, 1.0, 0), Err(Error::LengthOutsideSupport(0)));
    }

    #[test]
    fn reject_mass_examples() {
        let q = JobDistribution::point_mass(JobType::new(1, 2.0, 3)).unwrap();
        assert_eq!(q.reject_mass(1, 2.0, 3).unwrap(), 0.0);
        assert_eq!(q.reject_mass(1, 3.0, 3).unwrap(), 1.0);
        assert_eq!(two_value().reject_mass(1, 2.0, 0).unwrap(), 0.5);
    }

    #[test]
    fn masses_must_sum_to_one() {
        let atoms = [(JobType::new(1, 1.0, 0), 0.5), (JobType::new(1, 2.0, 0), 0.49)];
        assert!(matches!(
            JobDistribution::from_atoms(&atoms),
            Err(Error::InvalidDistribution(_))
        ));
        let atoms = [(JobType::new(1, 1.0, 0), 0.5), (JobType::new(1, 2.0, 0), 0.5 + 1e-10)];
        let q = JobDistribution::from_atoms(&atoms).unwrap();
        let total: f64 = q.atoms().iter().map(|a| a.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atoms_outside_support_rejected() {
        let atoms = [(JobType::new(2, 1.0, 0), 1.0)];
        assert_eq!(
            JobDistribution::new(vec![1], vec![1.0], vec![0], &atoms),
            Err(Error::LengthOutsideSupport(2))
        );
        assert!(JobDistribution::new(vec![2], vec![1.0], vec![1], &atoms).is_err());
        assert_eq!(
            JobDistribution::new(vec![2], vec![], vec![0], &atoms),
            Err(Error::EmptyValueSupport)
        );
    }

    #[test]
    fn assumption1_independent_holds() {
        let q = JobDistribution::independent(
            &[(1, 0.3), (2, 0.7)],
            &[(1.0, 0.2), (2.0, 0.5), (4.0, 0.3)],
            &[(0, 0.5), (3, 0.5)],
        )
        .unwrap();
        assert!(check_assumption1(&q).holds);
    }

    #[test]
    fn assumption1_deterministic_decreasing_value_fails() {
        let q = JobDistribution::from_atoms(&[
            (JobType::new(1, 5.0, 9), 0.5),
            (JobType::new(2, 2.0, 9), 0.5),
        ])
        .unwrap();
        let report = check_assumption1(&q);
        assert!(!report.holds);
        let w = report.witness.unwrap();
        assert_eq!((w.lower_price, w.higher_price), (2.0, 5.0));
        assert_eq!((w.length, w.next_length), (1, 2));
        assert_eq!((w.ratio, w.next_ratio), (1.0, 0.0));
    }

    #[test]
    fn distance_examples() {
        let q = two_value();
        assert_eq!(distance(&q, &q).unwrap(), 0.0);
        let a = JobDistribution::point_mass(JobType::new(1, 2.0, 3)).unwrap();
        let b = JobDistribution::point_mass(JobType::new(1, 1.0, 3)).unwrap();
        assert_eq!(distance(&a, &b).unwrap(), 1.0);
        assert_eq!(distance(&b, &a).unwrap(), 1.0);

        let moved = q
            .move_mass(&JobType::new(1, 2.0, 5), &JobType::new(1, 1.0, 5), 0.01)
            .unwrap();
        assert!((distance(&q, &moved).unwrap() - 0.01).abs() < 1e-15);

        let other = JobDistribution::point_mass(JobType::new(2, 1.0, 0)).unwrap();
        assert_eq!(distance(&q, &other), Err(Error::MismatchedSupports));
    }

    #[test]
    fn sampling_point_mass_and_determinism() {
        let job = JobType::new(2, 3.5, 1);
        let q = JobDistribution::point_mass(job).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(q.sample_job(&mut rng), job);
        }
        let q = two_value();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| q.sample_job(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn sampling_frequencies_match_masses() {
        let q = JobDistribution::from_atoms(&[
            (JobType::new(1, 1.0, 0), 0.1),
            (JobType::new(1, 2.0, 2), 0.25),
            (JobType::new(2, 1.0, 1), 0.4),
            (JobType::new(3, 4.0, 0), 0.25),
        ])
        .unwrap();
        let atoms = q.atoms();
        let mut counts = vec![0usize; atoms.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 1_000_000;
        for _ in 0..draws {
            let job = q.sample_job(&mut rng);
            let k = atoms.iter().position(|(j, _)| *j == job).unwrap();
            counts[k] += 1;
        }
        for ((_, p), c) in atoms.iter().zip(counts) {
            assert!((c as f64 / draws as f64 - p).abs() < 5e-3);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_distribution() -> impl Strategy<Value = JobDistribution> {
            (1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(nl, nv, nd)| {
                proptest::collection::vec(0.0f64..1.0, nl * nv * nd).prop_map(move |w| {
                    let total: f64 = w.iter().sum::<f64>() + 1e-3;
                    let mut atoms = Vec::new();
                    let mut k = 0;
                    for l in 0..nl {
                        for v in 0..nv {
                            for d in 0..nd {
                                let p = if k == 0 { w[k] + 1e-3 } else { w[k] } / total;
                                atoms.push((
                                    JobType::new(l as u32 + 1, v as f64 * 1.5, d as u32 * 2),
                                    p,
                                ));
                                k += 1;
                            }
                        }
                    }
                    JobDistribution::from_atoms(&atoms).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn joint_tail_matches_enumeration_and_is_monotone(q in arb_distribution()) {
                let lm: f64 = q.lengths().iter().map(|&l| q.length_mass(l).unwrap()).sum();
                prop_assert!((lm - 1.0).abs() <= 1e-12);
                for &l in q.lengths() {
                    prop_assert!((q.joint_tail(l, 0.0, 0).unwrap() - q.length_mass(l).unwrap()).abs() <= 1e-15);
                    for &v in q.values() {
                        for s in 0..=q.max_state() {
                            let t = q.joint_tail(l, v, s).unwrap();
                            prop_assert!((t - enumerate_tail(&q, l, v, s)).abs() <= 1e-12);
                            prop_assert!(q.joint_tail(l, v + 1.0, s).unwrap() <= t + 1e-15);
                            prop_assert!(q.joint_tail(l, v, s + 1).unwrap() <= t + 1e-15);
                        }
                    }
                }
            }

            #[test]
            fn distance_is_a_symmetric_nonnegative_gap(a in arb_distribution(), b in arb_distribution()) {
                prop_assert_eq!(distance(&a, &a).unwrap(), 0.0);
                if a.lengths() == b.lengths() {
                    let ab = distance(&a, &b).unwrap();
                    prop_assert!(ab >= 0.0);
                    prop_assert_eq!(ab, distance(&b, &a).unwrap());
                }
            }
        }
    }
}
