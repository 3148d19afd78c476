//! Value distributions built by scaling or shifting a log-concave base
//! variable by a length-dependent amount.
//!
//! With `Z` log-concave and `gamma_1 <= gamma_2 <= ...`, a value conditioned
//! on length `l` distributed like `gamma_l * Z`, `floor(gamma_l * Z)`,
//! `Z + gamma_l` or `floor(Z + gamma_l)` satisfies the tail-ratio condition
//! checked by [`check_assumption1`](super::check_assumption1). Deadlines are
//! drawn independently of length and value.
//!
//! Lattice bases (geometric, Poisson, ...) enter the floor constructions
//! through a continuous log-concave variable `Z_c` with `floor(Z_c) ~ Y`:
//! its survival function interpolates `log P[Y >= n]` linearly between
//! integers. The plain `scale` and `shift` constructions apply to `Y`
//! directly, which only preserves the condition for a shared scale or for
//! shifts that differ by whole numbers.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, Discrete, DiscreteCDF, Normal, Poisson};

use super::{ContinuousValueDistribution, JobDistribution, JobType, MASS_TOLERANCE};
use crate::error::{Error, Result};

/// The base variable `Z` and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum BaseKind {
    /// Failures before the first success, support `{0, 1, ...}`.
    Geometric { p: f64 },
    Poisson { lambda: f64 },
    Binomial { n: u32, p: f64 },
    /// Uniform on the integers `lo..=hi`.
    DiscreteUniform { lo: i64, hi: i64 },
    /// Uniform on `[lo, hi)`.
    ContinuousUniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// Explicit mass function on `offset, offset + 1, ...`.
    Pmf { offset: i64, weights: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    Scale,
    FloorScale,
    Shift,
    FloorShift,
}

impl Construction {
    pub fn is_floor(self) -> bool {
        matches!(self, Construction::FloorScale | Construction::FloorShift)
    }

    pub fn is_scale(self) -> bool {
        matches!(self, Construction::Scale | Construction::FloorScale)
    }

    /// Value the construction assigns to a base draw `z`, before flooring.
    pub(crate) fn apply(self, gamma: f64, z: f64) -> f64 {
        if self.is_scale() {
            gamma * z
        } else {
            z + gamma
        }
    }

    /// Base threshold `x` such that `apply(gamma, z) >= price` iff `z >= x`.
    pub(crate) fn preimage(self, gamma: f64, price: f64) -> f64 {
        if self.is_scale() {
            price / gamma
        } else {
            price - gamma
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidFamily(format!("{name} must lie in [0, 1], got {p}")))
    }
}

impl BaseKind {
    pub fn is_discrete(&self) -> bool {
        !matches!(
            self,
            BaseKind::ContinuousUniform { .. } | BaseKind::Exponential { .. } | BaseKind::Gaussian { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseKind::Geometric { p } => {
                check_probability("geometric p", *p)?;
                if *p == 0.0 {
                    return Err(Error::InvalidFamily("geometric p must be positive".into()));
                }
            }
            BaseKind::Poisson { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::InvalidFamily("poisson lambda must be positive".into()));
                }
            }
            BaseKind::Binomial { p, .. } => check_probability("binomial p", *p)?,
            BaseKind::DiscreteUniform { lo, hi } => {
                if lo > hi {
                    return Err(Error::InvalidFamily(format!("empty range {lo}..={hi}")));
                }
            }
            BaseKind::ContinuousUniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidFamily(format!("empty interval [{lo}, {hi})")));
                }
            }
            BaseKind::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::InvalidFamily("exponential rate must be positive".into()));
                }
            }
            BaseKind::Gaussian { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && *sd > 0.0) {
                    return Err(Error::InvalidFamily("gaussian sd must be positive".into()));
                }
            }
            BaseKind::Pmf { weights, .. } => {
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::InvalidFamily("pmf weights must be non-negative".into()));
                }
                let first = weights.iter().position(|w| *w > 0.0);
                let last = weights.iter().rposition(|w| *w > 0.0);
                let (Some(first), Some(last)) = (first, last) else {
                    return Err(Error::InvalidFamily("pmf has no mass".into()));
                };
                if weights[first..=last].contains(&0.0) {
                    return Err(Error::NonContiguousSupport);
                }
            }
        }
        Ok(())
    }

    /// Smallest and (if finite) largest point of a lattice base's support.
    pub fn lattice_range(&self) -> (i64, Option<i64>) {
        match self {
            BaseKind::Geometric { p } if *p >= 1.0 => (0, Some(0)),
            BaseKind::Geometric { .. } | BaseKind::Poisson { .. } => (0, None),
            BaseKind::Binomial { n, p } => {
                if *p == 0.0 {
                    (0, Some(0))
                } else if *p == 1.0 {
                    (*n as i64, Some(*n as i64))
                } else {
                    (0, Some(*n as i64))
                }
            }
            BaseKind::DiscreteUniform { lo, hi } => (*lo, Some(*hi)),
            BaseKind::Pmf { offset, weights } => {
                let first = weights.iter().position(|w| *w > 0.0).unwrap_or(0);
                let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
                (offset + first as i64, Some(offset + last as i64))
            }
            _ => panic!("lattice_range on a continuous base"),
        }
    }

    /// `P[Y = k]` for a lattice base.
    pub fn pmf(&self, k: i64) -> f64 {
        let (lo, hi) = self.lattice_range();
        if k < lo || hi.is_some_and(|h| k > h) {
            return 0.0;
        }
        match self {
            BaseKind::Geometric { p } => p * (1.0 - p).powi(k as i32),
            BaseKind::Poisson { lambda } => Poisson::new(*lambda).unwrap().pmf(k as u64),
            BaseKind::Binomial { n, p } => Binomial::new(*p, *n as u64).unwrap().pmf(k as u64),
            BaseKind::DiscreteUniform { lo, hi } => 1.0 / (hi - lo + 1) as f64,
            BaseKind::Pmf { offset, weights } => {
                let total: f64 = weights.iter().sum();
                weights[(k - offset) as usize] / total
            }
            _ => panic!("pmf on a continuous base"),
        }
    }

    /// `P[Y >= k]` for a lattice base.
    pub fn lattice_survival(&self, k: i64) -> f64 {
        let (lo, hi) = self.lattice_range();
        if k <= lo {
            return 1.0;
        }
        if hi.is_some_and(|h| k > h) {
            return 0.0;
        }
        match self {
            BaseKind::Geometric { p } => (1.0 - p).powi(k as i32),
            BaseKind::Poisson { lambda } => Poisson::new(*lambda).unwrap().sf((k - 1) as u64),
            BaseKind::Binomial { n, p } => Binomial::new(*p, *n as u64).unwrap().sf((k - 1) as u64),
            BaseKind::DiscreteUniform { lo, hi } => (hi - k + 1) as f64 / (hi - lo + 1) as f64,
            BaseKind::Pmf { offset, weights } => {
                let total: f64 = weights.iter().sum();
                let start = (k - offset) as usize;
                weights[start..].iter().sum::<f64>() / total
            }
            _ => panic!("lattice_survival on a continuous base"),
        }
    }

    /// `P[Z >= x]` for the continuous base; for a lattice base, the survival
    /// function of its log-linear interpolant `Z_c` with `floor(Z_c) ~ Y`.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            BaseKind::ContinuousUniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
            BaseKind::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            BaseKind::Gaussian { mean, sd } => Normal::new(*mean, *sd).unwrap().sf(x),
            _ => self.interpolated_survival(x),
        }
    }

    fn interpolated_survival(&self, x: f64) -> f64 {
        let (lo, _) = self.lattice_range();
        if x <= lo as f64 {
            return 1.0;
        }
        let n = x.floor() as i64;
        let u = x - n as f64;
        let at = self.lattice_survival(n);
        if at <= 0.0 || u == 0.0 {
            return at;
        }
        let next = self.lattice_survival(n + 1);
        if next > 0.0 {
            return at * (next / at).powf(u);
        }
        // Top cell [n, n + 1): decay to zero with a log-slope at least as
        // steep as the previous cell so the interpolant stays log-concave.
        let prev = self.lattice_survival(n - 1);
        let slope = (at / prev).ln();
        let k = (-slope).max(1.0);
        at * (1.0 - u).powf(k)
    }

    /// Supremum of the base's support, if finite.
    pub fn upper_support(&self) -> Option<f64> {
        match self {
            BaseKind::ContinuousUniform { hi, .. } => Some(*hi),
            BaseKind::Exponential { .. } | BaseKind::Gaussian { .. } => None,
            _ => self.lattice_range().1.map(|h| (h + 1) as f64),
        }
    }

    /// Infimum of the base's support, if finite.
    pub fn lower_support(&self) -> Option<f64> {
        match self {
            BaseKind::ContinuousUniform { lo, .. } => Some(*lo),
            BaseKind::Exponential { .. } => Some(0.0),
            BaseKind::Gaussian { .. } => None,
            _ => Some(self.lattice_range().0 as f64),
        }
    }

    /// Draws `Z` for a continuous base.
    pub(crate) fn sample_continuous<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        match self {
            BaseKind::ContinuousUniform { lo, hi } => lo + (hi - lo) * u,
            BaseKind::Exponential { rate } => -(1.0 - u).ln() / rate,
            BaseKind::Gaussian { mean, sd } => {
                Normal::new(*mean, *sd).unwrap().inverse_cdf(u.max(f64::MIN_POSITIVE))
            }
            _ => panic!("sample_continuous on a lattice base"),
        }
    }
}

/// Parameters of a log-concave job family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogConcaveFamilySpec {
    #[serde(flatten)]
    pub base: BaseKind,
    pub construction: Construction,
    /// Per-length spread/shift, non-decreasing in length.
    pub gammas: BTreeMap<u32, f64>,
    pub length_marginal: BTreeMap<u32, f64>,
    pub deadline_marginal: BTreeMap<u32, f64>,
    /// Values are clamped into `[0, value_cap]`; required when the
    /// construction has unbounded support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_cap: Option<f64>,
}

fn check_marginal<K: std::fmt::Display>(name: &str, m: &BTreeMap<K, f64>) -> Result<()> {
    if m.is_empty() {
        return Err(Error::InvalidFamily(format!("{name} is empty")));
    }
    if let Some((k, p)) = m.iter().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidFamily(format!("{name}[{k}] = {p} outside [0, 1]")));
    }
    let total: f64 = m.values().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidFamily(format!("{name} sums to {total}")));
    }
    Ok(())
}

impl LogConcaveFamilySpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        check_marginal("length_marginal", &self.length_marginal)?;
        check_marginal("deadline_marginal", &self.deadline_marginal)?;
        if self.length_marginal.contains_key(&0) {
            return Err(Error::InvalidFamily("lengths must be positive".into()));
        }
        for l in self.length_marginal.keys() {
            if !self.gammas.contains_key(l) {
                return Err(Error::InvalidFamily(format!("no gamma for length {l}")));
            }
        }
        let mut previous: Option<f64> = None;
        for (&l, &g) in &self.gammas {
            if !g.is_finite() {
                return Err(Error::InvalidFamily(format!("gamma for length {l} is not finite")));
            }
            if self.construction.is_scale() && g <= 0.0 {
                return Err(Error::InvalidFamily(format!(
                    "scale gamma for length {l} must be positive"
                )));
            }
            if let Some(p) = previous {
                if g < p {
                    return Err(Error::NonMonotoneGammas {
                        length: l,
                        previous: p,
                        current: g,
                    });
                }
            }
            previous = Some(g);
        }
        if let Some(cap) = self.value_cap {
            if !(cap.is_finite() && cap >= 0.0) {
                return Err(Error::InvalidFamily(format!("value_cap {cap} must be non-negative")));
            }
        }
        if self.base.is_discrete() && !self.construction.is_floor() {
            let gammas: Vec<f64> = self
                .length_marginal
                .keys()
                .map(|l| self.gammas[l])
                .collect();
            let first = gammas[0];
            let constant = gammas.iter().all(|g| *g == first);
            let integral_steps = gammas
                .iter()
                .all(|g| ((g - first) - (g - first).round()).abs() < 1e-9);
            match self.construction {
                Construction::Scale if !constant => {
                    return Err(Error::InvalidFamily(
                        "scaling a lattice base needs one gamma for all lengths; use floor-scale"
                            .into(),
                    ))
                }
                Construction::Shift if !integral_steps => {
                    return Err(Error::InvalidFamily(
                        "shifts of a lattice base must differ by whole numbers; use floor-shift"
                            .into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Whether the family produces finitely many value atoms.
    pub fn is_tabular(&self) -> bool {
        self.base.is_discrete() || self.construction.is_floor()
    }

    /// Upper end of the value range for one gamma, before the cap.
    fn natural_top(&self, gamma: f64) -> Option<f64> {
        self.base
            .upper_support()
            .map(|u| self.construction.apply(gamma, u))
    }

    /// Cap actually applied to values: `value_cap`, or the largest value
    /// any length can produce.
    pub(crate) fn effective_cap(&self) -> Result<f64> {
        let natural = self
            .length_marginal
            .keys()
            .map(|l| self.natural_top(self.gammas[l]))
            .try_fold(0.0f64, |acc, t| t.map(|t| acc.max(t)));
        match (self.value_cap, natural) {
            (Some(cap), Some(n)) => Ok(cap.min(n.max(0.0))),
            (Some(cap), None) => Ok(cap),
            (None, Some(n)) => Ok(n.max(0.0)),
            (None, None) => Err(Error::InvalidFamily(
                "unbounded value support: set value_cap".into(),
            )),
        }
    }

    /// Conditional law of the value for one gamma as `(value, probability)`.
    fn value_atoms(&self, gamma: f64) -> Result<Vec<(f64, f64)>> {
        let c = self.construction;
        if c.is_floor() {
            let cap = self.effective_cap()?;
            // Largest value kept: the cap rounded down, or the largest integer
            // strictly below the natural (exclusive) upper end.
            let top = if self.value_cap.is_some_and(|c| c <= cap) {
                cap.floor()
            } else {
                cap.ceil() - 1.0
            }
            .max(0.0) as i64;
            let at_least = |k: i64| -> f64 {
                if k <= 0 {
                    1.0
                } else if k > top {
                    0.0
                } else {
                    self.base.survival(c.preimage(gamma, k as f64))
                }
            };
            Ok((0..=top)
                .map(|k| (k as f64, (at_least(k) - at_least(k + 1)).max(0.0)))
                .collect())
        } else {
            let (lo, hi) = self.base.lattice_range();
            if hi.is_none() && self.value_cap.is_none() {
                return Err(Error::InvalidFamily(
                    "unbounded value support: set value_cap".into(),
                ));
            }
            let cap = self.value_cap.unwrap_or(f64::INFINITY);
            let mut atoms = Vec::new();
            let mut y = lo;
            loop {
                let v = c.apply(gamma, y as f64).max(0.0);
                if v >= cap {
                    atoms.push((cap, self.base.lattice_survival(y)));
                    break;
                }
                atoms.push((v, self.base.pmf(y)));
                if hi.is_some_and(|h| y >= h) {
                    break;
                }
                y += 1;
            }
            Ok(atoms)
        }
    }
}

/// Builds the tabular job distribution described by a log-concave family.
///
/// Lengths follow `length_marginal`, deadlines follow `deadline_marginal`
/// independently, and the value given length `l` follows the construction
/// with `gammas[l]`, clamped to `[0, value_cap]`.
pub fn build_logconcave_family(spec: &LogConcaveFamilySpec) -> Result<JobDistribution> {
    spec.validate()?;
    if !spec.is_tabular() {
        return Err(Error::InvalidFamily(
            "continuous values need a price grid; use build_continuous_family".into(),
        ));
    }
    let mut atoms = Vec::new();
    for (&l, &pl) in &spec.length_marginal {
        let values = spec.value_atoms(spec.gammas[&l])?;
        for (v, pv) in values {
            for (&d, &pd) in &spec.deadline_marginal {
                let p = pl * pv * pd;
                if p > 0.0 {
                    atoms.push((JobType::new(l, v, d), p));
                }
            }
        }
    }
    // Merge atoms that land on the same value.
    atoms.sort_by(|a, b| {
        (a.0.length, a.0.deadline)
            .cmp(&(b.0.length, b.0.deadline))
            .then(a.0.value.total_cmp(&b.0.value))
    });
    let mut merged: Vec<(JobType, f64)> = Vec::with_capacity(atoms.len());
    for (job, p) in atoms {
        match merged.last_mut() {
            Some(last) if last.0 == job => last.1 += p,
            _ => merged.push((job, p)),
        }
    }
    let lengths = spec.length_marginal.keys().copied().collect();
    let deadlines = spec.deadline_marginal.keys().copied().collect();
    let values = merged.iter().map(|(j, _)| j.value).collect();
    JobDistribution::new(lengths, values, deadlines, &merged)
}

/// Builds the family as a [`ContinuousValueDistribution`], for use with a
/// price grid. Tabular families are wrapped unchanged.
pub fn build_continuous_family(spec: &LogConcaveFamilySpec) -> Result<ContinuousValueDistribution> {
    spec.validate()?;
    if spec.is_tabular() {
        return Ok(ContinuousValueDistribution::from_discrete(
            build_logconcave_family(spec)?,
        ));
    }
    ContinuousValueDistribution::from_family(spec)
}
