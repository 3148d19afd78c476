//! Job laws whose value may be continuous. Lengths and deadlines stay
//! finite; the value is only ever queried through its tail.

use std::fmt;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::family::{BaseKind, Construction, LogConcaveFamilySpec};
use super::{JobDistribution, JobLaw, JobType};
use crate::error::{Error, Result};

type TailFn = dyn Fn(u32, u32, f64) -> f64 + Send + Sync;
type SampleFn = dyn Fn(&mut dyn RngCore) -> JobType + Send + Sync;

#[derive(Clone)]
enum Inner {
    Tabular(JobDistribution),
    Family {
        base: BaseKind,
        construction: Construction,
        gammas: Vec<f64>,
        cap: f64,
        deadlines: Vec<u32>,
        /// `deadline_tail[j] = P[D >= deadlines[j]]`, padded with a trailing zero.
        deadline_tail: Vec<f64>,
        length_sampler: WeightedIndex<f64>,
        deadline_sampler: WeightedIndex<f64>,
    },
    Custom {
        max_deadline: u32,
        tail: Arc<TailFn>,
        sampler: Arc<SampleFn>,
    },
}

/// Joint law of `(L, V, D)` described by the conditional tail
/// `P[V >= price, D >= s | L = l]` and the length marginal.
#[derive(Clone)]
pub struct ContinuousValueDistribution {
    lengths: Vec<u32>,
    length_mass: Vec<f64>,
    value_upper_bound: f64,
    inner: Inner,
}

impl fmt::Debug for ContinuousValueDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.inner {
            Inner::Tabular(_) => "tabular",
            Inner::Family { .. } => "family",
            Inner::Custom { .. } => "custom",
        };
        f.debug_struct("ContinuousValueDistribution")
            .field("kind", &kind)
            .field("lengths", &self.lengths)
            .field("length_mass", &self.length_mass)
            .field("value_upper_bound", &self.value_upper_bound)
            .finish()
    }
}

impl ContinuousValueDistribution {
    /// Wraps a tabular distribution.
    pub fn from_discrete(q: JobDistribution) -> Self {
        let lengths = q.lengths().to_vec();
        let length_mass = lengths.iter().map(|&l| q.length_mass(l).unwrap()).collect();
        ContinuousValueDistribution {
            lengths,
            length_mass,
            value_upper_bound: q.value_upper_bound(),
            inner: Inner::Tabular(q),
        }
    }

    pub(crate) fn from_family(spec: &LogConcaveFamilySpec) -> Result<Self> {
        let cap = spec.effective_cap()?;
        let lengths: Vec<u32> = spec.length_marginal.keys().copied().collect();
        let length_mass: Vec<f64> = spec.length_marginal.values().copied().collect();
        let gammas = lengths.iter().map(|l| spec.gammas[l]).collect();
        let deadlines: Vec<u32> = spec.deadline_marginal.keys().copied().collect();
        let deadline_mass: Vec<f64> = spec.deadline_marginal.values().copied().collect();
        let mut deadline_tail = vec![0.0; deadlines.len() + 1];
        for j in (0..deadlines.len()).rev() {
            deadline_tail[j] = deadline_tail[j + 1] + deadline_mass[j];
        }
        let sampler_err = |e| Error::InvalidFamily(format!("cannot sample: {e}"));
        Ok(ContinuousValueDistribution {
            lengths,
            value_upper_bound: cap,
            inner: Inner::Family {
                base: spec.base.clone(),
                construction: spec.construction,
                gammas,
                cap,
                deadlines,
                deadline_tail,
                length_sampler: WeightedIndex::new(&length_mass).map_err(sampler_err)?,
                deadline_sampler: WeightedIndex::new(&deadline_mass).map_err(sampler_err)?,
            },
            length_mass,
        })
    }

    /// A law given directly by its conditional tail and a sampler.
    ///
    /// `tail(l, s, price)` must return `P[V >= price, D >= s | L = l]`.
    /// Nothing checks it for consistency up front; the grid solver rejects
    /// tails that increase in price.
    pub fn from_fns<T, S>(
        length_marginal: &[(u32, f64)],
        max_deadline: u32,
        value_upper_bound: f64,
        tail: T,
        sampler: S,
    ) -> Result<Self>
    where
        T: Fn(u32, u32, f64) -> f64 + Send + Sync + 'static,
        S: Fn(&mut dyn RngCore) -> JobType + Send + Sync + 'static,
    {
        let mut marginal = length_marginal.to_vec();
        marginal.sort_by_key(|x| x.0);
        if marginal.is_empty() || marginal.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidDistribution(
                "length marginal must list distinct lengths".into(),
            ));
        }
        if !(value_upper_bound.is_finite() && value_upper_bound >= 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "value bound {value_upper_bound} must be finite and non-negative"
            )));
        }
        Ok(ContinuousValueDistribution {
            lengths: marginal.iter().map(|x| x.0).collect(),
            length_mass: marginal.iter().map(|x| x.1).collect(),
            value_upper_bound,
            inner: Inner::Custom {
                max_deadline,
                tail: Arc::new(tail),
                sampler: Arc::new(sampler),
            },
        })
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn length_mass(&self, length: u32) -> Result<f64> {
        self.length_idx(length).map(|i| self.length_mass[i])
    }

    pub fn value_upper_bound(&self) -> f64 {
        self.value_upper_bound
    }

    /// The wrapped table, when this law came from one.
    pub fn as_discrete(&self) -> Option<&JobDistribution> {
        match &self.inner {
            Inner::Tabular(q) => Some(q),
            _ => None,
        }
    }

    fn length_idx(&self, length: u32) -> Result<usize> {
        self.lengths
            .binary_search(&length)
            .map_err(|_| Error::LengthOutsideSupport(length))
    }

    /// `P[V >= price, D >= state | L = length]`.
    pub fn tail(&self, length: u32, state: u32, price: f64) -> Result<f64> {
        let li = self.length_idx(length)?;
        Ok(self.tail_at(li, state, price))
    }

    fn tail_at(&self, li: usize, state: u32, price: f64) -> f64 {
        match &self.inner {
            Inner::Tabular(q) => {
                let m = self.length_mass[li];
                if m > 0.0 {
                    q.accept_mass(li, price, state) / m
                } else {
                    0.0
                }
            }
            Inner::Family {
                base,
                construction,
                gammas,
                cap,
                deadlines,
                deadline_tail,
                ..
            } => {
                let d = deadline_tail[deadlines.partition_point(|&d| d < state)];
                let v = if price <= 0.0 {
                    1.0
                } else if price > *cap {
                    0.0
                } else {
                    base.survival(construction.preimage(gammas[li], price))
                };
                v * d
            }
            Inner::Custom { tail, .. } => tail(self.lengths[li], state, price),
        }
    }
}

impl JobLaw for ContinuousValueDistribution {
    fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    fn length_mass_at(&self, idx: usize) -> f64 {
        self.length_mass[idx]
    }

    fn max_deadline(&self) -> u32 {
        match &self.inner {
            Inner::Tabular(q) => q.max_deadline(),
            Inner::Family { deadlines, .. } => *deadlines.last().unwrap(),
            Inner::Custom { max_deadline, .. } => *max_deadline,
        }
    }

    fn value_upper_bound(&self) -> f64 {
        self.value_upper_bound
    }

    fn accept_mass(&self, idx: usize, price: f64, state: u32) -> f64 {
        if price.is_infinite() {
            return 0.0;
        }
        match &self.inner {
            Inner::Tabular(q) => q.accept_mass(idx, price, state),
            _ => self.length_mass[idx] * self.tail_at(idx, state, price),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> JobType {
        match &self.inner {
            Inner::Tabular(q) => q.sample_job(rng),
            Inner::Family {
                base,
                construction,
                gammas,
                cap,
                deadlines,
                length_sampler,
                deadline_sampler,
                ..
            } => {
                let li = length_sampler.sample(rng);
                let z = base.sample_continuous(rng);
                let value = construction.apply(gammas[li], z).clamp(0.0, *cap);
                let deadline = deadlines[deadline_sampler.sample(rng)];
                JobType::new(self.lengths[li], value, deadline)
            }
            Inner::Custom { sampler, .. } => {
                let mut inner = ChaCha8Rng::seed_from_u64(rng.gen());
                sampler(&mut inner)
            }
        }
    }
}
