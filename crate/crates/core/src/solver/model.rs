use crate::distributions::{ContinuousValueDistribution, EmpiricalDistribution, JobDistribution, JobLaw};
use crate::error::{Error, Result};

/// What the backward induction needs from a job law: candidate prices and
/// the joint acceptance mass `P[L = l, V >= price, D >= s]` at each of them.
pub trait PriceModel {
    fn model_lengths(&self) -> Vec<u32>;
    /// `P[L = lengths[idx]]`.
    fn model_length_mass(&self, idx: usize) -> Result<f64>;
    /// Largest server state.
    fn model_max_state(&self) -> u32;
    fn model_value_bound(&self) -> f64;
    /// Finite candidate prices in increasing order.
    fn candidate_prices(&self) -> Result<Vec<f64>>;
    fn model_joint(&self, idx: usize, price: f64, state: u32) -> Result<f64>;
}

impl PriceModel for JobDistribution {
    fn model_lengths(&self) -> Vec<u32> {
        self.lengths().to_vec()
    }

    fn model_length_mass(&self, idx: usize) -> Result<f64> {
        Ok(self.length_mass_at(idx))
    }

    fn model_max_state(&self) -> u32 {
        self.max_state()
    }

    fn model_value_bound(&self) -> f64 {
        self.value_upper_bound()
    }

    fn candidate_prices(&self) -> Result<Vec<f64>> {
        if self.values().is_empty() {
            return Err(Error::EmptyValueSupport);
        }
        Ok(self.values().to_vec())
    }

    fn model_joint(&self, idx: usize, price: f64, state: u32) -> Result<f64> {
        Ok(self.accept_mass(idx, price, state))
    }
}

impl PriceModel for EmpiricalDistribution {
    fn model_lengths(&self) -> Vec<u32> {
        self.lengths().to_vec()
    }

    fn model_length_mass(&self, idx: usize) -> Result<f64> {
        self.length_mass(self.lengths()[idx])
    }

    fn model_max_state(&self) -> u32 {
        self.max_state()
    }

    fn model_value_bound(&self) -> f64 {
        self.values().last().copied().unwrap_or(0.0)
    }

    fn candidate_prices(&self) -> Result<Vec<f64>> {
        if self.values().is_empty() {
            return Err(Error::EmptyValueSupport);
        }
        Ok(self.values().to_vec())
    }

    fn model_joint(&self, idx: usize, price: f64, state: u32) -> Result<f64> {
        self.estimate(self.lengths()[idx], price, state)
    }
}

/// Price grid `{0, eta, 2 eta, ..., floor(V / eta) eta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub eta: f64,
    pub value_upper_bound: f64,
}

impl GridSpec {
    pub fn new(eta: f64, value_upper_bound: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!("grid pitch {eta} must be positive")));
        }
        if !(value_upper_bound.is_finite() && value_upper_bound >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "value bound {value_upper_bound} must be finite and non-negative"
            )));
        }
        Ok(GridSpec {
            eta,
            value_upper_bound,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        let steps = (self.value_upper_bound / self.eta + 1e-9).floor() as usize;
        (0..=steps).map(|k| k as f64 * self.eta).collect()
    }
}

/// A law with continuous values, priced on a grid.
#[derive(Debug, Clone)]
pub struct GridModel<'a> {
    law: &'a ContinuousValueDistribution,
    grid: GridSpec,
}

impl<'a> GridModel<'a> {
    pub fn new(law: &'a ContinuousValueDistribution, grid: GridSpec) -> Self {
        GridModel { law, grid }
    }
}

impl PriceModel for GridModel<'_> {
    fn model_lengths(&self) -> Vec<u32> {
        self.law.lengths().to_vec()
    }

    fn model_length_mass(&self, idx: usize) -> Result<f64> {
        Ok(self.law.length_mass_at(idx))
    }

    fn model_max_state(&self) -> u32 {
        self.law.max_state()
    }

    fn model_value_bound(&self) -> f64 {
        self.grid.value_upper_bound
    }

    fn candidate_prices(&self) -> Result<Vec<f64>> {
        Ok(self.grid.points())
    }

    fn model_joint(&self, idx: usize, price: f64, state: u32) -> Result<f64> {
        Ok(self.law.accept_mass(idx, price, state))
    }
}

/// Joint acceptance masses tabulated at every candidate price and state.
#[derive(Debug, Clone)]
pub struct AcceptanceTable {
    pub lengths: Vec<u32>,
    pub length_mass: Vec<f64>,
    pub prices: Vec<f64>,
    pub max_state: u32,
    pub value_bound: f64,
    /// Dense `[length][price][state]`.
    joint: Vec<f64>,
}

impl AcceptanceTable {
    /// Tabulates a model, rejecting tails that grow with the price.
    pub fn build<M: PriceModel + ?Sized>(model: &M) -> Result<Self> {
        let lengths = model.model_lengths();
        let prices = model.candidate_prices()?;
        if prices.is_empty() {
            return Err(Error::EmptyValueSupport);
        }
        let max_state = model.model_max_state();
        let ns = max_state as usize + 1;
        let np = prices.len();
        let length_mass = (0..lengths.len())
            .map(|i| model.model_length_mass(i))
            .collect::<Result<Vec<_>>>()?;
        let mut joint = vec![0.0; lengths.len() * np * ns];
        for (li, &l) in lengths.iter().enumerate() {
            for s in 0..ns {
                for (pi, &p) in prices.iter().enumerate() {
                    let x = model.model_joint(li, p, s as u32)?;
                    if pi > 0 {
                        let prev = joint[(li * np + pi - 1) * ns + s];
                        if x > prev + 1e-12 {
                            let m = length_mass[li].max(f64::MIN_POSITIVE);
                            return Err(Error::InvalidTail {
                                length: l,
                                state: s as u32,
                                lower: prices[pi - 1],
                                higher: p,
                                lower_tail: prev / m,
                                higher_tail: x / m,
                            });
                        }
                    }
                    joint[(li * np + pi) * ns + s] = x;
                }
            }
        }
        Ok(AcceptanceTable {
            lengths,
            length_mass,
            prices,
            max_state,
            value_bound: model.model_value_bound(),
            joint,
        })
    }

    pub fn num_states(&self) -> usize {
        self.max_state as usize + 1
    }

    #[inline]
    pub fn joint(&self, length_idx: usize, price_idx: usize, state: usize) -> f64 {
        let ns = self.num_states();
        self.joint[(length_idx * self.prices.len() + price_idx) * ns + state]
    }
}
