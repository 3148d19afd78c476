//! Closed-form guarantees. Logarithms are natural.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    AzumaFinite,
    AzumaDiscounted,
    Robustness,
    Grid,
    SampleSize,
    RevenueGap,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::AzumaFinite => "azuma-finite",
            BoundKind::AzumaDiscounted => "azuma-discounted",
            BoundKind::Robustness => "robustness",
            BoundKind::Grid => "grid",
            BoundKind::SampleSize => "sample-size",
            BoundKind::RevenueGap => "revenue-gap",
        })
    }
}

/// A computed bound and the parameters it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub inputs: Vec<(String, f64)>,
    pub bound: f64,
}

impl BoundReport {
    fn new(kind: BoundKind, inputs: &[(&str, f64)], bound: f64) -> Self {
        BoundReport {
            kind,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            bound,
        }
    }

    pub fn input(&self, name: &str) -> Option<f64> {
        self.inputs.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// `kind,name=value;name=value,bound`
    pub fn csv_row(&self) -> String {
        let params: Vec<String> = self.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{},{},{}", self.kind, params.join(";"), self.bound)
    }
}

/// Finite horizon `T` or discount factor for an unbounded horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HorizonParam {
    Finite(usize),
    Discounted(f64),
}

impl HorizonParam {
    fn check(self) -> Result<()> {
        match self {
            HorizonParam::Discounted(g) if !(g > 0.0 && g < 1.0) => Err(Error::InvalidParameter(
                format!("discount {g} outside (0, 1)"),
            )),
            _ => Ok(()),
        }
    }
}

fn log_ratio(numerator: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} must be positive")));
    }
    Ok((numerator / delta).ln())
}

/// Deviation of cumulative revenue from its mean that holds with
/// probability `1 - delta` for any monotone policy:
/// `V sqrt(2 ln(2/delta) T)`, or `V sqrt(2 ln(2/delta) / (1 - g^2))`.
///
/// `delta >= 1` is accepted with a warning; the logarithm is clamped at 0.
pub fn azuma_bound(value_bound: f64, delta: f64, horizon: HorizonParam) -> Result<BoundReport> {
    horizon.check()?;
    let mut log = log_ratio(2.0, delta)?;
    if delta >= 1.0 {
        log::warn!("delta = {delta} >= 1 makes the concentration bound vacuous");
        log = log.max(0.0);
    }
    Ok(match horizon {
        HorizonParam::Finite(t) => BoundReport::new(
            BoundKind::AzumaFinite,
            &[("V", value_bound), ("delta", delta), ("T", t as f64)],
            value_bound * (2.0 * log * t as f64).sqrt(),
        ),
        HorizonParam::Discounted(g) => BoundReport::new(
            BoundKind::AzumaDiscounted,
            &[("V", value_bound), ("delta", delta), ("gamma", g)],
            value_bound * (2.0 * log / (1.0 - g * g)).sqrt(),
        ),
    })
}

/// Value loss from optimizing against a distribution within `epsilon` of
/// the truth: `2 (T - t) V L epsilon`, or `2 V L epsilon / (1 - g)`.
pub fn robustness_bound(
    horizon: HorizonParam,
    t: usize,
    value_bound: f64,
    max_length: u32,
    epsilon: f64,
) -> Result<BoundReport> {
    horizon.check()?;
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be non-negative")));
    }
    let vl = 2.0 * value_bound * max_length as f64 * epsilon;
    Ok(match horizon {
        HorizonParam::Finite(horizon) => {
            if t > horizon {
                return Err(Error::InvalidParameter(format!("t = {t} beyond horizon {horizon}")));
            }
            BoundReport::new(
                BoundKind::Robustness,
                &[
                    ("T", horizon as f64),
                    ("t", t as f64),
                    ("V", value_bound),
                    ("L", max_length as f64),
                    ("epsilon", epsilon),
                ],
                (horizon - t) as f64 * vl,
            )
        }
        HorizonParam::Discounted(g) => BoundReport::new(
            BoundKind::Robustness,
            &[
                ("gamma", g),
                ("V", value_bound),
                ("L", max_length as f64),
                ("epsilon", epsilon),
            ],
            vl / (1.0 - g),
        ),
    })
}

/// Value lost by restricting prices to multiples of `eta`:
/// `(T - t) eta`, or `eta / (1 - g)`.
pub fn grid_bound(horizon: HorizonParam, t: usize, eta: f64) -> Result<BoundReport> {
    horizon.check()?;
    Ok(match horizon {
        HorizonParam::Finite(h) => BoundReport::new(
            BoundKind::Grid,
            &[("T", h as f64), ("t", t as f64), ("eta", eta)],
            h.saturating_sub(t) as f64 * eta,
        ),
        HorizonParam::Discounted(g) => {
            BoundReport::new(BoundKind::Grid, &[("gamma", g), ("eta", eta)], eta / (1.0 - g))
        }
    })
}

/// Which sample-count requirement to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSizeMode {
    /// Probes per `(price, state)` pair for a uniform tail error of
    /// `epsilon`: `3 ln(2K/delta) / (2 epsilon^2)`.
    PerPair,
    /// Probes per pair so that optimal values move by less than `epsilon`
    /// over horizon `T`: `6 T K^4 ln(2K/delta) / epsilon^2`.
    ValueFinite(usize),
    /// Discounted analogue: `6 K^4 ln(2K/delta) / ((1 - g) epsilon^2)`.
    ValueDiscounted(f64),
    /// Probes per pair for the learn-then-price pipeline over horizon `T`,
    /// with the union bound over its four events:
    /// `24 T K^4 ln(8K/delta) / epsilon^2`.
    PipelineFinite(usize),
    /// Discounted pipeline: `24 K^4 ln(8K/delta) / (epsilon^2 (1 - g))`.
    PipelineDiscounted(f64),
}

impl SampleSizeMode {
    /// `C` such that the requirement reads `n >= C / epsilon^2`.
    fn coefficient(self, kappa: usize, delta: f64) -> Result<f64> {
        let k = kappa as f64;
        let k4 = k.powi(4);
        Ok(match self {
            SampleSizeMode::PerPair => 1.5 * log_ratio(2.0 * k, delta)?,
            SampleSizeMode::ValueFinite(t) => 6.0 * t as f64 * k4 * log_ratio(2.0 * k, delta)?,
            SampleSizeMode::ValueDiscounted(g) => {
                HorizonParam::Discounted(g).check()?;
                6.0 * k4 * log_ratio(2.0 * k, delta)? / (1.0 - g)
            }
            SampleSizeMode::PipelineFinite(t) => 24.0 * t as f64 * k4 * log_ratio(8.0 * k, delta)?,
            SampleSizeMode::PipelineDiscounted(g) => {
                HorizonParam::Discounted(g).check()?;
                24.0 * k4 * log_ratio(8.0 * k, delta)? / (1.0 - g)
            }
        })
    }

    fn inputs(self) -> Vec<(&'static str, f64)> {
        match self {
            SampleSizeMode::PerPair => vec![],
            SampleSizeMode::ValueFinite(t) | SampleSizeMode::PipelineFinite(t) => {
                vec![("T", t as f64)]
            }
            SampleSizeMode::ValueDiscounted(g) | SampleSizeMode::PipelineDiscounted(g) => {
                vec![("gamma", g)]
            }
        }
    }

    fn mode_code(self) -> f64 {
        match self {
            SampleSizeMode::PerPair => 0.0,
            SampleSizeMode::ValueFinite(_) => 1.0,
            SampleSizeMode::ValueDiscounted(_) => 2.0,
            SampleSizeMode::PipelineFinite(_) => 3.0,
            SampleSizeMode::PipelineDiscounted(_) => 4.0,
        }
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} outside (0, 1)")))
    }
}

/// Smallest integer sample count meeting the requirement of `mode`.
///
/// The report's `mode` input encodes the variant: 0 per-pair, 1 value
/// finite, 2 value discounted, 3 pipeline finite, 4 pipeline discounted.
pub fn sample_size(
    kappa: usize,
    delta: f64,
    epsilon: f64,
    mode: SampleSizeMode,
) -> Result<BoundReport> {
    check_unit("delta", delta)?;
    check_unit("epsilon", epsilon)?;
    if kappa == 0 {
        return Err(Error::InvalidParameter("K must be positive".into()));
    }
    let n = (mode.coefficient(kappa, delta)? / (epsilon * epsilon)).ceil();
    let mut inputs = vec![
        ("mode", mode.mode_code()),
        ("K", kappa as f64),
        ("delta", delta),
        ("epsilon", epsilon),
    ];
    inputs.extend(mode.inputs());
    Ok(BoundReport::new(BoundKind::SampleSize, &inputs, n))
}

/// The `epsilon` that `n` samples per pair buy under `mode`.
pub fn implied_epsilon(kappa: usize, delta: f64, n: u64, mode: SampleSizeMode) -> Result<f64> {
    check_unit("delta", delta)?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    Ok((mode.coefficient(kappa, delta)? / n as f64).sqrt())
}

/// Revenue shortfall of the learned policy against any other policy on the
/// same job sequence, holding with probability `1 - delta`:
/// `2 V sqrt(2 ln(8/delta) (T + 1)) + epsilon`, or
/// `2 V sqrt(2 ln(8/delta) / (1 - g^2)) + 2 epsilon`.
pub fn revenue_gap_bound(
    value_bound: f64,
    delta: f64,
    epsilon: f64,
    horizon: HorizonParam,
) -> Result<BoundReport> {
    horizon.check()?;
    check_unit("delta", delta)?;
    let log = log_ratio(8.0, delta)?;
    Ok(match horizon {
        HorizonParam::Finite(t) => BoundReport::new(
            BoundKind::RevenueGap,
            &[("V", value_bound), ("delta", delta), ("epsilon", epsilon), ("T", t as f64)],
            2.0 * value_bound * (2.0 * log * (t as f64 + 1.0)).sqrt() + epsilon,
        ),
        HorizonParam::Discounted(g) => BoundReport::new(
            BoundKind::RevenueGap,
            &[("V", value_bound), ("delta", delta), ("epsilon", epsilon), ("gamma", g)],
            2.0 * value_bound * (2.0 * log / (1.0 - g * g)).sqrt() + 2.0 * epsilon,
        ),
    })
}
