//! Experiment configuration files.
//!
//! ```json
//! {
//!   "distribution": "fixtures/two_lengths.json",
//!   "mode": "finite",
//!   "horizon": 20,
//!   "discount": 1.0,
//!   "traces": 200,
//!   "delta": 0.05,
//!   "seed": 7,
//!   "out": "runs/two_lengths"
//! }
//! ```
//!
//! `distribution` is either a path (relative to the config file) or an
//! inline distribution object. Each mode takes its own parameters:
//! `finite` needs `horizon` (and optionally `discount`), `infinite` needs
//! `discount < 1` and `epsilon`, `grid` needs `horizon` and `eta`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slotprice_core::distributions::{DistributionSpec, LoadedDistribution};
use slotprice_core::solver::truncation_horizon;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Finite,
    Infinite,
    Grid,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Finite => "finite",
            Mode::Infinite => "infinite",
            Mode::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "serde_json::Value")]
pub enum DistributionSource {
    Path(PathBuf),
    Inline(DistributionSpec),
}

impl TryFrom<serde_json::Value> for DistributionSource {
    type Error = String;

    fn try_from(value: serde_json::Value) -> Result<Self, String> {
        match value {
            serde_json::Value::String(p) => Ok(DistributionSource::Path(p.into())),
            v @ serde_json::Value::Object(_) => serde_json::from_value(v)
                .map(DistributionSource::Inline)
                .map_err(|e| e.to_string()),
            _ => Err("expected a file path or a distribution object".into()),
        }
    }
}

fn default_traces() -> usize {
    100
}

fn default_delta() -> f64 {
    0.05
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Contents of a config file. Command-line flags override these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distribution: DistributionSource,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    /// Truncation tolerance of the infinite-horizon solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Price grid pitch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default = "default_traces")]
    pub traces: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Target accuracy of learning; sets the probe count when `samples` is
    /// not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learn_epsilon: Option<f64>,
    /// Probes per `(price, state)` pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Skip probing and use the true distribution as the estimate.
    #[serde(default)]
    pub zero_noise: bool,
    /// Replace a non-monotone policy by its monotone projection.
    #[serde(default)]
    pub project: bool,
    /// Policy file for `simulate`; the policy is solved afresh if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PathBuf>,
}

/// Resolved horizon parameters of a validated config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Plan {
    Finite { horizon: usize, discount: f64 },
    Infinite { discount: f64, epsilon: f64 },
    Grid { horizon: usize, discount: f64, eta: f64 },
}

impl Plan {
    pub fn discount(&self) -> f64 {
        match *self {
            Plan::Finite { discount, .. }
            | Plan::Infinite { discount, .. }
            | Plan::Grid { discount, .. } => discount,
        }
    }

    /// Number of steps simulated and evaluated: `T`, or the truncation
    /// horizon for the infinite case.
    pub fn steps(&self, value_bound: f64) -> Result<usize, CliError> {
        match *self {
            Plan::Finite { horizon, .. } | Plan::Grid { horizon, .. } => Ok(horizon),
            Plan::Infinite { discount, epsilon } => {
                Ok(truncation_horizon(value_bound, discount, epsilon)?)
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON, naming the offending field and position on failure.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!(
                "field `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        if let DistributionSource::Path(p) = &config.distribution {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    config.distribution = DistributionSource::Path(dir.join(p));
                }
            }
        }
        Ok(config)
    }

    /// Checks that exactly the parameters of the chosen mode are present.
    pub fn plan(&self) -> Result<Plan, CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        let forbid = |name: &str, present: bool| {
            if present {
                Err(CliError::Config(format!(
                    "field `{name}` does not apply to mode {}",
                    self.mode.name()
                )))
            } else {
                Ok(())
            }
        };
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("field `delta`: {} outside (0, 1)", self.delta));
        }
        match self.mode {
            Mode::Finite | Mode::Grid => {
                forbid("epsilon", self.epsilon.is_some())?;
                let Some(horizon) = self.horizon else {
                    return fail(format!("mode {} needs field `horizon`", self.mode.name()));
                };
                if horizon == 0 {
                    return fail("field `horizon` must be at least 1".into());
                }
                let discount = self.discount.unwrap_or(1.0);
                if !(discount > 0.0 && discount <= 1.0) {
                    return fail(format!("field `discount`: {discount} outside (0, 1]"));
                }
                if self.mode == Mode::Finite {
                    forbid("eta", self.eta.is_some())?;
                    Ok(Plan::Finite { horizon, discount })
                } else {
                    let Some(eta) = self.eta else {
                        return fail("mode grid needs field `eta`".into());
                    };
                    Ok(Plan::Grid {
                        horizon,
                        discount,
                        eta,
                    })
                }
            }
            Mode::Infinite => {
                forbid("horizon", self.horizon.is_some())?;
                forbid("eta", self.eta.is_some())?;
                let (Some(discount), Some(epsilon)) = (self.discount, self.epsilon) else {
                    return fail("mode infinite needs fields `discount` and `epsilon`".into());
                };
                if !(discount > 0.0 && discount < 1.0) {
                    return fail(format!("field `discount`: {discount} outside (0, 1)"));
                }
                if !(epsilon > 0.0) {
                    return fail(format!("field `epsilon`: {epsilon} must be positive"));
                }
                Ok(Plan::Infinite { discount, epsilon })
            }
        }
    }

    /// Reads the distribution and returns it with its canonical JSON text.
    pub fn distribution(&self) -> Result<(LoadedDistribution, String), CliError> {
        let spec = match &self.distribution {
            DistributionSource::Inline(spec) => spec.clone(),
            DistributionSource::Path(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read distribution {}: {e}", p.display()))
                })?;
                DistributionSpec::from_json(&text).map_err(|e| {
                    CliError::Config(format!("distribution {}: {e}", p.display()))
                })?
            }
        };
        let loaded = spec
            .build()
            .map_err(|e| CliError::Config(format!("field `distribution`: {e}")))?;
        Ok((loaded, spec.to_json()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIST: &str = r#"{"atoms": [[1, 1.0, 0, 1.0]]}"#;

    fn config(extra: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::from_json(&format!(r#"{{"distribution": {DIST}, {extra}}}"#))
    }

    #[test]
    fn modes_take_their_own_parameters() {
        let c = config(r#""mode": "finite", "horizon": 3"#).unwrap();
        assert_eq!(
            c.plan().unwrap(),
            Plan::Finite {
                horizon: 3,
                discount: 1.0
            }
        );
        let c = config(r#""mode": "infinite", "discount": 0.5, "epsilon": 0.1"#).unwrap();
        assert!(matches!(c.plan().unwrap(), Plan::Infinite { .. }));
        let c = config(r#""mode": "grid", "horizon": 2, "eta": 0.5"#).unwrap();
        assert!(matches!(c.plan().unwrap(), Plan::Grid { .. }));

        for bad in [
            r#""mode": "finite""#,
            r#""mode": "finite", "horizon": 3, "epsilon": 0.1"#,
            r#""mode": "finite", "horizon": 3, "eta": 0.1"#,
            r#""mode": "infinite", "discount": 1.0, "epsilon": 0.1"#,
            r#""mode": "infinite", "discount": 0.5, "epsilon": 0.1, "horizon": 3"#,
            r#""mode": "grid", "horizon": 2"#,
            r#""mode": "finite", "horizon": 3, "delta": 1.5"#,
        ] {
            assert!(config(bad).unwrap().plan().is_err(), "{bad}");
        }
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = config(r#""mode": "finite", "horizon": "three""#).unwrap_err();
        assert!(err.to_string().contains("`horizon`"), "{err}");
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = config(r#""mode": "sideways""#).unwrap_err();
        assert!(err.to_string().contains("`mode`"), "{err}");
        let err = config(r#""mode": "finite", "horizn": 3"#).unwrap_err();
        assert!(err.to_string().contains("horizn"), "{err}");
    }

    #[test]
    fn distribution_path_or_inline() {
        let c = config(r#""mode": "finite", "horizon": 1"#).unwrap();
        assert!(matches!(c.distribution, DistributionSource::Inline(_)));
        let (q, _) = c.distribution().unwrap();
        assert!(q.as_tabular().is_some());
        let c = ExperimentConfig::from_json(
            r#"{"distribution": "q.json", "mode": "finite", "horizon": 1}"#,
        )
        .unwrap();
        assert_eq!(c.distribution, DistributionSource::Path("q.json".into()));
    }
}
