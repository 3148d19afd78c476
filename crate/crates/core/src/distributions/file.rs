//! JSON distribution files.
//!
//! A file either lists atoms,
//!
//! ```json
//! {"lengths": [1, 2], "values": [1, 3], "deadlines": [0, 4],
//!  "atoms": [[1, 1, 4, 0.5], [2, 3, 0, 0.5]]}
//! ```
//!
//! or describes a log-concave family under the key `family`:
//!
//! ```json
//! {"family": {"kind": "geometric", "params": {"p": 0.4},
//!             "construction": "floor-shift", "gammas": {"1": 0, "2": 1},
//!             "length_marginal": {"1": 0.5, "2": 0.5},
//!             "deadline_marginal": {"0": 0.5, "3": 0.5}, "value_cap": 6}}
//! ```
//!
//! The supports in a tabular file are optional and default to those of the
//! atoms.

use serde::{Deserialize, Serialize};

use super::{
    build_logconcave_family, ContinuousValueDistribution, JobDistribution, JobType,
    LogConcaveFamilySpec,
};
use crate::error::{Error, Result};

/// Parsed contents of a distribution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadlines: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(u32, f64, u32, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<LogConcaveFamilySpec>,
}

/// A distribution as loaded from a file: a table, or a family with
/// continuous values that can only be solved on a price grid.
#[derive(Debug, Clone)]
pub enum LoadedDistribution {
    Tabular(JobDistribution),
    Continuous(ContinuousValueDistribution),
}

impl LoadedDistribution {
    pub fn as_tabular(&self) -> Option<&JobDistribution> {
        match self {
            LoadedDistribution::Tabular(q) => Some(q),
            LoadedDistribution::Continuous(_) => None,
        }
    }

    /// The law viewed through its tails, wrapping a table if necessary.
    pub fn to_continuous(&self) -> ContinuousValueDistribution {
        match self {
            LoadedDistribution::Tabular(q) => ContinuousValueDistribution::from_discrete(q.clone()),
            LoadedDistribution::Continuous(c) => c.clone(),
        }
    }
}

impl DistributionSpec {
    /// Parses JSON text. Syntax and type errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidDistribution(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("distribution specs always serialize")
    }

    /// Describes a table as a list of its positive-mass atoms.
    pub fn from_distribution(q: &JobDistribution) -> Self {
        DistributionSpec {
            lengths: Some(q.lengths().to_vec()),
            values: Some(q.values().to_vec()),
            deadlines: Some(q.deadlines().to_vec()),
            atoms: Some(
                q.atoms()
                    .into_iter()
                    .map(|(j, p)| (j.length, j.value, j.deadline, p))
                    .collect(),
            ),
            family: None,
        }
    }

    pub fn build(&self) -> Result<LoadedDistribution> {
        match (&self.atoms, &self.family) {
            (Some(_), Some(_)) => Err(Error::InvalidDistribution(
                "give either `atoms` or `family`, not both".into(),
            )),
            (None, None) => Err(Error::InvalidDistribution(
                "missing field: `atoms` or `family`".into(),
            )),
            (None, Some(family)) => {
                if self.lengths.is_some() || self.values.is_some() || self.deadlines.is_some() {
                    return Err(Error::InvalidDistribution(
                        "supports are implied by a family; drop `lengths`, `values` and `deadlines`"
                            .into(),
                    ));
                }
                if family.is_tabular() {
                    build_logconcave_family(family).map(LoadedDistribution::Tabular)
                } else {
                    family.validate()?;
                    ContinuousValueDistribution::from_family(family)
                        .map(LoadedDistribution::Continuous)
                }
            }
            (Some(atoms), None) => {
                let atoms: Vec<(JobType, f64)> = atoms
                    .iter()
                    .map(|&(l, v, d, p)| (JobType::new(l, v, d), p))
                    .collect();
                let lengths = self
                    .lengths
                    .clone()
                    .unwrap_or_else(|| atoms.iter().map(|a| a.0.length).collect());
                let values = self
                    .values
                    .clone()
                    .unwrap_or_else(|| atoms.iter().map(|a| a.0.value).collect());
                let deadlines = self
                    .deadlines
                    .clone()
                    .unwrap_or_else(|| atoms.iter().map(|a| a.0.deadline).collect());
                JobDistribution::new(lengths, values, deadlines, &atoms)
                    .map(LoadedDistribution::Tabular)
            }
        }
    }
}

/// Parses and builds a distribution from JSON text.
pub fn parse_distribution(text: &str) -> Result<LoadedDistribution> {
    DistributionSpec::from_json(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabular_file() {
        let q = parse_distribution(
            r#"{"lengths": [1], "values": [1, 2], "deadlines": [5],
                "atoms": [[1, 1, 5, 0.5], [1, 2, 5, 0.5]]}"#,
        )
        .unwrap();
        let q = q.as_tabular().unwrap();
        assert_eq!(q.joint_tail(1, 2.0, 0).unwrap(), 0.5);
    }

    #[test]
    fn supports_default_to_atoms() {
        let q = parse_distribution(r#"{"atoms": [[2, 3.5, 1, 1.0]]}"#).unwrap();
        assert_eq!(q.as_tabular().unwrap().lengths(), &[2]);
    }

    #[test]
    fn mass_sum_tolerance() {
        let ok = r#"{"atoms": [[1, 1, 0, 0.5], [1, 2, 0, 0.5000000005]]}"#;
        assert!(parse_distribution(ok).is_ok());
        let bad = r#"{"atoms": [[1, 1, 0, 0.5], [1, 2, 0, 0.500001]]}"#;
        assert!(matches!(
            parse_distribution(bad),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn errors_carry_position() {
        let err = parse_distribution("{\n  \"atoms\": [[1, \"x\", 0, 1.0]]\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_distribution(r#"{"atom": []}"#).unwrap_err();
        assert!(err.to_string().contains("atom"), "{err}");
    }

    #[test]
    fn family_file() {
        let text = r#"{"family": {"kind": "continuous-uniform", "params": {"lo": 0, "hi": 1},
            "construction": "shift", "gammas": {"1": 0},
            "length_marginal": {"1": 1}, "deadline_marginal": {"3": 1}}}"#;
        assert!(matches!(
            parse_distribution(text).unwrap(),
            LoadedDistribution::Continuous(_)
        ));
        let text = text.replace("\"shift\"", "\"floor-shift\"");
        assert!(matches!(
            parse_distribution(&text).unwrap(),
            LoadedDistribution::Tabular(_)
        ));
    }

    #[test]
    fn roundtrip() {
        let q = JobDistribution::independent(&[(1, 0.3), (2, 0.7)], &[(1.0, 0.5), (2.5, 0.5)], &[(0, 1.0)])
            .unwrap();
        let text = DistributionSpec::from_distribution(&q).to_json();
        let back = parse_distribution(&text).unwrap();
        let back = back.as_tabular().unwrap();
        assert_eq!(back.lengths(), q.lengths());
        assert_eq!(back.values(), q.values());
        for ((a, p), (b, r)) in back.atoms().into_iter().zip(q.atoms()) {
            assert_eq!(a, b);
            assert!((p - r).abs() < 1e-15);
        }
    }
}
