// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON configuration document and command-line overrides.
//!
//! Every section is optional; missing fields fall back to the reference
//! channel `f_pd = 0.3`, `f_ps = 0.4`, `f_sd = 0.8`.

use std::path::Path;

use coopra_core::analysis;
use coopra_core::optimize::{BaselineSim, Objective, SweepAxis, SweepPolicy, DEFAULT_MARGIN};
use coopra_core::{ArrivalRates, ChannelProfile, Policy, PolicyParam, SimConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub channel: ChannelSection,
    pub rates: RatesSection,
    pub policy: PolicySection,
    pub sim: SimSection,
    pub sweep: SweepSection,
    pub optimize: OptimizeSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            channel: ChannelSection::default(),
            rates: RatesSection::default(),
            policy: PolicySection::Randomized { a: 0.6 },
            sim: SimSection::default(),
            sweep: SweepSection::default(),
            optimize: OptimizeSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub f_pd: f64,
    pub f_sd: f64,
    pub f_ps: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let c = ChannelProfile::REFERENCE;
        Self {
            f_pd: c.f_pd(),
            f_sd: c.f_sd(),
            f_ps: c.f_ps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesSection {
    pub lambda_p: f64,
    pub lambda_s: f64,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            lambda_p: 0.2,
            lambda_s: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySection {
    Randomized { a: f64 },
    PriorityRelay,
    NoCooperation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub horizon: u64,
    /// Defaults to 10% of the horizon.
    pub warmup: Option<u64>,
    pub replications: u32,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            horizon: 1_000_000,
            warmup: None,
            replications: 5,
            seed: 1,
        }
    }
}

impl SimSection {
    pub fn warmup(&self) -> u64 {
        self.warmup.unwrap_or(self.horizon / 10)
    }
}

/// A grid given either as an explicit list or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match *self {
            GridSpec::List(ref v) => Ok(v.clone()),
            GridSpec::Range { start, stop, step } => {
                if step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || stop < start {
                    return Err(CliError::Config(format!(
                        "grid range needs step > 0 and stop >= start (got {start}..{stop} step {step})"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // Round off accumulated representation error so that
                // e.g. 0.1 + 2 * 0.05 prints as 0.2.
                Ok((0..=n)
                    .map(|i| {
                        let x = start + step * i as f64;
                        (x * 1e12).round() / 1e12
                    })
                    .collect())
            }
        }
    }
}

/// Policy parameter given as a number or as a named point of the feasible
/// interval at the configured rates: `"a_l"`, `"a_m"` or `"a_u"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AValue {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub fixed_rate: f64,
    pub grid: GridSpec,
    pub a_values: Vec<AValue>,
    pub policies: Vec<SweepPolicy>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: SweepAxis::LambdaJoint,
            fixed_rate: 0.2,
            grid: GridSpec::Range {
                start: 0.05,
                stop: 0.2,
                step: 0.05,
            },
            a_values: vec![AValue::Value(0.45), AValue::Value(0.6), AValue::Value(0.75)],
            policies: vec![
                SweepPolicy::Randomized,
                SweepPolicy::PriorityRelay,
                SweepPolicy::NoCooperation,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub objective: Objective,
    pub margin: f64,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            objective: Objective::MinPrimaryDelay,
            margin: DEFAULT_MARGIN,
        }
    }
}

impl Config {
    /// Parses a configuration document, naming the offending field and
    /// source position on failure.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let location = format!("line {}, column {}", inner.line(), inner.column());
            if path == "." {
                CliError::Config(format!("{location}: {inner}"))
            } else {
                CliError::Config(format!("field `{path}` ({location}): {inner}"))
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn channel(&self) -> Result<ChannelProfile, CliError> {
        let c = &self.channel;
        Ok(ChannelProfile::new(c.f_pd, c.f_sd, c.f_ps)?)
    }

    pub fn rates(&self) -> Result<ArrivalRates, CliError> {
        Ok(ArrivalRates::new(self.rates.lambda_p, self.rates.lambda_s)?)
    }

    pub fn policy(&self) -> Result<Policy, CliError> {
        Ok(match self.policy {
            PolicySection::Randomized { a } => Policy::Randomized(PolicyParam::new(a)?),
            PolicySection::PriorityRelay => Policy::PriorityRelay,
            PolicySection::NoCooperation => Policy::NoCooperation,
        })
    }

    pub fn sim_config(
        &self,
        rates: ArrivalRates,
        policy: Policy,
        seed: u64,
    ) -> Result<SimConfig, CliError> {
        let cfg = SimConfig {
            channel: self.channel()?,
            rates,
            policy,
            horizon: self.sim.horizon,
            warmup: self.sim.warmup(),
            seed,
            replications: self.sim.replications,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn baseline(&self) -> BaselineSim {
        BaselineSim {
            horizon: self.sim.horizon,
            warmup: self.sim.warmup(),
            replications: self.sim.replications,
            seed: self.sim.seed,
        }
    }

    /// Resolves the sweep's `a` list, expanding named interval points.
    pub fn a_values(&self) -> Result<Vec<f64>, CliError> {
        self.sweep
            .a_values
            .iter()
            .map(|v| match v {
                AValue::Value(a) => Ok(*a),
                AValue::Named(name) => {
                    let iv = analysis::feasible_a_interval(&self.channel()?, &self.rates()?)?
                        .ok_or_else(|| {
                            CliError::Config(format!(
                                "`{name}`: feasible interval is empty at the configured rates"
                            ))
                        })?;
                    match name.as_str() {
                        "a_l" => Ok(iv.lower),
                        "a_m" => Ok(iv.midpoint()),
                        "a_u" => Ok(iv.upper),
                        other => Err(CliError::Config(format!(
                            "unknown a name `{other}` (expected a_l, a_m or a_u)"
                        ))),
                    }
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = Config::from_json("{}").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.channel().unwrap(), ChannelProfile::REFERENCE);
    }

    #[test]
    fn error_names_field_and_line() {
        let text = "{\n  \"sim\": {\n    \"horizon\": \"many\"\n  }\n}";
        let err = Config::from_json(text).unwrap_err().to_string();
        assert!(err.contains("sim.horizon"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = Config::from_json(r#"{"channel": {"f_xy": 0.1}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("channel"), "{err}");
    }

    #[test]
    fn range_grid_is_inclusive() {
        let g = GridSpec::Range {
            start: 0.0,
            stop: 0.45,
            step: 0.005,
        };
        let v = g.values().unwrap();
        assert_eq!(v.len(), 91);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[90], 0.45);
        assert_eq!(v[40], 0.2);
    }

    #[test]
    fn named_a_values() {
        let c = Config::from_json(
            r#"{"rates": {"lambda_p": 0.2, "lambda_s": 0.2},
                "sweep": {"a_values": ["a_l", "a_m", "a_u", 0.5]}}"#,
        )
        .unwrap();
        let a = c.a_values().unwrap();
        assert!((a[0] - 0.381_578_947).abs() < 1e-8);
        assert!((a[2] - 0.815_789_474).abs() < 1e-8);
        assert!((a[1] - 0.5 * (a[0] + a[2])).abs() < 1e-15);
        assert_eq!(a[3], 0.5);
    }

    #[test]
    fn policy_and_objective_sections() {
        let c = Config::from_json(
            r#"{"policy": {"kind": "priority_relay"},
                "optimize": {"objective": {"kind": "weighted_sum", "w_p": 1, "w_s": 2}}}"#,
        )
        .unwrap();
        assert_eq!(c.policy().unwrap(), Policy::PriorityRelay);
        assert_eq!(
            c.optimize.objective,
            Objective::WeightedSum { w_p: 1.0, w_s: 2.0 }
        );
    }
}
