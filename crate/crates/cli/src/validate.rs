// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form versus simulation validation battery.
//!
//! A simulated estimate passes when it lies within `max(2%, 3 x CI
//! half-width)` of the closed form. Checks whose simulation is too short to
//! say anything (fewer than [`MIN_MEASURED_SLOTS`] post-warmup slots per
//! replication, a single replication, or a confidence band wider than 25% of
//! the larger of the two values) are reported as inconclusive rather than failed.

use std::fmt::Write as _;

use coopra_core::analysis::{self, RelayCoefficients};
use coopra_core::optimize::row_seed;
use coopra_core::sim::{self, SimResult};
use coopra_core::{ArrivalRates, ChannelProfile, OperatingPoint, Policy, PolicyParam, SimConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::CliError;

pub const RELATIVE_TOLERANCE: f64 = 0.02;
pub const CI_MULTIPLIER: f64 = 3.0;
pub const MIN_MEASURED_SLOTS: u64 = 100_000;
const MAX_RELATIVE_BAND: f64 = 0.25;

/// The joint-rate grid of the delay comparison.
pub const GRID_LAMBDAS: [f64; 4] = [0.05, 0.10, 0.15, 0.20];
pub const GRID_A: [f64; 3] = [0.45, 0.60, 0.75];

/// Deliberate defects for checking that the battery catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Flip the sign of the `beta` coefficient of the relay-queue length.
    BetaSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub analytic: Option<f64>,
    pub simulated: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: Option<String>,
}

/// Compares a simulated estimate against its closed form.
pub fn compare(
    name: impl Into<String>,
    analytic: f64,
    simulated: f64,
    half: f64,
    decisive: bool,
) -> Check {
    let tolerance = (RELATIVE_TOLERANCE * analytic.abs()).max(CI_MULTIPLIER * half);
    let scale = analytic.abs().max(simulated.abs());
    let too_wide = !half.is_finite() || CI_MULTIPLIER * half > MAX_RELATIVE_BAND * scale;
    let status = if !decisive || too_wide || !simulated.is_finite() {
        Status::Inconclusive
    } else if (simulated - analytic).abs() <= tolerance {
        Status::Pass
    } else {
        Status::Fail
    };
    Check {
        name: name.into(),
        status,
        analytic: Some(analytic),
        simulated: Some(simulated),
        ci_halfwidth: Some(half),
        tolerance: Some(tolerance),
        detail: None,
    }
}

fn exact(name: impl Into<String>, ok: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        status: if ok { Status::Pass } else { Status::Fail },
        analytic: None,
        simulated: None,
        ci_halfwidth: None,
        tolerance: None,
        detail: Some(detail),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub status: Status,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub fault: Option<Fault>,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn new(checks: Vec<Check>, fault: Option<Fault>) -> Self {
        let count = |s| checks.iter().filter(|c| c.status == s).count();
        let (passed, failed, inconclusive) = (
            count(Status::Pass),
            count(Status::Fail),
            count(Status::Inconclusive),
        );
        let status = if failed > 0 {
            Status::Fail
        } else if inconclusive > 0 {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        Self {
            status,
            passed,
            failed,
            inconclusive,
            fault,
            checks,
        }
    }

    pub fn human(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            write!(s, "{:<13} {}", c.status.label(), c.name).unwrap();
            if let (Some(a), Some(m), Some(t)) = (c.analytic, c.simulated, c.tolerance) {
                write!(s, "  analytic={a:.6} simulated={m:.6} tol={t:.6}").unwrap();
            }
            if let Some(d) = &c.detail {
                write!(s, "  {d}").unwrap();
            }
            s.push('\n');
        }
        writeln!(
            s,
            "overall: {}  ({} passed, {} failed, {} inconclusive)",
            self.status.label(),
            self.passed,
            self.failed,
            self.inconclusive
        )
        .unwrap();
        s
    }
}

/// Closed forms the battery compares against, routed through the
/// coefficient blocks so that a [`Fault`] can corrupt them.
struct Expected {
    n_p: f64,
    n_sp: f64,
    n_s: f64,
    d_p: f64,
    d_s: f64,
    g00: f64,
    g01: f64,
    epsilon: f64,
}

fn expected(p: &OperatingPoint, fault: Option<Fault>) -> Result<Expected, CliError> {
    let d = analysis::delay_report(p)?;
    let mut coefficients = RelayCoefficients::new(&p.channel, p.a);
    if fault == Some(Fault::BetaSign) {
        coefficients.beta = -coefficients.beta;
    }
    let n_sp = coefficients.eval(p.lambda_p());
    Ok(Expected {
        n_p: d.n_p,
        n_sp,
        n_s: d.n_s,
        d_p: (d.n_p + n_sp) / p.lambda_p(),
        d_s: d.d_s,
        g00: d.g00,
        g01: analysis::primary_idle_prob(&p.channel, p.lambda_p())?,
        epsilon: d.epsilon,
    })
}

fn decisive(cfg: &SimConfig) -> bool {
    cfg.horizon - cfg.warmup >= MIN_MEASURED_SLOTS && cfg.replications > 1
}

fn conservation(label: &str, r: &SimResult) -> Check {
    let bad = r
        .replications
        .iter()
        .filter(|x| x.pu_imbalance() != 0 || x.su_imbalance() != 0)
        .count();
    exact(
        format!("{label} flow conservation"),
        bad == 0,
        format!("{bad} of {} replications unbalanced", r.replications.len()),
    )
}

fn sim_at(
    config: &Config,
    c: ChannelProfile,
    rates: ArrivalRates,
    a: PolicyParam,
    seed: u64,
) -> Result<(SimConfig, SimResult), CliError> {
    let mut sc = config.sim_config(rates, Policy::Randomized(a), seed)?;
    sc.channel = c;
    let r = sim::run(&sc)?;
    Ok((sc, r))
}

/// Runs the battery at the configured channel, rates, policy parameter and
/// simulation settings.
pub fn run_battery(
    config: &Config,
    seed: u64,
    fault: Option<Fault>,
) -> Result<ValidationReport, CliError> {
    let c = config.channel()?;
    let rates = config.rates()?;
    let a = match config.policy()? {
        Policy::Randomized(a) => a,
        _ => {
            return Err(CliError::Config(
                "validate needs a randomized policy".into(),
            ))
        }
    };
    let spot = OperatingPoint::new(c, rates, a)?;
    let mut checks = Vec::new();

    let e = expected(&spot, fault)?;
    let (sc, r) = sim_at(config, c, rates, a, seed)?;
    let h = r.ci_halfwidth;
    let dec = decisive(&sc);
    let label = format!(
        "lambda=({}, {}) a={}",
        rates.lambda_p(),
        rates.lambda_s(),
        a.get()
    );
    checks.push(compare(
        format!("{label} N_p"),
        e.n_p,
        r.n_p_hat,
        h.n_p,
        dec,
    ));
    checks.push(compare(
        format!("{label} N_sp"),
        e.n_sp,
        r.n_sp_hat,
        h.n_sp,
        dec,
    ));
    checks.push(compare(
        format!("{label} N_s"),
        e.n_s,
        r.n_s_hat,
        h.n_s,
        dec,
    ));
    checks.push(compare(
        format!("{label} D_p"),
        e.d_p,
        r.d_p_hat,
        h.d_p,
        dec,
    ));
    checks.push(compare(
        format!("{label} D_s"),
        e.d_s,
        r.d_s_hat,
        h.d_s,
        dec,
    ));
    checks.push(compare(
        format!("{label} G(0,0)"),
        e.g00,
        r.g00_hat,
        h.g00,
        dec,
    ));
    checks.push(compare(
        format!("{label} G(0,1)"),
        e.g01,
        r.g01_hat,
        h.g01,
        dec,
    ));
    checks.push(compare(
        format!("{label} epsilon"),
        e.epsilon,
        r.relayed_fraction_hat,
        h.relayed_fraction,
        dec,
    ));
    checks.push(compare(
        format!("{label} throughput_p"),
        rates.lambda_p(),
        r.throughput_p,
        h.throughput_p,
        dec,
    ));
    checks.push(compare(
        format!("{label} throughput_s"),
        rates.lambda_s(),
        r.throughput_s,
        h.throughput_s,
        dec,
    ));
    checks.push(conservation(&label, &r));

    let grid: Vec<(usize, f64, f64)> = GRID_LAMBDAS
        .iter()
        .flat_map(|&l| GRID_A.iter().map(move |&a| (l, a)))
        .enumerate()
        .map(|(i, (l, a))| (i, l, a))
        .collect();
    let grid_checks: Vec<Vec<Check>> = grid
        .par_iter()
        .map(|&(i, l, av)| -> Result<Vec<Check>, CliError> {
            let rates = ArrivalRates::new(l, l)?;
            let a = PolicyParam::new(av)?;
            let p = OperatingPoint::new(c, rates, a)?;
            if !analysis::is_stable(&p).stable {
                return Ok(Vec::new());
            }
            let e = expected(&p, fault)?;
            let (sc, r) = sim_at(config, c, rates, a, row_seed(seed, i as u64 + 1))?;
            let dec = decisive(&sc);
            let label = format!("lambda={l} a={av}");
            Ok(vec![
                compare(
                    format!("{label} D_p"),
                    e.d_p,
                    r.d_p_hat,
                    r.ci_halfwidth.d_p,
                    dec,
                ),
                compare(
                    format!("{label} D_s"),
                    e.d_s,
                    r.d_s_hat,
                    r.ci_halfwidth.d_s,
                    dec,
                ),
                conservation(&label, &r),
            ])
        })
        .collect::<Result<_, _>>()?;
    checks.extend(grid_checks.into_iter().flatten());

    Ok(ValidationReport::new(checks, fault))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_rules() {
        assert_eq!(compare("x", 1.0, 1.015, 0.001, true).status, Status::Pass);
        assert_eq!(compare("x", 1.0, 1.05, 0.001, true).status, Status::Fail);
        // CI dominates the relative tolerance.
        assert_eq!(compare("x", 1.0, 1.05, 0.02, true).status, Status::Pass);
        assert_eq!(
            compare("x", 1.0, 1.5, 0.2, true).status,
            Status::Inconclusive
        );
        assert_eq!(
            compare("x", 1.0, 1.5, f64::NAN, true).status,
            Status::Inconclusive
        );
        assert_eq!(
            compare("x", 1.0, 1.5, 0.001, false).status,
            Status::Inconclusive
        );
        // A badly wrong closed form is not excused by its own small scale.
        assert_eq!(compare("x", 0.1, 1.0, 0.01, true).status, Status::Fail);
    }

    fn small(horizon: u64) -> Config {
        Config::from_json(&format!(
            r#"{{"sim": {{"horizon": {horizon}, "replications": 5, "seed": 3}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn tiny_horizon_is_inconclusive() {
        let report = run_battery(&small(1_000), 3, None).unwrap();
        assert_eq!(report.failed, 0, "{}", report.human());
        assert_eq!(report.status, Status::Inconclusive);
    }

    #[test]
    fn beta_fault_fails_relay_check() {
        let report = run_battery(&small(200_000), 3, Some(Fault::BetaSign)).unwrap();
        assert_eq!(report.status, Status::Fail);
        let n_sp = report
            .checks
            .iter()
            .find(|c| c.name.ends_with("N_sp"))
            .unwrap();
        assert_eq!(n_sp.status, Status::Fail, "{}", report.human());
    }
}
