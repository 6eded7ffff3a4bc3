// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Delay-optimal choice of `a` and throughput-delay sweeps.
//!
//! `D_p` increases and `D_s` decreases in `a` over the feasible interval, so
//! the single-user optima sit at the open interval's ends. They are not
//! attained; the returned `a` is the endpoint moved inwards by a margin, and
//! the limit value at the endpoint is reported separately.
//!
//! The weighted-sum objective is an extension: it is minimized by golden
//! section search after a coarse scan confirms unimodality.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, AInterval, DelayReport};
use crate::error::{Error, Result};
use crate::model::{ArrivalRates, ChannelProfile, OperatingPoint, PolicyParam};
use crate::sim::{self, Policy, SimConfig};

pub const DEFAULT_MARGIN: f64 = 1e-6;
const GOLDEN_TOLERANCE: f64 = 1e-8;
const UNIMODALITY_SCAN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    MinPrimaryDelay,
    MinSecondaryDelay,
    WeightedSum { w_p: f64, w_s: f64 },
}

impl Objective {
    fn validate(&self) -> Result<()> {
        if let Objective::WeightedSum { w_p, w_s } = *self {
            let ok = w_p >= 0.0 && w_s >= 0.0 && w_p + w_s > 0.0;
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "weights must be nonnegative and not both zero (w_p = {w_p}, w_s = {w_s})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationRequest {
    pub channel: ChannelProfile,
    pub rates: ArrivalRates,
    pub objective: Objective,
    pub margin: f64,
}

impl OptimizationRequest {
    pub fn new(channel: ChannelProfile, rates: ArrivalRates, objective: Objective) -> Self {
        Self {
            channel,
            rates,
            objective,
            margin: DEFAULT_MARGIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimum {
    pub a: f64,
    pub objective_value: f64,
    pub report: DelayReport,
    pub interval: AInterval,
    /// Limit of the objective at the unattained interval endpoint, for the
    /// single-user objectives.
    pub infimum: Option<f64>,
    /// False when the pre-scan found the weighted objective not unimodal; the
    /// returned point is then the best scan point.
    pub unimodal: bool,
}

fn weighted(c: &ChannelProfile, r: &ArrivalRates, w_p: f64, w_s: f64, a: f64) -> f64 {
    let mut total = 0.0;
    if w_p > 0.0 {
        total += w_p * analysis::primary_delay_at(c, a, r.lambda_p()).unwrap_or(f64::INFINITY);
    }
    if w_s > 0.0 {
        total += w_s * analysis::secondary_delay_at(c, a, r).unwrap_or(f64::INFINITY);
    }
    total
}

/// Golden-section minimization of `f` over `[lo, hi]`.
pub fn golden_section_min(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tolerance: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tolerance {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// True when the sampled values fall and then rise at most once.
fn looks_unimodal(values: &[f64]) -> bool {
    let mut rising = false;
    for w in values.windows(2) {
        if w[1] > w[0] {
            rising = true;
        } else if rising && w[1] < w[0] {
            return false;
        }
    }
    true
}

pub fn optimal_a(req: &OptimizationRequest) -> Result<Optimum> {
    req.objective.validate()?;
    let (c, r) = (&req.channel, &req.rates);
    let infeasible = Error::Infeasible {
        lambda_p: r.lambda_p(),
        lambda_s: r.lambda_s(),
    };
    let interval = match analysis::feasible_a_interval(c, r) {
        Ok(Some(iv)) => iv,
        Ok(None) | Err(Error::PrimaryOverloaded { .. }) => return Err(infeasible),
        Err(e) => return Err(e),
    };
    let delta = req.margin;
    if !(delta > 0.0 && delta < interval.width() / 2.0) {
        return Err(Error::InvalidConfig(format!(
            "margin {delta} must lie in (0, {})",
            interval.width() / 2.0
        )));
    }
    let lo = interval.lower + delta;
    let hi = interval.upper - delta;

    let (a, infimum, unimodal) = match req.objective {
        Objective::MinPrimaryDelay => (
            lo,
            analysis::primary_delay_at(c, interval.lower, r.lambda_p()).ok(),
            true,
        ),
        Objective::MinSecondaryDelay => (
            hi,
            analysis::secondary_delay_at(c, interval.upper, r).ok(),
            true,
        ),
        Objective::WeightedSum { w_p, w_s } => {
            let f = |a: f64| weighted(c, r, w_p, w_s, a);
            let scan: Vec<(f64, f64)> = (0..UNIMODALITY_SCAN)
                .map(|i| {
                    let a = lo + (hi - lo) * i as f64 / (UNIMODALITY_SCAN - 1) as f64;
                    (a, f(a))
                })
                .collect();
            let values: Vec<f64> = scan.iter().map(|&(_, v)| v).collect();
            let best_of = |cands: &[(f64, f64)]| {
                cands.iter().copied().fold(
                    (f64::NAN, f64::INFINITY),
                    |b, x| if x.1 < b.1 { x } else { b },
                )
            };
            if looks_unimodal(&values) {
                let golden = golden_section_min(f, lo, hi, GOLDEN_TOLERANCE);
                let (a, _) = best_of(&[golden, (lo, f(lo)), (hi, f(hi))]);
                (a, None, true)
            } else {
                (best_of(&scan).0, None, false)
            }
        }
    };

    let point = OperatingPoint::new(*c, *r, PolicyParam::new(a)?)?;
    let report = analysis::delay_report(&point)?;
    let objective_value = match req.objective {
        Objective::MinPrimaryDelay => report.d_p,
        Objective::MinSecondaryDelay => report.d_s,
        Objective::WeightedSum { w_p, w_s } => w_p * report.d_p + w_s * report.d_s,
    };
    Ok(Optimum {
        a,
        objective_value,
        report,
        interval,
        infimum,
        unimodal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Grid values are `lambda_p`; `lambda_s` is fixed.
    LambdaP,
    /// Grid values are `lambda_s`; `lambda_p` is fixed.
    LambdaS,
    /// Both rates equal the grid value.
    LambdaJoint,
}

impl SweepAxis {
    pub fn rates(&self, fixed: f64, x: f64) -> (f64, f64) {
        match self {
            SweepAxis::LambdaP => (x, fixed),
            SweepAxis::LambdaS => (fixed, x),
            SweepAxis::LambdaJoint => (x, x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPolicy {
    /// Randomized policy at the optimal `a`, evaluated in closed form.
    Randomized,
    /// Simulated.
    PriorityRelay,
    /// Simulated.
    NoCooperation,
}

/// Simulation settings for the baseline columns of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSim {
    pub horizon: u64,
    pub warmup: u64,
    pub replications: u32,
    pub seed: u64,
}

impl Default for BaselineSim {
    fn default() -> Self {
        Self {
            horizon: 1_000_000,
            warmup: 100_000,
            replications: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub channel: ChannelProfile,
    pub axis: SweepAxis,
    pub fixed_rate: f64,
    pub grid: Vec<f64>,
    pub policies: Vec<SweepPolicy>,
    pub objective: Objective,
    pub margin: f64,
    pub baseline: BaselineSim,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self
            .grid
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
        {
            return Err(Error::InvalidConfig(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        self.objective.validate()
    }
}

/// Seed for the simulations of grid row `index`, shared by every policy in
/// the row (splitmix64 finalizer).
pub fn row_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// No stabilizing `a` (randomized policy).
    Infeasible,
    /// Outside the baseline policy's stability region.
    Unstable,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub policy: SweepPolicy,
    pub status: CellStatus,
    pub a_star: Option<f64>,
    pub d_p: Option<f64>,
    pub d_s: Option<f64>,
    pub d_p_ci: Option<f64>,
    pub d_s_ci: Option<f64>,
    pub note: Option<String>,
}

impl SweepCell {
    fn empty(policy: SweepPolicy, status: CellStatus, note: Option<String>) -> Self {
        Self {
            policy,
            status,
            a_star: None,
            d_p: None,
            d_s: None,
            d_p_ci: None,
            d_s_ci: None,
            note,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub lambda_p: f64,
    pub lambda_s: f64,
    pub cells: Vec<SweepCell>,
}

impl SweepRow {
    pub fn cell(&self, policy: SweepPolicy) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.policy == policy)
    }
}

fn randomized_cell(spec: &SweepSpec, rates: ArrivalRates) -> SweepCell {
    let req = OptimizationRequest {
        channel: spec.channel,
        rates,
        objective: spec.objective,
        margin: spec.margin,
    };
    match optimal_a(&req) {
        Ok(opt) => SweepCell {
            policy: SweepPolicy::Randomized,
            status: CellStatus::Ok,
            a_star: Some(opt.a),
            d_p: Some(opt.report.d_p),
            d_s: Some(opt.report.d_s),
            d_p_ci: None,
            d_s_ci: None,
            note: (!opt.unimodal).then(|| "unimodality check failed; grid argmin".to_string()),
        },
        Err(Error::Infeasible { .. }) => {
            SweepCell::empty(SweepPolicy::Randomized, CellStatus::Infeasible, None)
        }
        Err(e @ Error::InvalidConfig(_)) => SweepCell::empty(
            SweepPolicy::Randomized,
            CellStatus::Infeasible,
            Some(e.to_string()),
        ),
        Err(e) => SweepCell::empty(
            SweepPolicy::Randomized,
            CellStatus::Error,
            Some(e.to_string()),
        ),
    }
}

/// Closed-form stability of the simulated baselines.
pub fn baseline_stable(c: &ChannelProfile, policy: SweepPolicy, rates: &ArrivalRates) -> bool {
    let (lp, ls) = (rates.lambda_p(), rates.lambda_s());
    let margin = analysis::STABILITY_MARGIN;
    match policy {
        SweepPolicy::Randomized => analysis::feasible_a_interval(c, rates)
            .map(|iv| iv.is_some())
            .unwrap_or(false),
        SweepPolicy::PriorityRelay => {
            lp < analysis::union_x_intercept(c) - margin
                && ls < analysis::union_boundary(c, lp) - margin
        }
        SweepPolicy::NoCooperation => analysis::no_cooperation_boundary(c, lp)
            .map(|b| ls < b - margin)
            .unwrap_or(false),
    }
}

fn baseline_cell(
    spec: &SweepSpec,
    policy: SweepPolicy,
    rates: ArrivalRates,
    index: usize,
) -> SweepCell {
    if !baseline_stable(&spec.channel, policy, &rates) {
        return SweepCell::empty(policy, CellStatus::Unstable, None);
    }
    let sim_policy = match policy {
        SweepPolicy::PriorityRelay => Policy::PriorityRelay,
        SweepPolicy::NoCooperation => Policy::NoCooperation,
        SweepPolicy::Randomized => unreachable!("randomized cells are closed-form"),
    };
    let cfg = SimConfig {
        channel: spec.channel,
        rates,
        policy: sim_policy,
        horizon: spec.baseline.horizon,
        warmup: spec.baseline.warmup,
        seed: row_seed(spec.baseline.seed, index as u64),
        replications: spec.baseline.replications,
    };
    match sim::run(&cfg) {
        Ok(r) => SweepCell {
            policy,
            status: CellStatus::Ok,
            a_star: None,
            d_p: Some(r.d_p_hat),
            d_s: Some(r.d_s_hat),
            d_p_ci: Some(r.ci_halfwidth.d_p),
            d_s_ci: Some(r.ci_halfwidth.d_s),
            note: None,
        },
        Err(e) => SweepCell::empty(policy, CellStatus::Error, Some(e.to_string())),
    }
}

/// Evaluates every policy at every grid point. Row errors are recorded in
/// the row; the sweep itself only fails on an invalid spec.
pub fn tradeoff_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let rows = spec
        .grid
        .par_iter()
        .enumerate()
        .map(|(index, &x)| {
            let (lp, ls) = spec.axis.rates(spec.fixed_rate, x);
            let rates = match ArrivalRates::new(lp, ls) {
                Ok(r) => r,
                Err(e) => {
                    let cells = spec
                        .policies
                        .iter()
                        .map(|&p| SweepCell::empty(p, CellStatus::Error, Some(e.to_string())))
                        .collect();
                    return SweepRow {
                        index,
                        lambda_p: lp,
                        lambda_s: ls,
                        cells,
                    };
                }
            };
            let cells = spec
                .policies
                .iter()
                .map(|&p| match p {
                    SweepPolicy::Randomized => randomized_cell(spec, rates),
                    _ => baseline_cell(spec, p, rates, index),
                })
                .collect();
            SweepRow {
                index,
                lambda_p: lp,
                lambda_s: ls,
                cells,
            }
        })
        .collect();
    Ok(rows)
}
