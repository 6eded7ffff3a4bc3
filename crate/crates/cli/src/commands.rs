// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Table builders for the analysis, simulation and optimization commands.

use coopra_core::analysis;
use coopra_core::optimize::{self, CellStatus, OptimizationRequest, SweepSpec};
use coopra_core::{sim, ArrivalRates, OperatingPoint, Policy, PolicyParam};
use rayon::prelude::*;

use crate::config::Config;
use crate::output::{Table, Value};
use crate::CliError;

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Stability-region boundaries over a `lambda_p` grid: one column per
/// requested `a`, then the union and no-cooperation boundaries. Entries
/// beyond a region's `lambda_p` extent are left empty.
pub fn region(cfg: &Config) -> Result<Table, CliError> {
    let c = cfg.channel()?;
    let a_values = cfg.a_values()?;
    let params = a_values
        .iter()
        .map(|&a| PolicyParam::new(a))
        .collect::<Result<Vec<_>, _>>()?;
    let mut columns = cols(&["lambda_p"]);
    columns.extend(
        a_values
            .iter()
            .map(|a| format!("lambda_s_max_a={}", crate::output::fmt_num(*a))),
    );
    columns.extend(cols(&["union", "no_cooperation"]));
    let mut t = Table::new("region", 1, columns);
    for lp in cfg.sweep.grid.values()? {
        let mut row: Vec<Value> = vec![lp.into()];
        for &a in &params {
            let v = (lp < analysis::primary_rate_bound(&c, a))
                .then(|| analysis::secondary_rate_bound(&c, a, lp).ok())
                .flatten();
            row.push(v.into());
        }
        row.push(analysis::union_boundary(&c, lp).into());
        row.push(analysis::no_cooperation_boundary(&c, lp).ok().into());
        t.push(row);
    }
    Ok(t)
}

fn rates_for(cfg: &Config, x: f64) -> (f64, f64) {
    cfg.sweep.axis.rates(cfg.sweep.fixed_rate, x)
}

/// Closed-form delays over the sweep grid for each requested `a`, with
/// optional simulated columns.
pub fn delay(cfg: &Config, seed: u64, simulate: bool) -> Result<Table, CliError> {
    let c = cfg.channel()?;
    let a_values = cfg.a_values()?;
    let mut names = vec![
        "lambda_p", "lambda_s", "a", "status", "d_p", "d_s", "n_p", "n_sp", "n_s", "g00",
    ];
    if simulate {
        names.extend(["d_p_sim", "d_p_ci", "d_s_sim", "d_s_ci"]);
    }
    let grid = cfg.sweep.grid.values()?;
    let jobs: Vec<(usize, f64, f64)> = grid
        .iter()
        .flat_map(|&x| a_values.iter().map(move |&a| (x, a)))
        .enumerate()
        .map(|(i, (x, a))| (i, x, a))
        .collect();

    let rows = jobs
        .par_iter()
        .map(|&(index, x, a)| -> Result<Vec<Value>, CliError> {
            let (lp, ls) = rates_for(cfg, x);
            let rates = ArrivalRates::new(lp, ls)?;
            let param = PolicyParam::new(a)?;
            let point = OperatingPoint::new(c, rates, param)?;
            let mut row: Vec<Value> = vec![lp.into(), ls.into(), a.into()];
            let report = analysis::delay_report(&point);
            match &report {
                Ok(d) => {
                    let status = if d.is_well_conditioned() {
                        "ok"
                    } else {
                        "ill_conditioned"
                    };
                    row.push(status.into());
                    row.extend([d.d_p, d.d_s, d.n_p, d.n_sp, d.n_s, d.g00].map(Value::from));
                }
                Err(e) => {
                    let status = match e {
                        coopra_core::Error::Unstable => "unstable".to_string(),
                        other => format!("error: {other}"),
                    };
                    row.push(status.into());
                    row.extend(std::iter::repeat(Value::Missing).take(6));
                }
            }
            if simulate {
                if report.is_ok() {
                    let sc = cfg.sim_config(
                        rates,
                        Policy::Randomized(param),
                        optimize::row_seed(seed, index as u64),
                    )?;
                    let r = sim::run_lenient(&sc)?;
                    row.extend(
                        [r.d_p_hat, r.ci_halfwidth.d_p, r.d_s_hat, r.ci_halfwidth.d_s]
                            .map(Value::from),
                    );
                } else {
                    row.extend(std::iter::repeat(Value::Missing).take(4));
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut t = Table::new("delay", 1, cols(&names));
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// One simulation at the configured rates and policy, with analytic values
/// alongside when the policy is randomized and the point is stable.
pub fn simulate(cfg: &Config, seed: u64) -> Result<Table, CliError> {
    let sc = cfg.sim_config(cfg.rates()?, cfg.policy()?, seed)?;
    let r = sim::run(&sc)?;
    let mut t = Table::new(
        "simulate",
        1,
        cols(&["metric", "estimate", "ci_halfwidth", "analytic"]),
    );

    let analytic = match sc.policy {
        Policy::Randomized(a) => {
            let p = OperatingPoint::new(sc.channel, sc.rates, a)?;
            analysis::delay_report(&p).ok()
        }
        _ => None,
    };
    let g01 = analysis::primary_idle_prob(&sc.channel, sc.rates.lambda_p()).ok();
    let ci = r.ci_halfwidth;
    let metrics: [(&str, f64, f64, Option<f64>); 10] = [
        ("n_p", r.n_p_hat, ci.n_p, analytic.as_ref().map(|d| d.n_p)),
        (
            "n_sp",
            r.n_sp_hat,
            ci.n_sp,
            analytic.as_ref().map(|d| d.n_sp),
        ),
        ("n_s", r.n_s_hat, ci.n_s, analytic.as_ref().map(|d| d.n_s)),
        ("d_p", r.d_p_hat, ci.d_p, analytic.as_ref().map(|d| d.d_p)),
        ("d_s", r.d_s_hat, ci.d_s, analytic.as_ref().map(|d| d.d_s)),
        (
            "throughput_p",
            r.throughput_p,
            ci.throughput_p,
            Some(sc.rates.lambda_p()),
        ),
        (
            "throughput_s",
            r.throughput_s,
            ci.throughput_s,
            Some(sc.rates.lambda_s()),
        ),
        ("g00", r.g00_hat, ci.g00, analytic.as_ref().map(|d| d.g00)),
        ("g01", r.g01_hat, ci.g01, g01),
        (
            "relayed_fraction",
            r.relayed_fraction_hat,
            ci.relayed_fraction,
            analytic.as_ref().map(|d| d.epsilon),
        ),
    ];
    for (name, est, half, exact) in metrics {
        t.push(vec![name.into(), est.into(), half.into(), exact.into()]);
    }
    t.push(vec![
        "idle_slots".into(),
        r.idle_slots.into(),
        Value::Missing,
        Value::Missing,
    ]);
    t.push(vec![
        "wasted_slots".into(),
        r.wasted_slots.into(),
        Value::Missing,
        Value::Missing,
    ]);
    Ok(t)
}

pub fn optimize(cfg: &Config) -> Result<Table, CliError> {
    let req = OptimizationRequest {
        channel: cfg.channel()?,
        rates: cfg.rates()?,
        objective: cfg.optimize.objective,
        margin: cfg.optimize.margin,
    };
    let o = optimize::optimal_a(&req)?;
    let mut t = Table::new(
        "optimize",
        1,
        cols(&[
            "lambda_p",
            "lambda_s",
            "objective",
            "a_star",
            "a_l",
            "a_u",
            "margin",
            "d_p",
            "d_s",
            "objective_value",
            "infimum",
            "unimodal",
        ]),
    );
    let objective = match req.objective {
        coopra_core::Objective::MinPrimaryDelay => "min_primary_delay".to_string(),
        coopra_core::Objective::MinSecondaryDelay => "min_secondary_delay".to_string(),
        coopra_core::Objective::WeightedSum { w_p, w_s } => format!("weighted_sum({w_p};{w_s})"),
    };
    t.push(vec![
        req.rates.lambda_p().into(),
        req.rates.lambda_s().into(),
        objective.into(),
        o.a.into(),
        o.interval.lower.into(),
        o.interval.upper.into(),
        req.margin.into(),
        o.report.d_p.into(),
        o.report.d_s.into(),
        o.objective_value.into(),
        o.infimum.into(),
        o.unimodal.into(),
    ]);
    Ok(t)
}

fn status_name(s: CellStatus) -> &'static str {
    match s {
        CellStatus::Ok => "ok",
        CellStatus::Infeasible => "infeasible",
        CellStatus::Unstable => "unstable",
        CellStatus::Error => "error",
    }
}

pub fn sweep(cfg: &Config) -> Result<Table, CliError> {
    let spec = SweepSpec {
        channel: cfg.channel()?,
        axis: cfg.sweep.axis,
        fixed_rate: cfg.sweep.fixed_rate,
        grid: cfg.sweep.grid.values()?,
        policies: cfg.sweep.policies.clone(),
        objective: cfg.optimize.objective,
        margin: cfg.optimize.margin,
        baseline: cfg.baseline(),
    };
    let rows = optimize::tradeoff_sweep(&spec)?;
    let mut columns = cols(&["index", "lambda_p", "lambda_s"]);
    for p in &spec.policies {
        let name = serde_json::to_value(p).expect("policy name");
        let name = name.as_str().expect("policy name is a string");
        for field in ["status", "a_star", "d_p", "d_p_ci", "d_s", "d_s_ci"] {
            columns.push(format!("{name}.{field}"));
        }
    }
    let mut t = Table::new("sweep", 1, columns);
    for r in rows {
        let mut row: Vec<Value> = vec![r.index.into(), r.lambda_p.into(), r.lambda_s.into()];
        for c in &r.cells {
            row.push(status_name(c.status).into());
            row.extend([c.a_star, c.d_p, c.d_p_ci, c.d_s, c.d_s_ci].map(Value::from));
        }
        t.push(row);
    }
    Ok(t)
}
