// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

/// Which traffic flow an error or statistic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    /// Primary-user packets (through `Q_p` and possibly `Q_sp`).
    Pu,
    /// Secondary-user packets (through `Q_s`).
    Su,
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flow::Pu => f.write_str("pu"),
            Flow::Su => f.write_str("su"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{field} = {value} is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("primary queue overloaded: lambda_p = {lambda_p} >= service rate {service_rate}")]
    PrimaryOverloaded { lambda_p: f64, service_rate: f64 },
    #[error("relay queue overloaded: lambda_p = {lambda_p} >= bound {bound}")]
    RelayOverloaded { lambda_p: f64, bound: f64 },
    #[error("operating point is outside the stable throughput region")]
    Unstable,
    #[error("delay undefined for zero-rate {0} flow")]
    ZeroRateFlow(Flow),
    #[error("no {0} packets delivered after warmup")]
    NoDeliveries(Flow),
    #[error(
        "no value of a keeps the system stable at lambda_p = {lambda_p}, lambda_s = {lambda_s}"
    )]
    Infeasible { lambda_p: f64, lambda_s: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
