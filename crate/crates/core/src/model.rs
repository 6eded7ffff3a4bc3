// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Domain types shared by the analysis, simulation and optimization modules.
//!
//! Closed-form evaluators divide by expressions that vanish when a link
//! probability or the policy parameter hits 0 or 1, so the strict
//! constructors reject the boundaries. The simulator accepts the closed
//! range through [`ChannelProfile::closed`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn open_unit(field: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            field,
            value,
            range: "(0, 1)",
        })
    }
}

fn closed_unit(field: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            field,
            value,
            range: "[0, 1]",
        })
    }
}

fn half_open_unit(field: &'static str, value: f64) -> Result<f64> {
    if (0.0..1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            field,
            value,
            range: "[0, 1)",
        })
    }
}

/// Link-success probabilities of the three links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelProfile {
    f_pd: f64,
    f_sd: f64,
    f_ps: f64,
}

impl ChannelProfile {
    /// Channel used throughout the reproduction figures.
    pub const REFERENCE: ChannelProfile = ChannelProfile {
        f_pd: 0.3,
        f_sd: 0.8,
        f_ps: 0.4,
    };

    /// Strict constructor: every probability must lie in (0, 1).
    pub fn new(f_pd: f64, f_sd: f64, f_ps: f64) -> Result<Self> {
        Ok(Self {
            f_pd: open_unit("f_pd", f_pd)?,
            f_sd: open_unit("f_sd", f_sd)?,
            f_ps: open_unit("f_ps", f_ps)?,
        })
    }

    /// Accepts the closed range [0, 1]. Only the simulator is defined for
    /// such channels; closed-form evaluators may divide by zero.
    pub fn closed(f_pd: f64, f_sd: f64, f_ps: f64) -> Result<Self> {
        Ok(Self {
            f_pd: closed_unit("f_pd", f_pd)?,
            f_sd: closed_unit("f_sd", f_sd)?,
            f_ps: closed_unit("f_ps", f_ps)?,
        })
    }

    /// PU to destination.
    pub fn f_pd(&self) -> f64 {
        self.f_pd
    }

    /// SU to destination.
    pub fn f_sd(&self) -> f64 {
        self.f_sd
    }

    /// PU to SU.
    pub fn f_ps(&self) -> f64 {
        self.f_ps
    }

    /// Probability that a PU transmission misses the destination but is
    /// decoded by the SU, i.e. the per-attempt rate of hand-over to `Q_sp`.
    pub fn relay_handover(&self) -> f64 {
        self.f_ps * (1.0 - self.f_pd)
    }

    pub fn is_strict(&self) -> bool {
        [self.f_pd, self.f_sd, self.f_ps]
            .iter()
            .all(|&p| p > 0.0 && p < 1.0)
    }
}

impl Default for ChannelProfile {
    fn default() -> Self {
        Self::REFERENCE
    }
}

/// Bernoulli arrival rates in packets per slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArrivalRates {
    lambda_p: f64,
    lambda_s: f64,
}

impl ArrivalRates {
    pub fn new(lambda_p: f64, lambda_s: f64) -> Result<Self> {
        Ok(Self {
            lambda_p: half_open_unit("lambda_p", lambda_p)?,
            lambda_s: half_open_unit("lambda_s", lambda_s)?,
        })
    }

    pub fn lambda_p(&self) -> f64 {
        self.lambda_p
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }
}

/// Probability that the SU serves its own queue in a PU-idle slot.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct PolicyParam(f64);

impl PolicyParam {
    pub fn new(a: f64) -> Result<Self> {
        open_unit("a", a).map(Self)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A validated channel, rate pair and policy parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub channel: ChannelProfile,
    pub rates: ArrivalRates,
    pub a: PolicyParam,
}

impl OperatingPoint {
    /// Rejects channels built with [`ChannelProfile::closed`] that touch a boundary.
    pub fn new(channel: ChannelProfile, rates: ArrivalRates, a: PolicyParam) -> Result<Self> {
        open_unit("f_pd", channel.f_pd)?;
        open_unit("f_sd", channel.f_sd)?;
        open_unit("f_ps", channel.f_ps)?;
        Ok(Self { channel, rates, a })
    }

    pub fn lambda_p(&self) -> f64 {
        self.rates.lambda_p
    }

    pub fn lambda_s(&self) -> f64 {
        self.rates.lambda_s
    }
}

/// Unvalidated operating point, as read from a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub f_pd: f64,
    pub f_sd: f64,
    pub f_ps: f64,
    pub lambda_p: f64,
    pub lambda_s: f64,
    pub a: f64,
}

impl From<OperatingPoint> for PointSpec {
    fn from(p: OperatingPoint) -> Self {
        Self {
            f_pd: p.channel.f_pd,
            f_sd: p.channel.f_sd,
            f_ps: p.channel.f_ps,
            lambda_p: p.rates.lambda_p,
            lambda_s: p.rates.lambda_s,
            a: p.a.0,
        }
    }
}

/// Checks every range invariant and returns the typed point.
pub fn validate_point(spec: &PointSpec) -> Result<OperatingPoint> {
    let channel = ChannelProfile::new(spec.f_pd, spec.f_sd, spec.f_ps)?;
    let rates = ArrivalRates::new(spec.lambda_p, spec.lambda_s)?;
    let a = PolicyParam::new(spec.a)?;
    OperatingPoint::new(channel, rates, a)
}

/// Lengths of `Q_p`, `Q_sp` and `Q_s` at a slot boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct QueueTriple {
    pub q_p: u64,
    pub q_sp: u64,
    pub q_s: u64,
}

impl QueueTriple {
    pub const EMPTY: QueueTriple = QueueTriple {
        q_p: 0,
        q_sp: 0,
        q_s: 0,
    };

    pub fn new(q_p: u64, q_sp: u64, q_s: u64) -> Self {
        Self { q_p, q_sp, q_s }
    }

    pub fn total(&self) -> u64 {
        self.q_p + self.q_sp + self.q_s
    }
}

/// Who occupied the channel in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Transmitter {
    Pu,
    SuOwn,
    SuRelay,
    /// Nothing to send anywhere.
    Idle,
    /// PU idle, the SU picked an empty queue while the other one was backlogged.
    Wasted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Departure {
    None,
    PuDirect,
    PuToRelay,
    RelayToDest,
    SuToDest,
}

/// Event record for a single slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlotOutcome {
    pub transmitter: Transmitter,
    pub pu_arrival: bool,
    pub su_arrival: bool,
    pub departure: Departure,
}
