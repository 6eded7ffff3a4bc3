// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Randomized cooperative multiple access for a primary user (PU) and a
//! cognitive secondary user (SU) that relays PU packets.
//!
//! In every slot the PU transmits when its queue `Q_p` is backlogged. A PU
//! packet missed by the destination but decoded by the SU moves to the
//! SU-hosted relay queue `Q_sp`. In PU-idle slots the SU serves its own
//! queue `Q_s` with probability `a` and `Q_sp` otherwise, picking the queue
//! before looking at it.
//!
//! * [`analysis`] evaluates the closed-form stability region and delays.
//! * [`sim`] is a seeded slot-level simulator for the policy and two
//!   baselines.
//! * [`optimize`] picks the delay-minimizing `a` and generates sweeps.

pub mod analysis;
pub mod error;
pub mod model;
pub mod optimize;
pub mod sim;

pub use analysis::{AInterval, DelayReport, StabilityReport};
pub use error::{Error, Flow, Result};
pub use model::{
    validate_point, ArrivalRates, ChannelProfile, Departure, OperatingPoint, PointSpec,
    PolicyParam, QueueTriple, SlotOutcome, Transmitter,
};
pub use optimize::{Objective, OptimizationRequest, Optimum, SweepAxis, SweepPolicy, SweepSpec};
pub use sim::{Policy, SimConfig, SimResult};
