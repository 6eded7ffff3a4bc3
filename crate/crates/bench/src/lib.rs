// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Benchmarks for `coopra-core`; see `benches/core.rs`.

use coopra_core::{ArrivalRates, ChannelProfile, OperatingPoint, PolicyParam};

/// The reference operating point `a = 0.6`, `lambda = (0.2, 0.15)`.
pub fn reference_point() -> OperatingPoint {
    OperatingPoint::new(
        ChannelProfile::REFERENCE,
        ArrivalRates::new(0.2, 0.15).expect("valid rates"),
        PolicyParam::new(0.6).expect("valid a"),
    )
    .expect("valid point")
}
