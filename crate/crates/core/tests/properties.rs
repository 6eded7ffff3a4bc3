// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

use coopra_core::analysis;
use coopra_core::optimize::{optimal_a, Objective, OptimizationRequest};
use coopra_core::sim;
use coopra_core::{ArrivalRates, ChannelProfile, OperatingPoint, Policy, PolicyParam, SimConfig};
use proptest::prelude::*;

fn channel() -> impl Strategy<Value = ChannelProfile> {
    (0.05..0.95f64, 0.05..0.95f64, 0.05..0.95f64)
        .prop_map(|(pd, sd, ps)| ChannelProfile::new(pd, sd, ps).unwrap())
}

fn rates() -> impl Strategy<Value = ArrivalRates> {
    (0.01..0.6f64, 0.01..0.6f64).prop_map(|(p, s)| ArrivalRates::new(p, s).unwrap())
}

fn policy() -> impl Strategy<Value = Policy> {
    prop_oneof![
        (0.01..0.99f64).prop_map(|a| Policy::Randomized(PolicyParam::new(a).unwrap())),
        Just(Policy::PriorityRelay),
        Just(Policy::NoCooperation),
    ]
}

fn feasible() -> impl Strategy<Value = (ChannelProfile, ArrivalRates, f64)> {
    (channel(), rates(), 0.0..1.0f64).prop_filter_map("empty interval", |(c, r, u)| {
        let iv = analysis::feasible_a_interval(&c, &r).ok()??;
        (iv.width() > 1e-3).then(|| (c, r, iv.lower + u * iv.width()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_is_conserved(c in channel(), r in rates(), p in policy(), seed in any::<u64>()) {
        let cfg = SimConfig::new(c, r, p, 5_000, seed, 2);
        for rep in sim::run_replications(&cfg).unwrap() {
            prop_assert_eq!(rep.pu_imbalance(), 0);
            prop_assert_eq!(rep.su_imbalance(), 0);
        }
    }

    #[test]
    fn primary_queue_ignores_cooperation_policy(
        c in channel(),
        r in rates(),
        a in 0.01..0.99f64,
        b in 0.01..0.99f64,
        seed in any::<u64>(),
    ) {
        let run = |p| sim::trajectory(&SimConfig::new(c, r, p, 2_000, seed, 1), 0, 2_000);
        let qa: Vec<u64> = run(Policy::Randomized(PolicyParam::new(a).unwrap())).iter().map(|s| s.q_p).collect();
        let qb: Vec<u64> = run(Policy::Randomized(PolicyParam::new(b).unwrap())).iter().map(|s| s.q_p).collect();
        let qr: Vec<u64> = run(Policy::PriorityRelay).iter().map(|s| s.q_p).collect();
        prop_assert_eq!(&qa, &qb);
        prop_assert_eq!(&qa, &qr);
    }

    #[test]
    fn littles_law_in_closed_form((c, r, a) in feasible()) {
        let p = OperatingPoint::new(c, r, PolicyParam::new(a).unwrap()).unwrap();
        let d = analysis::delay_report(&p).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
        prop_assert!(rel(d.d_p, (d.n_p + d.n_sp) / r.lambda_p()));
        prop_assert!(rel(d.d_s, d.n_s / r.lambda_s()));
        prop_assert!(d.g00 >= 0.0 && d.g00 <= 1.0);
    }

    #[test]
    fn interval_matches_stability((c, r, a) in feasible()) {
        let p = OperatingPoint::new(c, r, PolicyParam::new(a).unwrap()).unwrap();
        let report = analysis::is_stable(&p);
        let iv = report.a_interval.unwrap();
        prop_assert_eq!(report.stable, iv.contains(a));
        for outside in [iv.lower - 1e-3, iv.upper + 1e-3] {
            if outside > 0.0 && outside < 1.0 {
                let q = OperatingPoint::new(c, r, PolicyParam::new(outside).unwrap()).unwrap();
                prop_assert!(!analysis::is_stable(&q).stable);
            }
        }
    }

    #[test]
    fn weighted_optimum_beats_grid((c, r, _) in feasible(), w_p in 0.0..1.0f64) {
        let objective = Objective::WeightedSum { w_p, w_s: 1.0 - w_p + 1e-3 };
        let req = OptimizationRequest::new(c, r, objective);
        let opt = optimal_a(&req).unwrap();
        prop_assert!(opt.interval.contains(opt.a));
        let Objective::WeightedSum { w_p, w_s } = objective else { unreachable!() };
        let inner = (opt.interval.lower + req.margin, opt.interval.upper - req.margin);
        for i in 0..=100 {
            let a = inner.0 + (inner.1 - inner.0) * i as f64 / 100.0;
            let p = OperatingPoint::new(c, r, PolicyParam::new(a).unwrap()).unwrap();
            let d = analysis::delay_report(&p).unwrap();
            let value = w_p * d.d_p + w_s * d.d_s;
            prop_assert!(opt.objective_value <= value * (1.0 + 1e-9), "a={} beats optimum", a);
        }
    }
}
