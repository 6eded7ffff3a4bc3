// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form stability and delay results for the randomized cooperative
//! policy.
//!
//! Notation: `mu_p` is the `Q_p` service rate, `q = f_ps (1 - f_pd)` the
//! per-attempt probability that a PU packet is handed over to the relay
//! queue `Q_sp`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Flow, Result};
use crate::model::{ArrivalRates, ChannelProfile, OperatingPoint, PolicyParam};

/// Default margin for the strict stability inequalities.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Slack below which delay evaluators flag the result as ill-conditioned.
pub const CONDITION_SLACK: f64 = 1e-4;

/// Service rate of `Q_p`: a packet leaves when at least one of the
/// destination and the SU decodes it.
pub fn primary_service_rate(c: &ChannelProfile) -> f64 {
    c.f_pd() + c.relay_handover()
}

/// Largest sustainable `lambda_p` for a given `a`, set by the relay queue.
pub fn primary_rate_bound(c: &ChannelProfile, a: PolicyParam) -> f64 {
    primary_rate_bound_raw(c, a.get())
}

pub(crate) fn primary_rate_bound_raw(c: &ChannelProfile, a: f64) -> f64 {
    let relay_service = c.f_sd() * (1.0 - a);
    relay_service / (relay_service + c.relay_handover()) * primary_service_rate(c)
}

/// Largest sustainable `lambda_s` for a given `a` and `lambda_p`.
pub fn secondary_rate_bound(c: &ChannelProfile, a: PolicyParam, lambda_p: f64) -> Result<f64> {
    let mu_p = primary_service_rate(c);
    check_primary(lambda_p, mu_p)?;
    Ok(secondary_rate_bound_raw(c, a.get(), lambda_p))
}

fn secondary_rate_bound_raw(c: &ChannelProfile, a: f64, lambda_p: f64) -> f64 {
    a * c.f_sd() * (1.0 - lambda_p / primary_service_rate(c))
}

fn check_primary(lambda_p: f64, mu_p: f64) -> Result<()> {
    if lambda_p < mu_p {
        Ok(())
    } else {
        Err(Error::PrimaryOverloaded {
            lambda_p,
            service_rate: mu_p,
        })
    }
}

/// Open interval of policy parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AInterval {
    pub lower: f64,
    pub upper: f64,
}

impl AInterval {
    pub fn contains(&self, a: f64) -> bool {
        a > self.lower && a < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Unclipped endpoints `(a_l, a_u)` of the stabilizing range of `a`.
///
/// `a_l` makes `Q_s` critical, `a_u` makes `Q_sp` critical.
pub fn a_bounds(c: &ChannelProfile, r: &ArrivalRates) -> Result<(f64, f64)> {
    let mu_p = primary_service_rate(c);
    let lambda_p = r.lambda_p();
    check_primary(lambda_p, mu_p)?;
    let headroom = c.f_sd() * (mu_p - lambda_p);
    let lower = r.lambda_s() * mu_p / headroom;
    let upper = 1.0 - c.relay_handover() * lambda_p / headroom;
    Ok((lower, upper))
}

/// Values of `a` that keep all three queues stable, clipped to (0, 1).
/// `None` when the interval is empty.
pub fn feasible_a_interval(c: &ChannelProfile, r: &ArrivalRates) -> Result<Option<AInterval>> {
    let (lower, upper) = a_bounds(c, r)?;
    let lower = lower.max(0.0);
    let upper = upper.min(1.0);
    Ok((lower < upper).then_some(AInterval { lower, upper }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub mu_p: f64,
    pub lambda_p_max: f64,
    /// Clamped at zero when `Q_p` itself is overloaded.
    pub lambda_s_max: f64,
    pub stable: bool,
    pub a_interval: Option<AInterval>,
}

pub fn is_stable(p: &OperatingPoint) -> StabilityReport {
    is_stable_with_margin(p, STABILITY_MARGIN)
}

/// Stability verdict where "stable" means every rate sits at least `margin`
/// below its bound.
pub fn is_stable_with_margin(p: &OperatingPoint, margin: f64) -> StabilityReport {
    let c = &p.channel;
    let mu_p = primary_service_rate(c);
    let lambda_p_max = primary_rate_bound(c, p.a);
    let lambda_s_max = secondary_rate_bound_raw(c, p.a.get(), p.lambda_p()).max(0.0);
    let stable = p.lambda_p() < lambda_p_max - margin && p.lambda_s() < lambda_s_max - margin;
    let a_interval = feasible_a_interval(c, &p.rates).ok().flatten();
    StabilityReport {
        mu_p,
        lambda_p_max,
        lambda_s_max,
        stable,
        a_interval,
    }
}

/// Multiplier on `lambda_p` in the union-region boundary line.
fn union_slope(c: &ChannelProfile) -> f64 {
    (c.f_sd() + c.relay_handover()) / primary_service_rate(c)
}

/// Outer boundary of the union of the stability regions over all `a`,
/// clamped at zero past the x-intercept.
pub fn union_boundary(c: &ChannelProfile, lambda_p: f64) -> f64 {
    (c.f_sd() - union_slope(c) * lambda_p).max(0.0)
}

/// `lambda_p` at which the union boundary reaches zero.
pub fn union_x_intercept(c: &ChannelProfile) -> f64 {
    c.f_sd() / union_slope(c)
}

/// Boundary without relaying: `Q_p` is served at `f_pd` and the SU owns
/// every PU-idle slot.
pub fn no_cooperation_boundary(c: &ChannelProfile, lambda_p: f64) -> Result<f64> {
    check_primary(lambda_p, c.f_pd())?;
    Ok(c.f_sd() * (1.0 - lambda_p / c.f_pd()))
}

/// Probability that a departing PU packet was decoded only by the SU and
/// therefore also waits in `Q_sp`.
pub fn relay_capture_prob(c: &ChannelProfile) -> f64 {
    c.relay_handover() / primary_service_rate(c)
}

/// Long-run fraction of slots with `Q_p` empty.
pub fn primary_idle_prob(c: &ChannelProfile, lambda_p: f64) -> Result<f64> {
    let mu_p = primary_service_rate(c);
    check_primary(lambda_p, mu_p)?;
    Ok(1.0 - lambda_p / mu_p)
}

/// Long-run probability that both `Q_p` and `Q_s` are empty.
pub fn empty_prob(c: &ChannelProfile, a: PolicyParam, r: &ArrivalRates) -> Result<f64> {
    let mu_p = primary_service_rate(c);
    check_primary(r.lambda_p(), mu_p)?;
    let own = a.get() * c.f_sd();
    Ok((own * (mu_p - r.lambda_p()) - r.lambda_s() * mu_p) / (own * mu_p))
}

/// Mean length of `Q_p`. Depends on neither `a` nor `lambda_s`.
pub fn avg_len_p(c: &ChannelProfile, lambda_p: f64) -> Result<f64> {
    let mu_p = primary_service_rate(c);
    check_primary(lambda_p, mu_p)?;
    Ok((lambda_p - lambda_p * lambda_p) / (mu_p - lambda_p))
}

/// Coefficients of the rational function giving the mean `Q_sp` length:
/// `N_sp = (m l^2 + n l) / (alpha l^2 + beta l + gamma)` with `l = lambda_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelayCoefficients {
    pub m: f64,
    pub n: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl RelayCoefficients {
    pub fn new(c: &ChannelProfile, a: PolicyParam) -> Self {
        Self::from_raw(c, a.get())
    }

    pub(crate) fn from_raw(c: &ChannelProfile, a: f64) -> Self {
        let mu_p = primary_service_rate(c);
        let q = c.relay_handover();
        let relay_service = (1.0 - a) * c.f_sd();
        Self {
            m: q * ((relay_service - c.f_pd()) / mu_p - relay_service - q),
            n: q * mu_p,
            alpha: relay_service + q,
            beta: mu_p * (-2.0 * relay_service - q),
            gamma: relay_service * mu_p * mu_p,
        }
    }

    pub fn eval(&self, lambda_p: f64) -> f64 {
        let l = lambda_p;
        (self.m * l * l + self.n * l) / (self.alpha * l * l + self.beta * l + self.gamma)
    }
}

/// Mean length of the relay queue `Q_sp`.
pub fn avg_len_sp(c: &ChannelProfile, a: PolicyParam, lambda_p: f64) -> Result<f64> {
    avg_len_sp_raw(c, a.get(), lambda_p)
}

fn avg_len_sp_raw(c: &ChannelProfile, a: f64, lambda_p: f64) -> Result<f64> {
    let bound = primary_rate_bound_raw(c, a);
    if lambda_p.partial_cmp(&bound) != Some(Ordering::Less) {
        return Err(Error::RelayOverloaded { lambda_p, bound });
    }
    Ok(RelayCoefficients::from_raw(c, a).eval(lambda_p))
}

/// Coefficients `A`, `B`, `C` of the mean `Q_s` length:
/// `N_s = (lp ls A + (ls^2 - ls) B (B + lp)) / (B C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondaryCoefficients {
    pub coef_a: f64,
    pub coef_b: f64,
    pub coef_c: f64,
}

impl SecondaryCoefficients {
    pub fn new(c: &ChannelProfile, a: PolicyParam, r: &ArrivalRates) -> Self {
        Self::from_raw(c, a.get(), r)
    }

    pub(crate) fn from_raw(c: &ChannelProfile, a: f64, r: &ArrivalRates) -> Self {
        let mu_p = primary_service_rate(c);
        let own = a * c.f_sd();
        Self {
            coef_a: own * (mu_p - 1.0),
            coef_b: mu_p - r.lambda_p(),
            coef_c: (r.lambda_s() - own) * mu_p + own * r.lambda_p(),
        }
    }

    pub fn eval(&self, r: &ArrivalRates) -> f64 {
        let (lp, ls) = (r.lambda_p(), r.lambda_s());
        let b = self.coef_b;
        (lp * ls * self.coef_a + (ls * ls - ls) * b * (b + lp)) / (b * self.coef_c)
    }
}

/// Mean length of the SU's own queue `Q_s`. Requires a stable point.
pub fn avg_len_s(c: &ChannelProfile, a: PolicyParam, r: &ArrivalRates) -> Result<f64> {
    let p = OperatingPoint::new(*c, *r, a)?;
    if !is_stable(&p).stable {
        return Err(Error::Unstable);
    }
    Ok(SecondaryCoefficients::new(c, a, r).eval(r))
}

/// Mean PU delay for any `a` in `[0, 1)` keeping `Q_sp` stable. Unlike
/// [`delay_report`] this does not require `Q_s` to be stable, which makes it
/// usable at the lower end of the feasible interval.
pub fn primary_delay_at(c: &ChannelProfile, a: f64, lambda_p: f64) -> Result<f64> {
    if lambda_p <= 0.0 {
        return Err(Error::ZeroRateFlow(Flow::Pu));
    }
    let n_sp = avg_len_sp_raw(c, a, lambda_p)?;
    Ok((avg_len_p(c, lambda_p)? + n_sp) / lambda_p)
}

/// Mean SU delay for any `a` in `(0, 1]` keeping `Q_s` stable; `Q_sp` is
/// not consulted.
pub fn secondary_delay_at(c: &ChannelProfile, a: f64, r: &ArrivalRates) -> Result<f64> {
    if r.lambda_s() <= 0.0 {
        return Err(Error::ZeroRateFlow(Flow::Su));
    }
    let mu_p = primary_service_rate(c);
    check_primary(r.lambda_p(), mu_p)?;
    let bound = secondary_rate_bound_raw(c, a, r.lambda_p());
    if r.lambda_s().partial_cmp(&bound) != Some(Ordering::Less) {
        return Err(Error::Unstable);
    }
    Ok(SecondaryCoefficients::from_raw(c, a, r).eval(r) / r.lambda_s())
}

/// Which stability bound is close enough to make the closed forms
/// ill-conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionWarning {
    RelayNearCritical { slack: f64 },
    SecondaryNearCritical { slack: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub n_p: f64,
    pub n_sp: f64,
    pub n_s: f64,
    pub d_p: f64,
    pub d_s: f64,
    pub epsilon: f64,
    pub g00: f64,
    pub warnings: Vec<ConditionWarning>,
}

impl DelayReport {
    pub fn is_well_conditioned(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// All closed-form queue lengths and delays at a stable point with both
/// flows active.
pub fn delay_report(p: &OperatingPoint) -> Result<DelayReport> {
    let report = is_stable(p);
    if !report.stable {
        return Err(Error::Unstable);
    }
    let (lp, ls) = (p.lambda_p(), p.lambda_s());
    if lp <= 0.0 {
        return Err(Error::ZeroRateFlow(Flow::Pu));
    }
    if ls <= 0.0 {
        return Err(Error::ZeroRateFlow(Flow::Su));
    }
    let c = &p.channel;
    let n_p = avg_len_p(c, lp)?;
    let n_sp = avg_len_sp(c, p.a, lp)?;
    let n_s = SecondaryCoefficients::new(c, p.a, &p.rates).eval(&p.rates);

    let mut warnings = Vec::new();
    let relay_slack = report.lambda_p_max - lp;
    if relay_slack < CONDITION_SLACK {
        warnings.push(ConditionWarning::RelayNearCritical { slack: relay_slack });
    }
    let secondary_slack = report.lambda_s_max - ls;
    if secondary_slack < CONDITION_SLACK {
        warnings.push(ConditionWarning::SecondaryNearCritical {
            slack: secondary_slack,
        });
    }

    Ok(DelayReport {
        n_p,
        n_sp,
        n_s,
        d_p: (n_p + n_sp) / lp,
        d_s: n_s / ls,
        epsilon: relay_capture_prob(c),
        g00: empty_prob(c, p.a, &p.rates)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_point, PointSpec};

    const REF: ChannelProfile = ChannelProfile::REFERENCE;

    fn a(v: f64) -> PolicyParam {
        PolicyParam::new(v).unwrap()
    }

    fn rates(lp: f64, ls: f64) -> ArrivalRates {
        ArrivalRates::new(lp, ls).unwrap()
    }

    fn point(lp: f64, ls: f64, av: f64) -> OperatingPoint {
        OperatingPoint::new(REF, rates(lp, ls), a(av)).unwrap()
    }

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn service_rate() {
        assert!(close(primary_service_rate(&REF), 0.58, 1e-15));
        let sure = ChannelProfile::new(0.999_999, 0.5, 0.5).unwrap();
        assert!(close(primary_service_rate(&sure), 1.0, 1e-6));
        let x = ChannelProfile::new(0.2, 0.5, 0.7).unwrap();
        let y = ChannelProfile::new(0.7, 0.5, 0.2).unwrap();
        assert!(close(
            primary_service_rate(&x),
            primary_service_rate(&y),
            1e-15
        ));
    }

    #[test]
    fn rate_bounds() {
        assert!(close(
            primary_rate_bound(&REF, a(0.6)),
            0.309_333_333_333,
            1e-9
        ));
        assert!(primary_rate_bound(&REF, a(1.0 - 1e-9)) < 1e-8);
        assert!(primary_rate_bound(&REF, a(0.3)) > primary_rate_bound(&REF, a(0.6)));
        assert!(primary_rate_bound(&REF, a(0.01)) < primary_service_rate(&REF));

        assert!(close(
            secondary_rate_bound(&REF, a(0.6), 0.2).unwrap(),
            0.314_482_758_621,
            1e-9
        ));
        assert!(close(
            secondary_rate_bound(&REF, a(0.6), 0.0).unwrap(),
            0.48,
            1e-15
        ));
        assert!(secondary_rate_bound(&REF, a(1e-9), 0.2).unwrap() < 1e-8);
        assert!(matches!(
            secondary_rate_bound(&REF, a(0.5), 0.58),
            Err(Error::PrimaryOverloaded { .. })
        ));
    }

    #[test]
    fn stability_verdicts() {
        let r = is_stable(&point(0.2, 0.2, 0.5));
        assert!(r.stable);
        let iv = r.a_interval.unwrap();
        assert!(iv.contains(0.5));
        assert!(close(iv.lower, 0.381_578_947, 1e-8));
        assert!(close(iv.upper, 0.815_789_474, 1e-8));

        let r = is_stable(&point(0.2, 0.2, 0.9));
        assert!(!r.stable);
        assert!(close(r.lambda_p_max, 0.128_888_888_889, 1e-9));

        for av in [0.01, 0.5, 0.99] {
            assert!(is_stable(&point(0.0, 0.0, av)).stable);
        }
    }

    #[test]
    fn stability_with_overloaded_primary() {
        let r = is_stable(&point(0.7, 0.1, 0.5));
        assert!(!r.stable);
        assert_eq!(r.lambda_s_max, 0.0);
        assert!(r.a_interval.is_none());
    }

    #[test]
    fn margin_decides_boundary_points() {
        let c = REF;
        let bound = primary_rate_bound(&c, a(0.6));
        let p = OperatingPoint::new(c, rates(bound, 0.01), a(0.6)).unwrap();
        assert!(!is_stable(&p).stable);
        let p = OperatingPoint::new(c, rates(bound - 1e-7, 0.01), a(0.6)).unwrap();
        assert!(is_stable(&p).stable);
        assert!(!is_stable_with_margin(&p, 1e-6).stable);
    }

    #[test]
    fn interval_edges() {
        let iv = feasible_a_interval(&REF, &rates(0.2, 0.0))
            .unwrap()
            .unwrap();
        assert_eq!(iv.lower, 0.0);
        assert!(close(iv.upper, 0.815_789_474, 1e-8));

        // On the union boundary the two ends coincide.
        let ls = union_boundary(&REF, 0.2);
        let (lo, hi) = a_bounds(&REF, &rates(0.2, ls)).unwrap();
        assert!(close(lo, hi, 1e-12));
        assert!(feasible_a_interval(&REF, &rates(0.2, ls))
            .unwrap()
            .map_or(true, |iv| iv.width() < 1e-12));

        assert!(matches!(
            feasible_a_interval(&REF, &rates(0.6, 0.1)),
            Err(Error::PrimaryOverloaded { .. })
        ));
    }

    #[test]
    fn union_and_baseline() {
        assert!(close(union_boundary(&REF, 0.2), 0.427_586_206_897, 1e-9));
        assert!(close(union_boundary(&REF, 0.0), 0.8, 1e-15));
        assert!(close(union_x_intercept(&REF), 0.429_629_629_630, 1e-9));
        assert_eq!(union_boundary(&REF, 0.5), 0.0);

        assert!(close(
            no_cooperation_boundary(&REF, 0.2).unwrap(),
            0.266_666_666_667,
            1e-9
        ));
        assert!(close(
            no_cooperation_boundary(&REF, 0.0).unwrap(),
            0.8,
            1e-15
        ));
        assert!(no_cooperation_boundary(&REF, 0.3 - 1e-12).unwrap() < 1e-10);
        assert!(no_cooperation_boundary(&REF, 0.3).is_err());
    }

    #[test]
    fn capture_probability() {
        assert!(close(relay_capture_prob(&REF), 0.482_758_620_690, 1e-9));
        let direct = ChannelProfile::new(0.999_999, 0.5, 0.5).unwrap();
        assert!(relay_capture_prob(&direct) < 1e-6);
        let deaf = ChannelProfile::new(0.3, 0.5, 1e-9).unwrap();
        assert!(relay_capture_prob(&deaf) < 1e-8);
    }

    #[test]
    fn primary_length() {
        assert!(close(
            avg_len_p(&REF, 0.2).unwrap(),
            0.421_052_631_579,
            1e-9
        ));
        assert_eq!(avg_len_p(&REF, 0.0).unwrap(), 0.0);
        assert!(avg_len_p(&REF, 0.58).is_err());
    }

    #[test]
    fn relay_coefficients_match_hand_computation() {
        let k = RelayCoefficients::new(&REF, a(0.6));
        assert!(close(k.m, -0.158_344_827_586, 1e-9));
        assert!(close(k.n, 0.1624, 1e-12));
        assert!(close(k.alpha, 0.60, 1e-12));
        assert!(close(k.beta, -0.5336, 1e-12));
        assert!(close(k.gamma, 0.107_648, 1e-12));
        assert!(close(
            avg_len_sp(&REF, a(0.6), 0.2).unwrap(),
            1.048_869_018_636,
            1e-9
        ));
        assert_eq!(avg_len_sp(&REF, a(0.6), 0.0).unwrap(), 0.0);
        assert!(matches!(
            avg_len_sp(&REF, a(0.9), 0.2),
            Err(Error::RelayOverloaded { .. })
        ));
    }

    #[test]
    fn relay_length_blows_up_at_upper_end() {
        let (_, a_u) = a_bounds(&REF, &rates(0.2, 0.2)).unwrap();
        let mut last = 0.0;
        for gap in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let v = avg_len_sp(&REF, a(a_u - gap), 0.2).unwrap();
            assert!(v > last);
            last = v;
        }
        assert!(last > 1e4);
    }

    #[test]
    fn secondary_length() {
        let r = rates(0.2, 0.15);
        let k = SecondaryCoefficients::new(&REF, a(0.6), &r);
        assert!(close(k.coef_a, -0.2016, 1e-12));
        assert!(close(k.coef_b, 0.38, 1e-12));
        assert!(close(k.coef_c, -0.0954, 1e-12));
        assert!(close(
            avg_len_s(&REF, a(0.6), &r).unwrap(),
            0.941_989_407_481,
            1e-9
        ));
        assert_eq!(avg_len_s(&REF, a(0.6), &rates(0.2, 0.0)).unwrap(), 0.0);
        assert!(matches!(avg_len_s(&REF, a(0.2), &r), Err(Error::Unstable)));
    }

    #[test]
    fn secondary_low_load_limit() {
        // PU silent: D_s -> 1 / (a f_sd) as lambda_s -> 0.
        let av = 0.6;
        let d = secondary_delay_at(&REF, av, &rates(0.0, 1e-7)).unwrap();
        assert!(close(d, 1.0 / (av * 0.8), 1e-5));
    }

    #[test]
    fn spot_delay_report() {
        let d = delay_report(&point(0.2, 0.15, 0.6)).unwrap();
        assert!(close(d.n_p, 0.421_052_631_579, 1e-9));
        assert!(close(d.n_sp, 1.048_869_018_636, 1e-9));
        assert!(close(d.n_s, 0.941_989_407_481, 1e-9));
        assert!(close(d.d_p, 7.349_608_251_073, 1e-9));
        assert!(close(d.d_s, 6.279_929_383_206, 1e-9));
        assert!(close(d.g00, 0.342_672_413_793, 1e-9));
        assert!(close(d.epsilon, 0.482_758_620_690, 1e-9));
        assert!(d.is_well_conditioned());
        assert_eq!(d.d_p, (d.n_p + d.n_sp) / 0.2);
        assert_eq!(d.d_s, d.n_s / 0.15);
        assert!(close(
            primary_idle_prob(&REF, 0.2).unwrap(),
            0.655_172_413_793,
            1e-9
        ));
    }

    #[test]
    fn delay_report_errors() {
        assert!(matches!(
            delay_report(&point(0.2, 0.2, 0.9)),
            Err(Error::Unstable)
        ));
        assert!(matches!(
            delay_report(&point(0.0, 0.1, 0.6)),
            Err(Error::ZeroRateFlow(Flow::Pu))
        ));
        assert!(matches!(
            delay_report(&point(0.2, 0.0, 0.6)),
            Err(Error::ZeroRateFlow(Flow::Su))
        ));
    }

    #[test]
    fn primary_delay_ignores_secondary_rate() {
        let d1 = delay_report(&point(0.2, 0.1, 0.6)).unwrap();
        let d2 = delay_report(&point(0.2, 1e-9, 0.6)).unwrap();
        assert_eq!(d1.d_p, d2.d_p);
        assert_eq!(d1.n_p, d2.n_p);
        assert!(d2.d_s.is_finite());
    }

    #[test]
    fn near_boundary_warning() {
        let (a_l, _) = a_bounds(&REF, &rates(0.2, 0.2)).unwrap();
        let d = delay_report(&point(0.2, 0.2, a_l + 1e-6)).unwrap();
        assert!(matches!(
            d.warnings.as_slice(),
            [ConditionWarning::SecondaryNearCritical { .. }]
        ));
    }

    #[test]
    fn validated_point_feeds_analysis() {
        let p = validate_point(&PointSpec {
            f_pd: 0.3,
            f_sd: 0.8,
            f_ps: 0.4,
            lambda_p: 0.2,
            lambda_s: 0.2,
            a: 0.5,
        })
        .unwrap();
        assert!(is_stable(&p).stable);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn channel() -> impl Strategy<Value = ChannelProfile> {
            (0.05f64..0.95, 0.05f64..0.95, 0.05f64..0.95)
                .prop_map(|(pd, sd, ps)| ChannelProfile::new(pd, sd, ps).unwrap())
        }

        /// A stable point drawn inside the union region, with its interval.
        fn stable_point() -> impl Strategy<Value = (ChannelProfile, ArrivalRates, AInterval)> {
            (channel(), 0.05f64..0.9, 0.05f64..0.9).prop_filter_map(
                "empty interval",
                |(c, xp, xs)| {
                    let lp = xp * union_x_intercept(&c);
                    let ls = xs * union_boundary(&c, lp);
                    let r = ArrivalRates::new(lp, ls).ok()?;
                    let iv = feasible_a_interval(&c, &r).ok()??;
                    (iv.width() > 1e-3).then_some((c, r, iv))
                },
            )
        }

        proptest! {
            #[test]
            fn delays_monotone_in_a((c, r, iv) in stable_point()) {
                let grid: Vec<f64> = (1..=50)
                    .map(|i| iv.lower + iv.width() * i as f64 / 51.0)
                    .collect();
                let reports: Vec<DelayReport> = grid
                    .iter()
                    .map(|&av| delay_report(&OperatingPoint::new(c, r, a(av)).unwrap()).unwrap())
                    .collect();
                for w in reports.windows(2) {
                    prop_assert!(w[0].d_p < w[1].d_p);
                    prop_assert!(w[0].d_s > w[1].d_s);
                }
            }

            #[test]
            fn finite_difference_signs((c, r, iv) in stable_point()) {
                let h = 1e-4;
                for i in 1..20 {
                    let av = iv.lower + iv.width() * i as f64 / 20.0;
                    if av - h <= iv.lower || av + h >= iv.upper {
                        continue;
                    }
                    let dp = (primary_delay_at(&c, av + h, r.lambda_p()).unwrap()
                        - primary_delay_at(&c, av - h, r.lambda_p()).unwrap()) / (2.0 * h);
                    let ds = (secondary_delay_at(&c, av + h, &r).unwrap()
                        - secondary_delay_at(&c, av - h, &r).unwrap()) / (2.0 * h);
                    prop_assert!(dp > 0.0);
                    prop_assert!(ds < 0.0);
                }
            }

            #[test]
            fn rate_bounds_monotone(c in channel(), a1 in 0.01f64..0.98, gap in 1e-3f64..0.01, x in 0.0f64..0.99) {
                let a2 = a1 + gap;
                prop_assert!(primary_rate_bound(&c, a(a1)) > primary_rate_bound(&c, a(a2)));
                let lp = x * primary_service_rate(&c);
                prop_assert!(secondary_rate_bound(&c, a(a1), lp).unwrap()
                    < secondary_rate_bound(&c, a(a2), lp).unwrap());
            }

            #[test]
            fn primary_terms_ignore_a_and_secondary_rate((c, r, iv) in stable_point()) {
                let p1 = OperatingPoint::new(c, r, a(iv.lower + 0.25 * iv.width())).unwrap();
                let r2 = ArrivalRates::new(r.lambda_p(), r.lambda_s() * 0.5).unwrap();
                let p2 = OperatingPoint::new(c, r2, a(iv.lower + 0.75 * iv.width())).unwrap();
                prop_assert_eq!(delay_report(&p1).unwrap().n_p, delay_report(&p2).unwrap().n_p);
                let d_a = delay_report(&p1).unwrap().d_p;
                let p3 = OperatingPoint::new(c, r2, p1.a).unwrap();
                prop_assert_eq!(d_a, delay_report(&p3).unwrap().d_p);
            }

            #[test]
            fn empty_probabilities_ordered((c, r, iv) in stable_point(), t in 0.01f64..0.99) {
                let p = OperatingPoint::new(c, r, a(iv.lower + t * iv.width())).unwrap();
                let g00 = delay_report(&p).unwrap().g00;
                let g01 = primary_idle_prob(&c, r.lambda_p()).unwrap();
                prop_assert!(g00 > 0.0 && g00 < 1.0);
                prop_assert!(g00 <= g01);
            }

            #[test]
            fn union_matches_grid_max(c in channel(), x in 0.0f64..0.95) {
                let lp = x * union_x_intercept(&c);
                let steps = 2000;
                let best = (1..steps)
                    .map(|i| i as f64 / steps as f64)
                    .filter(|&av| primary_rate_bound(&c, a(av)) > lp)
                    .map(|av| secondary_rate_bound(&c, a(av), lp).unwrap())
                    .fold(0.0f64, f64::max);
                let exact = union_boundary(&c, lp);
                // sd-bound slope in a is at most f_sd < 1.
                prop_assert!(best <= exact + 1e-12);
                prop_assert!(exact - best <= 2.0 / steps as f64);
            }

            #[test]
            fn stable_points_lie_in_their_interval((c, r, iv) in stable_point(), av in 0.001f64..0.999) {
                let p = OperatingPoint::new(c, r, a(av)).unwrap();
                let rep = is_stable(&p);
                if rep.stable {
                    prop_assert!(rep.a_interval.unwrap().contains(av));
                }
                prop_assert_eq!(rep.stable, p.lambda_p() < rep.lambda_p_max - STABILITY_MARGIN
                    && p.lambda_s() < rep.lambda_s_max - STABILITY_MARGIN);
                let _ = iv;
            }
        }
    }
}
