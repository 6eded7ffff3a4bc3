// Copyright 2026 The coopra Authors
// SPDX-License-Identifier: Apache-2.0

//! Slot-level Monte-Carlo simulator.
//!
//! Queue evolution follows `Q(t+1) = [Q(t) - Y(t)]^+ + X(t)`: departures are
//! decided from the slot-start state and arrivals are appended afterwards,
//! so a packet arriving in slot `t` is first eligible for service in slot
//! `t + 1`. Queue lengths are sampled at slot starts. A packet's sojourn is
//! `departure_slot - arrival_slot`; a relayed PU packet departs in the slot
//! the SU delivers it.
//!
//! # Random streams
//!
//! Each replication draws from six independent ChaCha8 streams, one per
//! event kind (PU arrival, SU arrival, PU-destination link, PU-SU link,
//! SU-destination link, queue selection). Stream `k` of replication `r` is
//! `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(r * 8 + k)`. PU-side
//! draws are therefore identical across policies under the same seed, which
//! gives common random numbers for paired comparisons and an identical `Q_p`
//! trajectory for every policy that relays.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Flow, Result};
use crate::model::{
    ArrivalRates, ChannelProfile, Departure, PolicyParam, QueueTriple, SlotOutcome, Transmitter,
};

/// 97.5% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "a", rename_all = "snake_case")]
pub enum Policy {
    /// Own queue w.p. `a`, relay queue otherwise, chosen before checking
    /// emptiness. Non-work-conserving.
    Randomized(PolicyParam),
    /// Relay queue first, own queue only when the relay queue is empty.
    PriorityRelay,
    /// No relaying: undecoded PU packets stay in `Q_p`.
    NoCooperation,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Randomized(_) => "randomized",
            Policy::PriorityRelay => "priority_relay",
            Policy::NoCooperation => "no_cooperation",
        }
    }
}

/// Source of the per-slot Bernoulli draws consumed by [`step`].
///
/// Each method is called only when the corresponding event is possible, so
/// implementations backed by separate streams stay aligned across policies.
pub trait SlotRandomness {
    fn pu_arrival(&mut self, p: f64) -> bool;
    fn su_arrival(&mut self, p: f64) -> bool;
    fn pd_success(&mut self, p: f64) -> bool;
    fn ps_success(&mut self, p: f64) -> bool;
    fn sd_success(&mut self, p: f64) -> bool;
    /// `true` selects `Q_s`, `false` selects `Q_sp`.
    fn selects_own(&mut self, a: f64) -> bool;
}

const STREAMS_PER_REPLICATION: u64 = 8;

/// The six seeded substreams of one replication.
#[derive(Debug, Clone)]
pub struct SlotStreams {
    pu_arrival: ChaCha8Rng,
    su_arrival: ChaCha8Rng,
    pd_link: ChaCha8Rng,
    ps_link: ChaCha8Rng,
    sd_link: ChaCha8Rng,
    selection: ChaCha8Rng,
}

impl SlotStreams {
    pub fn new(seed: u64, replication: u64) -> Self {
        let base = replication * STREAMS_PER_REPLICATION;
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(base + k);
            rng
        };
        Self {
            pu_arrival: stream(0),
            su_arrival: stream(1),
            pd_link: stream(2),
            ps_link: stream(3),
            sd_link: stream(4),
            selection: stream(5),
        }
    }
}

#[inline]
fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

impl SlotRandomness for SlotStreams {
    fn pu_arrival(&mut self, p: f64) -> bool {
        bernoulli(&mut self.pu_arrival, p)
    }
    fn su_arrival(&mut self, p: f64) -> bool {
        bernoulli(&mut self.su_arrival, p)
    }
    fn pd_success(&mut self, p: f64) -> bool {
        bernoulli(&mut self.pd_link, p)
    }
    fn ps_success(&mut self, p: f64) -> bool {
        bernoulli(&mut self.ps_link, p)
    }
    fn sd_success(&mut self, p: f64) -> bool {
        bernoulli(&mut self.sd_link, p)
    }
    fn selects_own(&mut self, a: f64) -> bool {
        bernoulli(&mut self.selection, a)
    }
}

fn inc(x: u64) -> u64 {
    x.checked_add(1).expect("queue length overflow")
}

/// Advances the queue state by one slot.
pub fn step<R: SlotRandomness>(
    state: QueueTriple,
    policy: Policy,
    channel: &ChannelProfile,
    rates: &ArrivalRates,
    draws: &mut R,
) -> (QueueTriple, SlotOutcome) {
    let mut next = state;
    let (transmitter, departure) = if state.q_p > 0 {
        let departure = if draws.pd_success(channel.f_pd()) {
            next.q_p -= 1;
            Departure::PuDirect
        } else if !matches!(policy, Policy::NoCooperation) && draws.ps_success(channel.f_ps()) {
            next.q_p -= 1;
            next.q_sp = inc(next.q_sp);
            Departure::PuToRelay
        } else {
            Departure::None
        };
        (Transmitter::Pu, departure)
    } else {
        let chosen = match policy {
            Policy::Randomized(a) => {
                let own = draws.selects_own(a.get());
                let (selected, other) = if own {
                    (state.q_s, state.q_sp)
                } else {
                    (state.q_sp, state.q_s)
                };
                if selected > 0 {
                    Some(own)
                } else if other > 0 {
                    return finish(
                        state,
                        next,
                        Transmitter::Wasted,
                        Departure::None,
                        rates,
                        draws,
                    );
                } else {
                    None
                }
            }
            Policy::PriorityRelay => {
                if state.q_sp > 0 {
                    Some(false)
                } else if state.q_s > 0 {
                    Some(true)
                } else {
                    None
                }
            }
            Policy::NoCooperation => (state.q_s > 0).then_some(true),
        };
        match chosen {
            None => (Transmitter::Idle, Departure::None),
            Some(own) => {
                let delivered = draws.sd_success(channel.f_sd());
                match (own, delivered) {
                    (true, true) => {
                        next.q_s -= 1;
                        (Transmitter::SuOwn, Departure::SuToDest)
                    }
                    (true, false) => (Transmitter::SuOwn, Departure::None),
                    (false, true) => {
                        next.q_sp -= 1;
                        (Transmitter::SuRelay, Departure::RelayToDest)
                    }
                    (false, false) => (Transmitter::SuRelay, Departure::None),
                }
            }
        }
    };
    finish(state, next, transmitter, departure, rates, draws)
}

fn finish<R: SlotRandomness>(
    _start: QueueTriple,
    mut next: QueueTriple,
    transmitter: Transmitter,
    departure: Departure,
    rates: &ArrivalRates,
    draws: &mut R,
) -> (QueueTriple, SlotOutcome) {
    let pu_arrival = draws.pu_arrival(rates.lambda_p());
    let su_arrival = draws.su_arrival(rates.lambda_s());
    if pu_arrival {
        next.q_p = inc(next.q_p);
    }
    if su_arrival {
        next.q_s = inc(next.q_s);
    }
    (
        next,
        SlotOutcome {
            transmitter,
            pu_arrival,
            su_arrival,
            departure,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub channel: ChannelProfile,
    pub rates: ArrivalRates,
    pub policy: Policy,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub replications: u32,
}

impl SimConfig {
    /// Config with the default warmup of 10% of the horizon.
    pub fn new(
        channel: ChannelProfile,
        rates: ArrivalRates,
        policy: Policy,
        horizon: u64,
        seed: u64,
        replications: u32,
    ) -> Self {
        Self {
            channel,
            rates,
            policy,
            horizon,
            warmup: horizon / 10,
            seed,
            replications,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.warmup >= self.horizon {
            return Err(Error::InvalidConfig(format!(
                "warmup {} must be below horizon {}",
                self.warmup, self.horizon
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Raw counters of one replication.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReplicationStats {
    /// Whole-horizon totals used for conservation checks.
    pub pu_arrivals: u64,
    pub su_arrivals: u64,
    pub pu_delivered: u64,
    pub su_delivered: u64,
    pub final_state: QueueTriple,

    /// Post-warmup slot count and sums.
    pub slots: u64,
    pub sum_q_p: u64,
    pub sum_q_sp: u64,
    pub sum_q_s: u64,
    pub g00_slots: u64,
    pub g01_slots: u64,
    pub idle_slots: u64,
    pub wasted_slots: u64,
    pub pu_delivered_after_warmup: u64,
    pub su_delivered_after_warmup: u64,
    pub pu_relayed_after_warmup: u64,
    pub pu_sojourn_sum: u64,
    pub su_sojourn_sum: u64,

    /// FNV-1a fold of the `Q_p` length at every slot start.
    pub q_p_fingerprint: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

impl ReplicationStats {
    pub fn metrics(&self) -> Metrics {
        let slots = self.slots as f64;
        let per_slot = |x: u64| x as f64 / slots;
        let mean_sojourn = |sum: u64, n: u64| {
            if n == 0 {
                f64::NAN
            } else {
                sum as f64 / n as f64
            }
        };
        Metrics {
            n_p: per_slot(self.sum_q_p),
            n_sp: per_slot(self.sum_q_sp),
            n_s: per_slot(self.sum_q_s),
            d_p: mean_sojourn(self.pu_sojourn_sum, self.pu_delivered_after_warmup),
            d_s: mean_sojourn(self.su_sojourn_sum, self.su_delivered_after_warmup),
            throughput_p: per_slot(self.pu_delivered_after_warmup),
            throughput_s: per_slot(self.su_delivered_after_warmup),
            g00: per_slot(self.g00_slots),
            g01: per_slot(self.g01_slots),
            relayed_fraction: if self.pu_delivered_after_warmup == 0 {
                f64::NAN
            } else {
                self.pu_relayed_after_warmup as f64 / self.pu_delivered_after_warmup as f64
            },
        }
    }

    /// PU arrivals minus deliveries minus residual backlog; zero by
    /// construction.
    pub fn pu_imbalance(&self) -> i128 {
        self.pu_arrivals as i128
            - self.pu_delivered as i128
            - self.final_state.q_p as i128
            - self.final_state.q_sp as i128
    }

    pub fn su_imbalance(&self) -> i128 {
        self.su_arrivals as i128 - self.su_delivered as i128 - self.final_state.q_s as i128
    }
}

/// Per-replication estimates, also used for across-replication means and
/// confidence half-widths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub n_p: f64,
    pub n_sp: f64,
    pub n_s: f64,
    pub d_p: f64,
    pub d_s: f64,
    pub throughput_p: f64,
    pub throughput_s: f64,
    pub g00: f64,
    pub g01: f64,
    /// Fraction of delivered PU packets that went through `Q_sp`.
    pub relayed_fraction: f64,
}

impl Metrics {
    fn fields(&self) -> [f64; 10] {
        [
            self.n_p,
            self.n_sp,
            self.n_s,
            self.d_p,
            self.d_s,
            self.throughput_p,
            self.throughput_s,
            self.g00,
            self.g01,
            self.relayed_fraction,
        ]
    }

    fn from_fields(f: [f64; 10]) -> Self {
        Self {
            n_p: f[0],
            n_sp: f[1],
            n_s: f[2],
            d_p: f[3],
            d_s: f[4],
            throughput_p: f[5],
            throughput_s: f[6],
            g00: f[7],
            g01: f[8],
            relayed_fraction: f[9],
        }
    }

    /// Across-replication mean and 95% normal-theory half-width. The
    /// half-width is NaN for a single replication.
    pub fn summarize(samples: &[Metrics]) -> (Metrics, Metrics) {
        let n = samples.len() as f64;
        let mut mean = [0.0; 10];
        for s in samples {
            for (m, x) in mean.iter_mut().zip(s.fields()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut half = [f64::NAN; 10];
        if samples.len() > 1 {
            let mut ss = [0.0; 10];
            for s in samples {
                for ((acc, x), m) in ss.iter_mut().zip(s.fields()).zip(mean) {
                    *acc += (x - m) * (x - m);
                }
            }
            for (h, acc) in half.iter_mut().zip(ss) {
                *h = Z_95 * (acc / (n - 1.0)).sqrt() / n.sqrt();
            }
        }
        (Metrics::from_fields(mean), Metrics::from_fields(half))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub n_p_hat: f64,
    pub n_sp_hat: f64,
    pub n_s_hat: f64,
    pub d_p_hat: f64,
    pub d_s_hat: f64,
    pub throughput_p: f64,
    pub throughput_s: f64,
    /// Summed over replications, post-warmup only.
    pub idle_slots: u64,
    pub wasted_slots: u64,
    pub g00_hat: f64,
    pub g01_hat: f64,
    pub relayed_fraction_hat: f64,
    pub ci_halfwidth: Metrics,
    pub replications: Vec<ReplicationStats>,
}

impl SimResult {
    fn from_replications(replications: Vec<ReplicationStats>) -> Self {
        let samples: Vec<Metrics> = replications.iter().map(ReplicationStats::metrics).collect();
        let (mean, ci_halfwidth) = Metrics::summarize(&samples);
        Self {
            n_p_hat: mean.n_p,
            n_sp_hat: mean.n_sp,
            n_s_hat: mean.n_s,
            d_p_hat: mean.d_p,
            d_s_hat: mean.d_s,
            throughput_p: mean.throughput_p,
            throughput_s: mean.throughput_s,
            idle_slots: replications.iter().map(|r| r.idle_slots).sum(),
            wasted_slots: replications.iter().map(|r| r.wasted_slots).sum(),
            g00_hat: mean.g00,
            g01_hat: mean.g01,
            relayed_fraction_hat: mean.relayed_fraction,
            ci_halfwidth,
            replications,
        }
    }
}

/// FIFO packet bookkeeping on top of the count-level [`step`]. Each queued
/// packet is represented by its arrival slot.
struct PacketQueues {
    p: VecDeque<u64>,
    sp: VecDeque<u64>,
    s: VecDeque<u64>,
}

/// Runs one replication, calling `observe` with the slot-start state of every
/// slot.
fn simulate_replication(
    cfg: &SimConfig,
    replication: u64,
    mut observe: impl FnMut(u64, &QueueTriple),
) -> ReplicationStats {
    let mut draws = SlotStreams::new(cfg.seed, replication);
    let mut state = QueueTriple::EMPTY;
    let mut queues = PacketQueues {
        p: VecDeque::new(),
        sp: VecDeque::new(),
        s: VecDeque::new(),
    };
    let mut st = ReplicationStats {
        q_p_fingerprint: FNV_OFFSET,
        ..Default::default()
    };

    for t in 0..cfg.horizon {
        observe(t, &state);
        st.q_p_fingerprint = (st.q_p_fingerprint ^ state.q_p).wrapping_mul(FNV_PRIME);
        let measuring = t >= cfg.warmup;
        if measuring {
            st.slots += 1;
            st.sum_q_p += state.q_p;
            st.sum_q_sp += state.q_sp;
            st.sum_q_s += state.q_s;
            if state.q_p == 0 {
                st.g01_slots += 1;
                if state.q_s == 0 {
                    st.g00_slots += 1;
                }
            }
        }

        let (next, outcome) = step(state, cfg.policy, &cfg.channel, &cfg.rates, &mut draws);

        match outcome.departure {
            Departure::None => {}
            Departure::PuDirect => {
                let arrived = queues.p.pop_front().expect("Q_p bookkeeping");
                st.pu_delivered += 1;
                if measuring {
                    st.pu_delivered_after_warmup += 1;
                    st.pu_sojourn_sum += t - arrived;
                }
            }
            Departure::PuToRelay => {
                let arrived = queues.p.pop_front().expect("Q_p bookkeeping");
                queues.sp.push_back(arrived);
            }
            Departure::RelayToDest => {
                let arrived = queues.sp.pop_front().expect("Q_sp bookkeeping");
                st.pu_delivered += 1;
                if measuring {
                    st.pu_delivered_after_warmup += 1;
                    st.pu_relayed_after_warmup += 1;
                    st.pu_sojourn_sum += t - arrived;
                }
            }
            Departure::SuToDest => {
                let arrived = queues.s.pop_front().expect("Q_s bookkeeping");
                st.su_delivered += 1;
                if measuring {
                    st.su_delivered_after_warmup += 1;
                    st.su_sojourn_sum += t - arrived;
                }
            }
        }
        if measuring {
            match outcome.transmitter {
                Transmitter::Idle => st.idle_slots += 1,
                Transmitter::Wasted => st.wasted_slots += 1,
                _ => {}
            }
        }
        if outcome.pu_arrival {
            queues.p.push_back(t);
            st.pu_arrivals += 1;
        }
        if outcome.su_arrival {
            queues.s.push_back(t);
            st.su_arrivals += 1;
        }
        debug_assert_eq!(queues.p.len() as u64, next.q_p);
        state = next;
    }
    st.final_state = state;
    st
}

/// Runs every replication without checking that the statistics are defined.
/// Results are ordered by replication index regardless of scheduling.
pub fn run_replications(cfg: &SimConfig) -> Result<Vec<ReplicationStats>> {
    cfg.validate()?;
    Ok((0..u64::from(cfg.replications))
        .into_par_iter()
        .map(|r| simulate_replication(cfg, r, |_, _| {}))
        .collect())
}

/// Runs the configured replications and aggregates their statistics.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    let reps = run_replications(cfg)?;
    if reps.iter().any(|r| r.pu_delivered_after_warmup == 0) {
        return Err(Error::NoDeliveries(Flow::Pu));
    }
    if reps.iter().any(|r| r.su_delivered_after_warmup == 0) {
        return Err(Error::NoDeliveries(Flow::Su));
    }
    Ok(SimResult::from_replications(reps))
}

/// Like [`run`], but tolerates flows that delivered nothing; their delay
/// estimates are NaN.
pub fn run_lenient(cfg: &SimConfig) -> Result<SimResult> {
    Ok(SimResult::from_replications(run_replications(cfg)?))
}

/// Slot-start states of the first `slots` slots of one replication.
pub fn trajectory(cfg: &SimConfig, replication: u64, slots: u64) -> Vec<QueueTriple> {
    let cfg = SimConfig {
        horizon: slots,
        warmup: 0,
        ..*cfg
    };
    let mut out = Vec::with_capacity(slots as usize);
    simulate_replication(&cfg, replication, |_, s| out.push(*s));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    Bounded,
    Diverging,
}

/// Heuristic empirical stability check, meant as a test oracle.
///
/// A replication diverges when any queue ends above
/// `threshold * (1 + log10(horizon))`; the verdict is `Diverging` when a
/// strict majority of replications diverge.
pub fn stability_probe(cfg: &SimConfig, threshold: f64) -> Result<ProbeVerdict> {
    let limit = threshold * (1.0 + (cfg.horizon as f64).log10());
    let reps = run_replications(cfg)?;
    let diverging = reps
        .iter()
        .filter(|r| {
            let s = r.final_state;
            [s.q_p, s.q_sp, s.q_s].iter().any(|&q| q as f64 > limit)
        })
        .count();
    Ok(if 2 * diverging > reps.len() {
        ProbeVerdict::Diverging
    } else {
        ProbeVerdict::Bounded
    })
}
