//! Discrete-event simulation of a disaggregated serving pipeline.
//!
//! Poisson arrivals are split uniformly at random across prefill instances,
//! each a FIFO single server. A finished prefill waits out the KV-transfer
//! delay, then joins the decode instance with the smallest current batch
//! (lowest index on ties). Decode instances advance in synchronized steps
//! whose length is the profiled TPOT at the current batch size; requests
//! admitted mid-step join at the next step boundary.
//!
//! Statistics are collected over arrivals after the warmup fraction and up to
//! the end of the arrival stream. The run then drains, so every admitted
//! request completes.
//!
//! Randomness comes from ChaCha8 with separate streams for interarrival
//! times, routing, and service times. Every stream is derived from
//! `(seed, stream)`, so results are bit-identical for a given config and
//! independent replications only need distinct `stream` values.

mod engine;
pub mod stats;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::planner::{self, SweepPoint};
use crate::queueing::{self, QueueParams};
use crate::types::{DecodePoint, DecodeProfile, PrefillProfile, SloSpec, WorkloadSpec};

pub use stats::MeanEstimate;

/// Generator behind every simulation.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Prefill service-time distribution; both have mean `input_len / TP_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServiceDistribution {
    #[default]
    Exponential,
    Deterministic,
}

/// When the arrival stream stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Stop after this many arrivals.
    Requests(u64),
    /// Stop generating arrivals after this many simulated seconds.
    Time(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_prefill: u32,
    pub n_decode: u32,
    /// Aggregate Poisson arrival rate, requests/s.
    pub arrival_rate: f64,
    pub input_len: u32,
    pub output_len: u32,
    pub prefill_max_throughput: f64,
    pub prefill_service: ServiceDistribution,
    pub kv_transfer_delay: f64,
    pub decode_curve: DecodeProfile,
    pub decode_batch_cap: Option<u32>,
    pub seed: u64,
    /// Replication index; selects an independent RNG stream for `seed`.
    pub stream: u64,
    pub horizon: Horizon,
    /// Fraction of the horizon discarded before statistics.
    pub warmup: f64,
    /// Number of batches for batch-means confidence intervals.
    pub batches: usize,
}

impl SimConfig {
    /// Config with the default 20% warmup and 20 batches.
    pub fn new(
        n_prefill: u32,
        n_decode: u32,
        arrival_rate: f64,
        prefill: &PrefillProfile,
        input_len: u32,
        output_len: u32,
        decode_curve: DecodeProfile,
    ) -> Self {
        SimConfig {
            n_prefill,
            n_decode,
            arrival_rate,
            input_len,
            output_len,
            prefill_max_throughput: prefill.max_throughput,
            prefill_service: ServiceDistribution::Exponential,
            kv_transfer_delay: 0.0,
            decode_curve,
            decode_batch_cap: None,
            seed: 0,
            stream: 0,
            horizon: Horizon::Requests(100_000),
            warmup: 0.2,
            batches: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_prefill < 1 || self.n_decode < 1 {
            return Err(Error::invalid("instances", "counts must be at least 1"));
        }
        if !(self.arrival_rate.is_finite() && self.arrival_rate > 0.0) {
            return Err(Error::invalid("arrival_rate", "must be positive"));
        }
        if self.input_len < 1 || self.output_len < 1 {
            return Err(Error::invalid("lengths", "must be at least 1"));
        }
        if !(self.prefill_max_throughput.is_finite() && self.prefill_max_throughput > 0.0) {
            return Err(Error::invalid("prefill_max_throughput", "must be positive"));
        }
        if !(self.kv_transfer_delay.is_finite() && self.kv_transfer_delay >= 0.0) {
            return Err(Error::invalid("kv_transfer_delay", "must be non-negative"));
        }
        if self.decode_batch_cap == Some(0) {
            return Err(Error::invalid("decode_batch_cap", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.warmup) {
            return Err(Error::invalid("warmup", "must be in [0, 1)"));
        }
        if self.batches < 2 {
            return Err(Error::invalid("batches", "need at least 2"));
        }
        match self.horizon {
            Horizon::Requests(n) => {
                let measured = n as f64 * (1.0 - self.warmup);
                if measured < self.batches as f64 {
                    return Err(Error::invalid(
                        "horizon",
                        "too few post-warmup requests for the batch count",
                    ));
                }
            }
            Horizon::Time(h) => {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::invalid("horizon", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub ttft_mean: f64,
    pub ttft_p50: f64,
    pub ttft_p99: f64,
    pub ttft_ci_half_width: f64,
    /// Prefill queueing plus service time, with its batch-means interval.
    pub prefill_sojourn: MeanEstimate,
    pub tpot_mean: f64,
    /// Requests that finished decoding (all admitted requests, after drain).
    pub completed_requests: u64,
    /// Requests that arrived inside the measurement window.
    pub measured_requests: u64,
    /// Input tokens prefilled plus output tokens decoded over the whole run.
    pub tokens_accounted: u64,
    /// Tokens of requests finishing inside the window, per second.
    pub total_token_throughput: f64,
    pub prefill_utilization: f64,
    pub decode_utilization: f64,
    /// Time-average number of requests in the prefill stage (queued or in
    /// service) summed over instances.
    pub mean_prefill_queue_len: f64,
    pub observed_arrival_rate: f64,
    /// Offered load exceeds prefill or decode capacity; latency figures are
    /// not steady-state values.
    pub overloaded: bool,
    pub rng_algorithm: &'static str,
}

pub fn run_sim(config: &SimConfig) -> Result<SimResult> {
    engine::simulate(config)
}

/// Shared knobs for the composite simulation drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub requests: u64,
    pub warmup: f64,
    pub batches: usize,
    pub seed: u64,
    pub service: ServiceDistribution,
    pub decode_batch_cap: Option<u32>,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            requests: 200_000,
            warmup: 0.2,
            batches: 20,
            seed: 0,
            service: ServiceDistribution::Exponential,
            decode_batch_cap: None,
        }
    }
}

/// One row of a simulated-versus-analytic TTFT comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mm1Comparison {
    pub rate: f64,
    /// `1/(mu - lambda) + overhead`; `None` when unstable.
    pub analytic_ttft: Option<f64>,
    pub sim_ttft: Option<f64>,
    pub ci_half_width: Option<f64>,
    pub rel_err: Option<f64>,
    pub unstable: bool,
}

fn idle_decode_curve() -> DecodeProfile {
    DecodeProfile::new(
        1,
        1,
        vec![DecodePoint::new(1.0, 1e-3), DecodePoint::new(2.0, 2e-3)],
    )
    .expect("static curve is valid")
}

/// Simulates one exponential-service prefill instance at each rate and
/// compares mean TTFT with the M/M/1 prediction. Nonpositive rates are
/// dropped; rates at or above the service rate are flagged, not simulated.
pub fn validate_against_mm1(
    profile: &PrefillProfile,
    input_len: u32,
    overhead_time: f64,
    rates: &[f64],
    settings: &SimSettings,
) -> Result<Vec<Mm1Comparison>> {
    let mu = queueing::service_rate(profile, input_len)?;
    let curve = idle_decode_curve();
    rates
        .iter()
        .copied()
        .filter(|r| *r > 0.0)
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, rate)| {
            let Ok(analytic) =
                QueueParams::new(mu, rate).and_then(|q| queueing::predicted_ttft(q, overhead_time))
            else {
                return Ok(Mm1Comparison {
                    rate,
                    analytic_ttft: None,
                    sim_ttft: None,
                    ci_half_width: None,
                    rel_err: None,
                    unstable: true,
                });
            };
            let mut cfg = SimConfig::new(1, 1, rate, profile, input_len, 1, curve.clone());
            cfg.kv_transfer_delay = overhead_time;
            cfg.prefill_service = ServiceDistribution::Exponential;
            cfg.horizon = Horizon::Requests(settings.requests);
            cfg.warmup = settings.warmup;
            cfg.batches = settings.batches;
            cfg.seed = settings.seed;
            cfg.stream = i as u64;
            let res = run_sim(&cfg)?;
            Ok(Mm1Comparison {
                rate,
                analytic_ttft: Some(analytic),
                sim_ttft: Some(res.ttft_mean),
                ci_half_width: Some(res.ttft_ci_half_width),
                rel_err: Some((res.ttft_mean - analytic).abs() / analytic),
                unstable: false,
            })
        })
        .collect()
}

/// Analytic sweep points paired with a simulation at the same load. Grid
/// points with zero load carry no simulation.
#[allow(clippy::too_many_arguments)]
pub fn simulate_sweep(
    n_prefill: u32,
    n_decode: u32,
    workload: &WorkloadSpec,
    slo: &SloSpec,
    prefill_profile: &PrefillProfile,
    decode_profile: &DecodeProfile,
    grid: &[f64],
    settings: &SimSettings,
) -> Result<Vec<(SweepPoint, Option<SimResult>)>> {
    let analytic = planner::sweep(
        n_prefill,
        n_decode,
        workload,
        slo,
        prefill_profile,
        decode_profile,
        grid,
    )?;
    analytic
        .into_par_iter()
        .enumerate()
        .map(|(i, point)| {
            if point.total_throughput <= 0.0 {
                return Ok((point, None));
            }
            let mut cfg = SimConfig::new(
                n_prefill,
                n_decode,
                point.total_throughput / workload.tokens_per_request(),
                prefill_profile,
                workload.prefill_input_len(),
                workload.mean_output_len,
                decode_profile.clone(),
            );
            cfg.kv_transfer_delay = slo.overhead_time;
            cfg.prefill_service = settings.service;
            cfg.decode_batch_cap = settings.decode_batch_cap;
            cfg.horizon = Horizon::Requests(settings.requests);
            cfg.warmup = settings.warmup;
            cfg.batches = settings.batches;
            cfg.seed = settings.seed;
            cfg.stream = i as u64;
            Ok((point, Some(run_sim(&cfg)?)))
        })
        .collect()
}

/// Last grid point meeting both targets in simulation, scanning in order
/// and stopping at the first miss.
pub fn simulated_knee(rows: &[(SweepPoint, Option<SimResult>)], slo: &SloSpec) -> Option<f64> {
    let mut knee = None;
    for (point, sim) in rows {
        let Some(sim) = sim else { continue };
        if sim.overloaded || sim.ttft_mean > slo.ttft_target || sim.tpot_mean > slo.tpot_target {
            break;
        }
        knee = Some(point.total_throughput);
    }
    knee
}
