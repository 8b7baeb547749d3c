//! Single-server (M/M/1) analytics for one prefill instance.
//!
//! The prefill instance is modelled as an M/M/1 queue whose service rate is
//! the measured peak prefill throughput divided by the request input length.
//! Given a TTFT target, the mean-sojourn formula `1 / (mu - lambda)` is solved
//! for the largest admissible arrival rate, which in turn fixes the
//! throughput an instance can sustain without missing the target.

use crate::error::{Error, Phase, Result};
use crate::types::{PrefillProfile, SloSpec};
use crate::warning::{shape_mismatch, Warning};

/// Arrival and service rates of one queue, in requests per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueParams {
    pub service_rate: f64,
    pub arrival_rate: f64,
}

impl QueueParams {
    pub fn new(service_rate: f64, arrival_rate: f64) -> Result<Self> {
        if !(service_rate.is_finite() && service_rate > 0.0) {
            return Err(Error::invalid("service_rate", "must be positive"));
        }
        if !(arrival_rate.is_finite() && arrival_rate >= 0.0) {
            return Err(Error::invalid("arrival_rate", "must be non-negative"));
        }
        Ok(QueueParams {
            service_rate,
            arrival_rate,
        })
    }

    fn check_stable(&self) -> Result<()> {
        if self.arrival_rate >= self.service_rate {
            Err(Error::UnstableQueue {
                arrival_rate: self.arrival_rate,
                service_rate: self.service_rate,
            })
        } else {
            Ok(())
        }
    }
}

/// Requests per second one prefill instance completes when never idle.
pub fn service_rate(profile: &PrefillProfile, input_len: u32) -> Result<f64> {
    if input_len < 1 {
        return Err(Error::invalid("input_len", "must be at least 1"));
    }
    Ok(profile.max_throughput / f64::from(input_len))
}

pub fn utilization(params: QueueParams) -> Result<f64> {
    params.check_stable()?;
    Ok(params.arrival_rate / params.service_rate)
}

/// Mean queueing plus service time, `1 / (mu - lambda)`.
pub fn predicted_sojourn(params: QueueParams) -> Result<f64> {
    params.check_stable()?;
    Ok(1.0 / (params.service_rate - params.arrival_rate))
}

/// Mean sojourn plus the fixed overhead.
pub fn predicted_ttft(params: QueueParams, overhead_time: f64) -> Result<f64> {
    if !(overhead_time.is_finite() && overhead_time >= 0.0) {
        return Err(Error::invalid("overhead_time", "must be non-negative"));
    }
    Ok(predicted_sojourn(params)? + overhead_time)
}

/// Largest Poisson arrival rate whose mean TTFT still meets the target.
pub fn max_arrival_rate(profile: &PrefillProfile, input_len: u32, slo: &SloSpec) -> Result<f64> {
    let mu = service_rate(profile, input_len)?;
    let budget = slo.prefill_budget();
    let zero_load = 1.0 / mu;
    if budget < zero_load {
        return Err(Error::InfeasibleSlo {
            phase: Phase::Prefill,
            reason: format!(
                "prefill budget {budget} s is below the zero-load service time {zero_load} s"
            ),
        });
    }
    Ok((mu - 1.0 / budget).max(0.0))
}

/// Input tokens per second one instance sustains while meeting the TTFT
/// target: `TP_max - L_in / (TTFT - overhead)`.
pub fn effective_prefill_throughput(
    profile: &PrefillProfile,
    input_len: u32,
    slo: &SloSpec,
) -> Result<f64> {
    if input_len < 1 {
        return Err(Error::invalid("input_len", "must be at least 1"));
    }
    let len = f64::from(input_len);
    let budget = slo.prefill_budget();
    let tp = profile.max_throughput - len / budget;
    if tp <= 0.0 {
        return Err(Error::InfeasibleSlo {
            phase: Phase::Prefill,
            reason: format!(
                "prefill budget {budget} s does not exceed the zero-load service time {} s",
                len / profile.max_throughput
            ),
        });
    }
    Ok(tp)
}

/// Shape diagnostics for planning `input_len` against `profile`.
pub fn prefill_warnings(profile: &PrefillProfile, input_len: u32) -> Vec<Warning> {
    let mut out = Vec::new();
    if let Some(w) = shape_mismatch(Phase::Prefill, "input_len", profile.input_len, input_len) {
        out.push(w);
    }
    if profile.chunked_prefill_size > input_len {
        out.push(Warning::ChunkExceedsInput {
            chunk_size: profile.chunked_prefill_size,
            input_len,
        });
    }
    out
}
