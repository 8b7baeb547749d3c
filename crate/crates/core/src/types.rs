//! Domain types shared across the planner.
//!
//! Throughputs are tokens per second and times are seconds everywhere inside
//! the crate. Million-tokens-per-minute only appears at the CLI boundary via
//! [`tpm_to_tps`] and [`tps_to_tpm`].

use crate::error::{Error, Phase, Result};
use crate::warning::Warning;

/// Million tokens per minute to tokens per second.
pub fn tpm_to_tps(mtpm: f64) -> f64 {
    mtpm * 1e6 / 60.0
}

/// Tokens per second to million tokens per minute.
pub fn tps_to_tpm(tps: f64) -> f64 {
    tps * 60.0 / 1e6
}

/// User demand: aggregate token throughput and mean request shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    /// Input plus output tokens per second across the whole cluster.
    pub total_throughput: f64,
    pub mean_input_len: u32,
    pub mean_output_len: u32,
    /// Input tokens that miss the prefix cache. Replaces the input length in
    /// prefill work calculations when set.
    pub effective_input_len: Option<u32>,
}

impl WorkloadSpec {
    pub fn new(total_throughput: f64, mean_input_len: u32, mean_output_len: u32) -> Result<Self> {
        validate_workload(WorkloadSpec {
            total_throughput,
            mean_input_len,
            mean_output_len,
            effective_input_len: None,
        })
    }

    /// Same as [`WorkloadSpec::new`] with the demand given in M TPM.
    pub fn from_tpm(mtpm: f64, mean_input_len: u32, mean_output_len: u32) -> Result<Self> {
        Self::new(tpm_to_tps(mtpm), mean_input_len, mean_output_len)
    }

    pub fn with_effective_input_len(self, len: u32) -> Result<Self> {
        validate_workload(WorkloadSpec {
            effective_input_len: Some(len),
            ..self
        })
    }

    /// Input length the prefill phase actually computes.
    pub fn prefill_input_len(&self) -> u32 {
        self.effective_input_len.unwrap_or(self.mean_input_len)
    }

    /// Tokens per request counted toward total throughput.
    pub fn tokens_per_request(&self) -> f64 {
        f64::from(self.mean_input_len) + f64::from(self.mean_output_len)
    }

    /// Aggregate request rate implied by the total throughput.
    pub fn request_rate(&self) -> f64 {
        self.total_throughput / self.tokens_per_request()
    }
}

/// Checks every [`WorkloadSpec`] invariant and reports the first violation.
pub fn validate_workload(spec: WorkloadSpec) -> Result<WorkloadSpec> {
    if !(spec.total_throughput.is_finite() && spec.total_throughput > 0.0) {
        return Err(Error::invalid("total_throughput", "must be positive"));
    }
    if spec.mean_input_len < 1 {
        return Err(Error::invalid("mean_input_len", "must be at least 1"));
    }
    if spec.mean_output_len < 1 {
        return Err(Error::invalid("mean_output_len", "must be at least 1"));
    }
    if let Some(eff) = spec.effective_input_len {
        if eff < 1 {
            return Err(Error::invalid("effective_input_len", "must be at least 1"));
        }
        if eff > spec.mean_input_len {
            return Err(Error::invalid(
                "effective_input_len",
                format!(
                    "effective {eff} exceeds mean input length {}",
                    spec.mean_input_len
                ),
            ));
        }
    }
    Ok(spec)
}

/// Latency targets and the fixed non-queueing part of TTFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SloSpec {
    pub ttft_target: f64,
    pub tpot_target: f64,
    /// Client/server transfer plus KV-cache transfer between pools.
    pub overhead_time: f64,
}

impl SloSpec {
    pub fn new(ttft_target: f64, tpot_target: f64, overhead_time: f64) -> Result<Self> {
        if !(ttft_target.is_finite() && ttft_target > 0.0) {
            return Err(Error::invalid("ttft_target", "must be positive"));
        }
        if !(tpot_target.is_finite() && tpot_target > 0.0) {
            return Err(Error::invalid("tpot_target", "must be positive"));
        }
        if !(overhead_time.is_finite() && overhead_time >= 0.0) {
            return Err(Error::invalid("overhead_time", "must be non-negative"));
        }
        if ttft_target <= overhead_time {
            return Err(Error::invalid(
                "ttft_target",
                format!(
                    "{ttft_target} s leaves no prefill budget after {overhead_time} s overhead"
                ),
            ));
        }
        Ok(SloSpec {
            ttft_target,
            tpot_target,
            overhead_time,
        })
    }

    /// Time left for prefill queueing plus computation.
    pub fn prefill_budget(&self) -> f64 {
        self.ttft_target - self.overhead_time
    }
}

/// Benchmarked peak prefill throughput for one request shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefillProfile {
    pub input_len: u32,
    pub chunked_prefill_size: u32,
    /// Input tokens per second with the instance never idle.
    pub max_throughput: f64,
}

impl PrefillProfile {
    pub fn new(input_len: u32, chunked_prefill_size: u32, max_throughput: f64) -> Result<Self> {
        if input_len < 1 {
            return Err(Error::invalid("input_len", "must be at least 1"));
        }
        if chunked_prefill_size < 1 {
            return Err(Error::invalid("chunked_prefill_size", "must be at least 1"));
        }
        if !(max_throughput.is_finite() && max_throughput > 0.0) {
            return Err(Error::invalid("max_throughput", "must be positive"));
        }
        Ok(PrefillProfile {
            input_len,
            chunked_prefill_size,
            max_throughput,
        })
    }
}

/// One measured decode point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodePoint {
    /// Concurrent requests in the decode batch.
    pub batch_size: f64,
    /// Seconds per output token.
    pub tpot: f64,
    /// Throughput reported by the engine itself, if recorded.
    pub engine_throughput: Option<f64>,
}

impl DecodePoint {
    pub fn new(batch_size: f64, tpot: f64) -> Self {
        DecodePoint {
            batch_size,
            tpot,
            engine_throughput: None,
        }
    }

    /// Output tokens per second, batch / TPOT.
    pub fn throughput(&self) -> f64 {
        self.batch_size / self.tpot
    }
}

/// Benchmarked TPOT-versus-batch curve for one request shape.
///
/// Construction goes through [`crate::decode::validate_profile`]; any
/// near-violations found there are kept in [`DecodeProfile::diagnostics`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeProfile {
    pub(crate) input_len: u32,
    pub(crate) output_len: u32,
    pub(crate) points: Vec<DecodePoint>,
    pub(crate) diagnostics: Vec<Warning>,
}

impl DecodeProfile {
    pub fn new(input_len: u32, output_len: u32, points: Vec<DecodePoint>) -> Result<Self> {
        crate::decode::validate_profile(input_len, output_len, points).map(|(p, _)| p)
    }

    pub fn input_len(&self) -> u32 {
        self.input_len
    }

    pub fn output_len(&self) -> u32 {
        self.output_len
    }

    pub fn points(&self) -> &[DecodePoint] {
        &self.points
    }

    pub fn diagnostics(&self) -> &[Warning] {
        &self.diagnostics
    }

    pub fn min_batch(&self) -> f64 {
        self.points[0].batch_size
    }

    pub fn max_batch(&self) -> f64 {
        self.points[self.points.len() - 1].batch_size
    }

    pub fn min_tpot(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.tpot)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_tpot(&self) -> f64 {
        self.points.iter().map(|p| p.tpot).fold(0.0, f64::max)
    }
}

/// Result of planning: fractional and integer instance counts plus the
/// per-instance operating points that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub frac_prefill: f64,
    pub frac_decode: f64,
    pub n_prefill: u32,
    pub n_decode: u32,
    pub pd_ratio: f64,
    pub eff_prefill_throughput: f64,
    pub eff_decode_throughput: f64,
    pub decode_batch: f64,
    pub decode_tpot: f64,
    pub achievable_total_throughput: f64,
    pub binding_phase: Phase,
    pub warnings: Vec<Warning>,
}

impl AllocationPlan {
    /// `mPnD` deployment label.
    pub fn label(&self) -> String {
        format!("{}P{}D", self.n_prefill, self.n_decode)
    }

    pub fn achievable_tpm(&self) -> f64 {
        tps_to_tpm(self.achievable_total_throughput)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_demand_is_valid() {
        let w = WorkloadSpec::new(5e6 / 60.0, 6144, 512).unwrap();
        assert!((w.total_throughput - 83333.333).abs() < 1e-3);
        assert_eq!(WorkloadSpec::from_tpm(5.0, 6144, 512).unwrap(), w);
    }

    #[test]
    fn zero_throughput_rejected() {
        let err = WorkloadSpec::new(0.0, 6144, 512).unwrap_err();
        assert_eq!(
            err,
            Error::Invalid {
                field: "total_throughput",
                reason: "must be positive".into()
            }
        );
    }

    #[test]
    fn effective_len_cannot_exceed_mean() {
        let err = WorkloadSpec::new(1000.0, 6144, 512)
            .unwrap()
            .with_effective_input_len(8000)
            .unwrap_err();
        match err {
            Error::Invalid { field, reason } => {
                assert_eq!(field, "effective_input_len");
                assert!(reason.contains("exceeds"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let ok = WorkloadSpec::new(1000.0, 6144, 512)
            .unwrap()
            .with_effective_input_len(2048)
            .unwrap();
        assert_eq!(ok.prefill_input_len(), 2048);
    }

    #[test]
    fn zero_lengths_rejected() {
        assert!(WorkloadSpec::new(1.0, 0, 1).is_err());
        assert!(WorkloadSpec::new(1.0, 1, 0).is_err());
    }

    #[test]
    fn slo_needs_budget() {
        assert!(SloSpec::new(2.0, 0.02, 0.1).is_ok());
        assert!(SloSpec::new(0.1, 0.02, 0.1).is_err());
        assert!(SloSpec::new(1.0, 0.0, 0.1).is_err());
        assert!(SloSpec::new(1.0, 0.02, -0.1).is_err());
        assert!((SloSpec::new(2.0, 0.02, 0.1).unwrap().prefill_budget() - 1.9).abs() < 1e-15);
    }

    #[test]
    fn prefill_profile_validation() {
        assert!(PrefillProfile::new(6144, 24576, 28300.0).is_ok());
        assert!(PrefillProfile::new(6144, 24576, 0.0).is_err());
        assert!(PrefillProfile::new(0, 24576, 1.0).is_err());
        assert!(PrefillProfile::new(1, 0, 1.0).is_err());
    }

    #[test]
    fn tpm_conversion_is_the_fixed_factor() {
        assert_eq!(tpm_to_tps(5.0), 5.0 * 1e6 / 60.0);
        assert_eq!(tps_to_tpm(81250.0), 81250.0 * 60.0 / 1e6);
        assert!((tps_to_tpm(81250.0) - 4.875).abs() < 1e-12);
    }
}
