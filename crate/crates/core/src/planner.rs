//! Prefill/decode instance counts from a throughput demand and SLO-constrained
//! per-instance throughputs.
//!
//! With pipelined prefill and decode, neither pool idles when both finish
//! the same request stream in the same time. Solving that balance for the
//! instance counts gives
//!
//! ```text
//! N_prefill = TP_total * L_in  / ((L_in + L_out) * TP_prefill)
//! N_decode  = TP_total * L_out / ((L_in + L_out) * TP_decode)
//! ```
//!
//! and their quotient, the P:D ratio, does not depend on `TP_total`.

use std::str::FromStr;

use rayon::prelude::*;

use crate::decode::{self, decode_shape_warnings, decode_throughput_for_tpot};
use crate::error::{Error, Phase, Result};
use crate::queueing::{self, effective_prefill_throughput, prefill_warnings, QueueParams};
use crate::types::{AllocationPlan, DecodeProfile, PrefillProfile, SloSpec, WorkloadSpec};
use crate::warning::{dedup, Warning};

/// Convergence threshold for the decode batch fixed point, in requests.
pub const BATCH_FIXED_POINT_TOL: f64 = 1e-6;
/// Iteration cap for the decode batch fixed point.
pub const BATCH_FIXED_POINT_MAX_ITERS: usize = 100;

/// How fractional instance counts become integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoundingPolicy {
    /// Round half up. Reproduces 3.08 -> 3, 3.77 -> 4.
    #[default]
    Nearest,
    /// Never undershoot the requested throughput.
    Ceil,
}

impl FromStr for RoundingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(RoundingPolicy::Nearest),
            "ceil" => Ok(RoundingPolicy::Ceil),
            other => Err(Error::invalid(
                "policy",
                format!("expected nearest or ceil, got {other}"),
            )),
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(field, "must be positive"))
    }
}

/// Tokens per second processed by `n_req` requests of the given shape over
/// `total_time` seconds.
pub fn total_throughput(
    n_req: f64,
    input_len: u32,
    output_len: u32,
    total_time: f64,
) -> Result<f64> {
    positive("total_time", total_time)?;
    if !(n_req.is_finite() && n_req >= 0.0) {
        return Err(Error::invalid("n_req", "must be non-negative"));
    }
    Ok(n_req * (f64::from(input_len) + f64::from(output_len)) / total_time)
}

/// Prefill instances per decode instance.
pub fn pd_ratio(input_len: f64, output_len: f64, tp_prefill: f64, tp_decode: f64) -> Result<f64> {
    positive("input_len", input_len)?;
    positive("output_len", output_len)?;
    positive("tp_prefill", tp_prefill)?;
    positive("tp_decode", tp_decode)?;
    Ok(input_len * tp_decode / (output_len * tp_prefill))
}

/// Real-valued (prefill, decode) instance counts that balance both phases.
///
/// Prefill work uses the workload's effective input length when one is set;
/// the token total per request always uses the mean lengths.
pub fn fractional_counts(
    workload: &WorkloadSpec,
    tp_prefill: f64,
    tp_decode: f64,
) -> Result<(f64, f64)> {
    positive("tp_prefill", tp_prefill)?;
    positive("tp_decode", tp_decode)?;
    let rate = workload.request_rate();
    let prefill = rate * f64::from(workload.prefill_input_len()) / tp_prefill;
    let decode = rate * f64::from(workload.mean_output_len) / tp_decode;
    Ok((prefill, decode))
}

fn round_one(x: f64, policy: RoundingPolicy) -> u32 {
    let r = match policy {
        RoundingPolicy::Nearest => (x + 0.5).floor(),
        RoundingPolicy::Ceil => x.ceil(),
    };
    r.max(1.0) as u32
}

/// Integer counts, each at least one.
pub fn round_plan(frac: (f64, f64), policy: RoundingPolicy) -> (u32, u32) {
    (round_one(frac.0, policy), round_one(frac.1, policy))
}

/// Total throughput an integer deployment sustains and which phase caps it.
///
/// Ties report prefill as binding.
pub fn achievable_total_throughput(
    n_prefill: u32,
    n_decode: u32,
    input_len: u32,
    output_len: u32,
    tp_prefill: f64,
    tp_decode: f64,
) -> (f64, Phase) {
    let total = f64::from(input_len) + f64::from(output_len);
    let by_prefill = f64::from(n_prefill) * tp_prefill * total / f64::from(input_len);
    let by_decode = f64::from(n_decode) * tp_decode * total / f64::from(output_len);
    if by_prefill <= by_decode {
        (by_prefill, Phase::Prefill)
    } else {
        (by_decode, Phase::Decode)
    }
}

/// End-to-end plan: TTFT-constrained prefill throughput, TPOT-constrained
/// decode throughput, then balanced instance counts.
pub fn plan(
    workload: &WorkloadSpec,
    slo: &SloSpec,
    prefill_profile: &PrefillProfile,
    decode_profile: &DecodeProfile,
    policy: RoundingPolicy,
) -> Result<AllocationPlan> {
    let prefill_len = workload.prefill_input_len();
    let mut warnings = prefill_warnings(prefill_profile, prefill_len);
    warnings.extend(decode_profile.diagnostics().iter().cloned());
    warnings.extend(decode_shape_warnings(
        decode_profile,
        workload.mean_input_len,
        workload.mean_output_len,
    ));

    let tp_prefill = effective_prefill_throughput(prefill_profile, prefill_len, slo)?;
    let (op, saturated) = decode_throughput_for_tpot(decode_profile, slo.tpot_target)?;
    warnings.extend(saturated);
    let tp_decode = op.throughput;

    let ratio = pd_ratio(
        f64::from(prefill_len),
        f64::from(workload.mean_output_len),
        tp_prefill,
        tp_decode,
    )?;
    let (frac_prefill, frac_decode) = fractional_counts(workload, tp_prefill, tp_decode)?;
    let (n_prefill, n_decode) = round_plan((frac_prefill, frac_decode), policy);
    let (achievable, binding) = achievable_total_throughput(
        n_prefill,
        n_decode,
        prefill_len,
        workload.mean_output_len,
        tp_prefill,
        tp_decode,
    );
    // The cap above counts prefill_len + L_out tokens per request; rescale to
    // the mean-length token count the demand is expressed in.
    let achievable = achievable * workload.tokens_per_request()
        / (f64::from(prefill_len) + f64::from(workload.mean_output_len));

    if achievable < workload.total_throughput {
        warnings.push(Warning::Shortfall {
            requested: workload.total_throughput,
            achievable,
            percent: (workload.total_throughput - achievable) / workload.total_throughput * 100.0,
        });
    }

    Ok(AllocationPlan {
        frac_prefill,
        frac_decode,
        n_prefill,
        n_decode,
        pd_ratio: ratio,
        eff_prefill_throughput: tp_prefill,
        eff_decode_throughput: tp_decode,
        decode_batch: op.batch_size,
        decode_tpot: op.tpot,
        achievable_total_throughput: achievable,
        binding_phase: binding,
        warnings: dedup(warnings),
    })
}

/// Predicted steady-state latencies for one total-throughput load level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub total_throughput: f64,
    /// Mean TTFT; infinite when the prefill queue is unstable.
    pub predicted_ttft: f64,
    pub predicted_tpot: f64,
    /// Offered prefill load per instance, `lambda / mu`. At or above one the
    /// queue is unstable.
    pub prefill_utilization: f64,
    pub decode_batch_per_instance: f64,
    pub prefill_stable: bool,
    /// Decode demand fits within the measured curve.
    pub decode_stable: bool,
    /// Decode batch fixed point converged within the iteration cap.
    pub converged: bool,
}

impl SweepPoint {
    /// Stable in both phases and within both SLO targets.
    pub fn meets_slo(&self, slo: &SloSpec) -> bool {
        self.prefill_stable
            && self.decode_stable
            && self.converged
            && self.predicted_ttft <= slo.ttft_target
            && self.predicted_tpot <= slo.tpot_target
    }
}

/// Decode batch per instance where `batch = rate * L_out * TPOT(batch)`.
///
/// Returns `(batch, tpot, converged, stable)`. When demand exceeds the
/// largest measured throughput the batch is pinned at the curve's end and
/// `stable` is false.
pub(crate) fn decode_fixed_point(
    profile: &DecodeProfile,
    request_rate: f64,
    output_len: u32,
) -> (f64, f64, bool, bool) {
    let token_rate = request_rate * f64::from(output_len);
    let last = profile.points()[profile.points().len() - 1];
    if token_rate > last.throughput() {
        return (last.batch_size, last.tpot, true, false);
    }
    let mut batch = profile.min_batch();
    for _ in 0..BATCH_FIXED_POINT_MAX_ITERS {
        let next = token_rate * decode::tpot_clamped(profile, batch);
        if (next - batch).abs() < BATCH_FIXED_POINT_TOL {
            return (next, decode::tpot_clamped(profile, next), true, true);
        }
        batch = next;
    }
    (batch, decode::tpot_clamped(profile, batch), false, true)
}

/// Analytic TTFT/TPOT predictions for an integer deployment across a grid of
/// total throughputs (tokens/s).
pub fn sweep(
    n_prefill: u32,
    n_decode: u32,
    workload: &WorkloadSpec,
    slo: &SloSpec,
    prefill_profile: &PrefillProfile,
    decode_profile: &DecodeProfile,
    grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    if n_prefill < 1 || n_decode < 1 {
        return Err(Error::invalid("instances", "counts must be at least 1"));
    }
    if let Some(bad) = grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::invalid(
            "grid",
            format!("value {bad} must be non-negative"),
        ));
    }
    let mu = queueing::service_rate(prefill_profile, workload.prefill_input_len())?;
    let per_request = workload.tokens_per_request();
    Ok(grid
        .par_iter()
        .map(|&total| {
            let rate = total / per_request;
            let lambda = rate / f64::from(n_prefill);
            let prefill_utilization = lambda / mu;
            let (prefill_stable, predicted_ttft) = match QueueParams::new(mu, lambda)
                .and_then(|q| queueing::predicted_ttft(q, slo.overhead_time))
            {
                Ok(t) => (true, t),
                Err(_) => (false, f64::INFINITY),
            };
            let (batch, tpot, converged, decode_stable) = decode_fixed_point(
                decode_profile,
                rate / f64::from(n_decode),
                workload.mean_output_len,
            );
            SweepPoint {
                total_throughput: total,
                predicted_ttft,
                predicted_tpot: tpot,
                prefill_utilization,
                decode_batch_per_instance: batch,
                prefill_stable,
                decode_stable,
                converged,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{tpm_to_tps, DecodePoint};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    pub(crate) fn curve() -> DecodeProfile {
        let pts = [
            (1.0, 8.0),
            (4.0, 9.0),
            (8.0, 10.5),
            (16.0, 13.5),
            (24.0, 16.5),
            (34.0, 20.0),
            (48.0, 25.5),
            (64.0, 32.0),
        ];
        DecodeProfile::new(
            6144,
            512,
            pts.iter()
                .map(|&(b, ms)| DecodePoint::new(b, ms / 1000.0))
                .collect(),
        )
        .unwrap()
    }

    fn reference_inputs() -> (WorkloadSpec, SloSpec, PrefillProfile) {
        (
            WorkloadSpec::from_tpm(5.0, 6144, 512).unwrap(),
            SloSpec::new(2.0, 0.020, 0.1).unwrap(),
            PrefillProfile::new(6144, 24576, 28300.0).unwrap(),
        )
    }

    #[test]
    fn total_throughput_examples() {
        assert_eq!(total_throughput(100.0, 6144, 512, 10.0).unwrap(), 66560.0);
        assert_eq!(total_throughput(1.0, 1, 1, 1.0).unwrap(), 2.0);
        assert_eq!(total_throughput(60.0, 6144, 512, 60.0).unwrap(), 6656.0);
        assert!(total_throughput(1.0, 1, 1, 0.0).is_err());
    }

    #[test]
    fn ratio_examples() {
        let r = pd_ratio(6144.0, 512.0, 25000.0, 1700.0).unwrap();
        assert!((r - 0.81600).abs() < 1e-4);
        assert_eq!(pd_ratio(7.0, 7.0, 3.0, 3.0).unwrap(), 1.0);
        let r = pd_ratio(6144.0, 512.0, 25066.3, 1700.0).unwrap();
        assert!((r - 0.8138).abs() < 1e-4);
        assert!(pd_ratio(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn fractional_count_examples() {
        let w = WorkloadSpec::new(83333.3, 6144, 512).unwrap();
        let (p, d) = fractional_counts(&w, 25000.0, 1700.0).unwrap();
        assert!((p - 3.077).abs() < 1e-3, "{p}");
        assert!((d - 3.771).abs() < 1e-3, "{d}");
        assert!(rel(p / d, pd_ratio(6144.0, 512.0, 25000.0, 1700.0).unwrap()) < 1e-12);

        let w2 = WorkloadSpec::new(2.0 * 83333.3, 6144, 512).unwrap();
        let (p2, d2) = fractional_counts(&w2, 25000.0, 1700.0).unwrap();
        assert!(rel(p2, 2.0 * p) < 1e-15 && rel(d2, 2.0 * d) < 1e-15);

        // demand chosen so exactly one prefill instance is needed
        let w1 = WorkloadSpec::new(25000.0 * 6656.0 / 6144.0, 6144, 512).unwrap();
        let (p1, _) = fractional_counts(&w1, 25000.0, 1700.0).unwrap();
        assert!(rel(p1, 1.0) < 1e-12);
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_plan((3.077, 3.771), RoundingPolicy::Nearest), (3, 4));
        assert_eq!(round_plan((3.077, 3.771), RoundingPolicy::Ceil), (4, 4));
        assert_eq!(round_plan((0.2, 0.3), RoundingPolicy::Nearest), (1, 1));
        assert_eq!(round_plan((2.5, 0.5), RoundingPolicy::Nearest), (3, 1));
        assert_eq!(
            "ceil".parse::<RoundingPolicy>().unwrap(),
            RoundingPolicy::Ceil
        );
        assert!("up".parse::<RoundingPolicy>().is_err());
    }

    #[test]
    fn achievable_examples() {
        let (t, b) = achievable_total_throughput(3, 4, 6144, 512, 25000.0, 1700.0);
        assert!((t - 81250.0).abs() < 1e-9);
        assert_eq!(b, Phase::Prefill);
        let (t, b) = achievable_total_throughput(3, 3, 6144, 512, 25000.0, 1700.0);
        assert!((t - 66300.0).abs() < 1e-9);
        assert_eq!(b, Phase::Decode);
        let (t, _) = achievable_total_throughput(1, 1, 100, 100, 7.0, 7.0);
        assert_eq!(t, 14.0);
    }

    #[test]
    fn plan_reproduces_three_four() {
        let (w, slo, pp) = reference_inputs();
        let plan = plan(&w, &slo, &pp, &curve(), RoundingPolicy::Nearest).unwrap();
        assert_eq!(plan.label(), "3P4D");
        assert!((plan.pd_ratio - 0.82).abs() < 0.01);
        assert!((plan.eff_decode_throughput - 1700.0).abs() < 1e-9);
        assert!(rel(plan.frac_prefill / plan.frac_decode, plan.pd_ratio) < 1e-12);
        assert!(plan
            .warnings
            .iter()
            .any(|w| matches!(w, Warning::Shortfall { .. })));
        assert!(plan
            .warnings
            .iter()
            .any(|w| matches!(w, Warning::ChunkExceedsInput { .. })));

        let ceil = super::plan(&w, &slo, &pp, &curve(), RoundingPolicy::Ceil).unwrap();
        assert_eq!(ceil.label(), "4P4D");
        assert!(ceil.achievable_total_throughput >= w.total_throughput);
    }

    #[test]
    fn plan_propagates_phase_infeasibility() {
        let (w, _, pp) = reference_inputs();
        let slo = SloSpec::new(0.2, 0.020, 0.1).unwrap();
        let err = plan(&w, &slo, &pp, &curve(), RoundingPolicy::Nearest).unwrap_err();
        assert_eq!(err.infeasible_phase(), Some(Phase::Prefill));
        let slo = SloSpec::new(2.0, 0.005, 0.1).unwrap();
        let err = plan(&w, &slo, &pp, &curve(), RoundingPolicy::Nearest).unwrap_err();
        assert_eq!(err.infeasible_phase(), Some(Phase::Decode));
    }

    #[test]
    fn plan_with_prefix_cache() {
        let (w, slo, pp) = reference_inputs();
        let cached = w.with_effective_input_len(3072).unwrap();
        let full = plan(&w, &slo, &pp, &curve(), RoundingPolicy::Nearest).unwrap();
        let half = plan(&cached, &slo, &pp, &curve(), RoundingPolicy::Nearest).unwrap();
        assert!(half.frac_prefill < full.frac_prefill / 2.0 + 0.1);
        assert_eq!(half.frac_decode, full.frac_decode);
        assert!(half.warnings.iter().any(|w| matches!(
            w,
            Warning::ProfileShapeMismatch {
                phase: Phase::Prefill,
                ..
            }
        )));
    }

    #[test]
    fn sweep_zero_load_limits() {
        let (w, slo, pp) = reference_inputs();
        let pts = sweep(3, 4, &w, &slo, &pp, &curve(), &[0.0]).unwrap();
        let p = pts[0];
        assert!(rel(p.predicted_ttft, 6144.0 / 28300.0 + 0.1) < 1e-12);
        assert_eq!(p.predicted_tpot, 0.008);
        assert!(p.meets_slo(&slo));
    }

    #[test]
    fn sweep_knee_three_four() {
        let (w, slo, pp) = reference_inputs();
        let pts = sweep(
            3,
            4,
            &w,
            &slo,
            &pp,
            &curve(),
            &[tpm_to_tps(4.8), tpm_to_tps(4.9)],
        )
        .unwrap();
        assert!(pts[0].meets_slo(&slo));
        assert!(pts[0].predicted_ttft <= 2.0 && pts[0].predicted_tpot <= 0.020);
        assert!(pts[1].predicted_ttft > 2.0);
        assert!(pts[1].predicted_tpot <= 0.020);
    }

    #[test]
    fn sweep_unstable_points_flagged() {
        let (w, slo, pp) = reference_inputs();
        let pts = sweep(1, 1, &w, &slo, &pp, &curve(), &[tpm_to_tps(50.0)]).unwrap();
        assert!(!pts[0].prefill_stable && !pts[0].decode_stable);
        assert!(pts[0].predicted_ttft.is_infinite());
        assert!(!pts[0].meets_slo(&slo));
        assert!(sweep(0, 1, &w, &slo, &pp, &curve(), &[1.0]).is_err());
        assert!(sweep(1, 1, &w, &slo, &pp, &curve(), &[-1.0]).is_err());
    }

    #[test]
    fn fixed_point_satisfies_littles_law() {
        let rate = 3.0;
        let (b, t, conv, stable) = decode_fixed_point(&curve(), rate, 512);
        assert!(conv && stable);
        assert!((b - rate * 512.0 * t).abs() < 1e-5);
    }
}
