use std::fmt;

use crate::error::Phase;

/// Non-fatal diagnostics raised while validating profiles or building a plan.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The planning workload differs from the shape a profile was measured at
    /// by more than [`SHAPE_MISMATCH_TOLERANCE`].
    ProfileShapeMismatch {
        phase: Phase,
        field: &'static str,
        profile_value: u32,
        workload_value: u32,
    },
    /// Chunked-prefill size exceeds the request length, so several requests
    /// may be batched together and the single-server queue is approximate.
    ChunkExceedsInput { chunk_size: u32, input_len: u32 },
    /// TPOT target sits at or above the largest measured TPOT; the operating
    /// point is clamped to the largest measured batch.
    DecodeSaturated { tpot_target: f64, max_batch: f64 },
    /// A monotonicity dip small enough to be measurement noise.
    NearViolation {
        quantity: &'static str,
        batch_lo: f64,
        batch_hi: f64,
        relative_dip: f64,
    },
    /// Engine-reported decode throughput disagrees with batch/TPOT.
    EngineThroughputGap {
        batch: f64,
        derived: f64,
        reported: f64,
    },
    /// Integer plan falls short of the requested total throughput.
    Shortfall {
        requested: f64,
        achievable: f64,
        percent: f64,
    },
}

/// Relative shape difference above which profile/workload mismatch warnings fire.
pub const SHAPE_MISMATCH_TOLERANCE: f64 = 0.25;

pub(crate) fn shape_mismatch(
    phase: Phase,
    field: &'static str,
    profile_value: u32,
    workload_value: u32,
) -> Option<Warning> {
    let p = f64::from(profile_value);
    let w = f64::from(workload_value);
    if (p - w).abs() / p > SHAPE_MISMATCH_TOLERANCE {
        Some(Warning::ProfileShapeMismatch {
            phase,
            field,
            profile_value,
            workload_value,
        })
    } else {
        None
    }
}

/// Removes repeated warnings while keeping first-seen order.
pub fn dedup(warnings: Vec<Warning>) -> Vec<Warning> {
    let mut out: Vec<Warning> = Vec::with_capacity(warnings.len());
    for w in warnings {
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ProfileShapeMismatch {
                phase,
                field,
                profile_value,
                workload_value,
            } => write!(
                f,
                "{phase} profile shape mismatch: profile {field} {profile_value} vs workload {workload_value} (>25%)"
            ),
            Warning::ChunkExceedsInput {
                chunk_size,
                input_len,
            } => write!(
                f,
                "chunked prefill size {chunk_size} exceeds input length {input_len}; requests may be batched and the M/M/1 model is approximate"
            ),
            Warning::DecodeSaturated {
                tpot_target,
                max_batch,
            } => write!(
                f,
                "TPOT target {tpot_target} s is at or above the largest measured TPOT; clamped to measured batch {max_batch}"
            ),
            Warning::NearViolation {
                quantity,
                batch_lo,
                batch_hi,
                relative_dip,
            } => write!(
                f,
                "{quantity} dips {:.3}% between batch {batch_lo} and {batch_hi} (within noise tolerance)",
                relative_dip * 100.0
            ),
            Warning::EngineThroughputGap {
                batch,
                derived,
                reported,
            } => write!(
                f,
                "batch {batch}: batch/TPOT gives {derived:.1} tok/s but engine reported {reported:.1} tok/s"
            ),
            Warning::Shortfall {
                requested,
                achievable,
                percent,
            } => write!(
                f,
                "integer plan achieves {achievable:.1} tok/s, {percent:.2}% short of requested {requested:.1} tok/s"
            ),
        }
    }
}
