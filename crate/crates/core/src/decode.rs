//! Decode throughput under a TPOT target, read off a benchmarked
//! TPOT-versus-batch curve.
//!
//! TPOT is interpolated piecewise-linearly between measured batch sizes and
//! throughput is always derived as `batch / tpot`, so the identity holds
//! exactly at every knot. Nothing is extrapolated past the measured range.

use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Phase, Result};
use crate::types::{DecodePoint, DecodeProfile};
use crate::warning::{shape_mismatch, Warning};

/// Relative dip tolerated as measurement noise in TPOT or derived throughput.
pub const NOISE_TOLERANCE: f64 = 0.01;

/// Relative gap between engine-reported and batch/TPOT throughput that
/// triggers a warning.
pub const ENGINE_GAP_TOLERANCE: f64 = 0.10;

/// A (possibly interpolated) decode operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeOperatingPoint {
    pub batch_size: f64,
    pub tpot: f64,
    pub throughput: f64,
}

impl DecodeOperatingPoint {
    fn at(batch_size: f64, tpot: f64) -> Self {
        DecodeOperatingPoint {
            batch_size,
            tpot,
            throughput: batch_size / tpot,
        }
    }
}

/// Largest TPOT-feasible batch and whether it hit the end of the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLimit {
    pub batch_size: f64,
    pub saturated: bool,
}

/// Validates raw points into a profile, returning near-violation diagnostics.
///
/// Hard errors: fewer than two points, nonpositive values, batch sizes not
/// strictly increasing, or a TPOT / throughput decrease beyond
/// [`NOISE_TOLERANCE`]. Smaller dips and engine-throughput gaps become
/// warnings.
pub fn validate_profile(
    input_len: u32,
    output_len: u32,
    points: Vec<DecodePoint>,
) -> Result<(DecodeProfile, Vec<Warning>)> {
    if input_len < 1 || output_len < 1 {
        return Err(Error::MalformedProfile(
            "input and output lengths must be at least 1".into(),
        ));
    }
    if points.len() < 2 {
        return Err(Error::MalformedProfile(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let mut warnings = Vec::new();
    for p in &points {
        if !(p.batch_size.is_finite() && p.batch_size >= 1.0) {
            return Err(Error::MalformedProfile(format!(
                "batch size {} must be at least 1",
                p.batch_size
            )));
        }
        if !(p.tpot.is_finite() && p.tpot > 0.0) {
            return Err(Error::MalformedProfile(format!(
                "tpot {} at batch {} must be positive",
                p.tpot, p.batch_size
            )));
        }
        if let Some(reported) = p.engine_throughput {
            let derived = p.throughput();
            if (derived - reported).abs() / reported > ENGINE_GAP_TOLERANCE {
                warnings.push(Warning::EngineThroughputGap {
                    batch: p.batch_size,
                    derived,
                    reported,
                });
            }
        }
    }
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.batch_size == a.batch_size {
            return Err(Error::MalformedProfile(format!(
                "duplicate batch size {}",
                a.batch_size
            )));
        }
        if b.batch_size < a.batch_size {
            return Err(Error::MalformedProfile(format!(
                "batch sizes out of order: {} then {}",
                a.batch_size, b.batch_size
            )));
        }
        for (quantity, lo, hi) in [
            ("tpot", a.tpot, b.tpot),
            ("throughput", a.throughput(), b.throughput()),
        ] {
            if hi < lo {
                let dip = (lo - hi) / lo;
                if dip > NOISE_TOLERANCE {
                    return Err(Error::MalformedProfile(format!(
                        "{quantity} decreases {:.2}% between batch {} and {}",
                        dip * 100.0,
                        a.batch_size,
                        b.batch_size
                    )));
                }
                warnings.push(Warning::NearViolation {
                    quantity,
                    batch_lo: a.batch_size,
                    batch_hi: b.batch_size,
                    relative_dip: dip,
                });
            }
        }
    }
    let profile = DecodeProfile {
        input_len,
        output_len,
        points,
        diagnostics: warnings.clone(),
    };
    Ok((profile, warnings))
}

/// Piecewise-linear TPOT at `batch_size`; errors outside the measured range.
pub fn tpot_at(profile: &DecodeProfile, batch_size: f64) -> Result<f64> {
    let (min, max) = (profile.min_batch(), profile.max_batch());
    if !(batch_size >= min && batch_size <= max) {
        return Err(Error::OutOfRange {
            batch: batch_size,
            min,
            max,
        });
    }
    Ok(interpolate(profile.points(), batch_size))
}

/// TPOT with the batch clamped into the measured range.
pub(crate) fn tpot_clamped(profile: &DecodeProfile, batch_size: f64) -> f64 {
    interpolate(
        profile.points(),
        batch_size.clamp(profile.min_batch(), profile.max_batch()),
    )
}

fn interpolate(points: &[DecodePoint], batch: f64) -> f64 {
    let idx = points.partition_point(|p| p.batch_size < batch);
    if idx == 0 {
        return points[0].tpot;
    }
    let hi = points[idx.min(points.len() - 1)];
    if hi.batch_size == batch {
        return hi.tpot;
    }
    let lo = points[idx - 1];
    let t = (batch - lo.batch_size) / (hi.batch_size - lo.batch_size);
    lo.tpot + t * (hi.tpot - lo.tpot)
}

/// Output tokens per second at `batch_size`.
pub fn throughput_at(profile: &DecodeProfile, batch_size: f64) -> Result<f64> {
    Ok(batch_size / tpot_at(profile, batch_size)?)
}

/// Largest batch whose interpolated TPOT stays within `tpot_target`.
pub fn max_batch_for_tpot(profile: &DecodeProfile, tpot_target: f64) -> Result<BatchLimit> {
    let pts = profile.points();
    let Some(i) = pts.iter().rposition(|p| p.tpot <= tpot_target) else {
        return Err(Error::InfeasibleSlo {
            phase: Phase::Decode,
            reason: format!(
                "TPOT target {tpot_target} s is below the smallest measured TPOT {} s",
                profile.min_tpot()
            ),
        });
    };
    if i == pts.len() - 1 {
        return Ok(BatchLimit {
            batch_size: pts[i].batch_size,
            saturated: true,
        });
    }
    let (lo, hi) = (pts[i], pts[i + 1]);
    let frac = (tpot_target - lo.tpot) / (hi.tpot - lo.tpot);
    let batch = lo.batch_size + frac * (hi.batch_size - lo.batch_size);
    Ok(BatchLimit {
        batch_size: batch.min(hi.batch_size),
        saturated: false,
    })
}

/// Operating point with the most throughput that still meets `tpot_target`.
/// The second element flags a saturated curve.
pub fn decode_throughput_for_tpot(
    profile: &DecodeProfile,
    tpot_target: f64,
) -> Result<(DecodeOperatingPoint, Option<Warning>)> {
    let limit = max_batch_for_tpot(profile, tpot_target)?;
    // Interpolation may land an ulp above the target.
    let tpot = tpot_at(profile, limit.batch_size)?.min(tpot_target);
    let warning = limit.saturated.then_some(Warning::DecodeSaturated {
        tpot_target,
        max_batch: limit.batch_size,
    });
    Ok((DecodeOperatingPoint::at(limit.batch_size, tpot), warning))
}

/// Warnings when the planning shape differs from the profiled shape by more
/// than 25% in either length.
pub fn decode_shape_warnings(
    profile: &DecodeProfile,
    input_len: u32,
    output_len: u32,
) -> Vec<Warning> {
    [
        shape_mismatch(Phase::Decode, "input_len", profile.input_len(), input_len),
        shape_mismatch(
            Phase::Decode,
            "output_len",
            profile.output_len(),
            output_len,
        ),
    ]
    .into_iter()
    .flatten()
    .collect()
}

#[derive(Debug, Deserialize)]
struct DecodeRow {
    batch: f64,
    tpot_ms: f64,
    #[serde(default)]
    throughput_tps: Option<f64>,
}

/// Reads the decode profile CSV: header `batch,tpot_ms[,throughput_tps]`,
/// TPOT in milliseconds.
pub fn read_decode_csv<R: Read>(
    reader: R,
    input_len: u32,
    output_len: u32,
) -> Result<(DecodeProfile, Vec<Warning>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::MalformedProfile(e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["batch", "tpot_ms"] && names != ["batch", "tpot_ms", "throughput_tps"] {
        return Err(Error::MalformedProfile(format!(
            "expected header batch,tpot_ms[,throughput_tps], got {}",
            names.join(",")
        )));
    }
    let mut points = Vec::new();
    for row in rdr.deserialize::<DecodeRow>() {
        let row = row.map_err(|e| Error::MalformedProfile(e.to_string()))?;
        points.push(DecodePoint {
            batch_size: row.batch,
            tpot: row.tpot_ms / 1000.0,
            engine_throughput: row.throughput_tps,
        });
    }
    validate_profile(input_len, output_len, points)
}
