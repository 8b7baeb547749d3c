// Property checks shared by the property test suite and the acceptance
// harness.
#![allow(dead_code)]

use pd_planner::decode::decode_throughput_for_tpot;
use pd_planner::planner::{fractional_counts, round_plan, total_throughput};
use pd_planner::queueing::{max_arrival_rate, predicted_ttft};
use pd_planner::{
    achievable_total_throughput, effective_prefill_throughput, pd_ratio, sweep, tpm_to_tps,
    tps_to_tpm, DecodePoint, DecodeProfile, PrefillProfile, QueueParams, RoundingPolicy, SloSpec,
    WorkloadSpec,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// A monotone decode curve: batch sizes increase, TPOT never falls and
/// throughput never falls.
pub fn decode_curve() -> impl Strategy<Value = DecodeProfile> {
    (
        1.0..4.0f64,
        0.002..0.05f64,
        prop::collection::vec((1.0..32.0f64, 0.05..1.0f64), 1..8),
    )
        .prop_map(|(b0, t0, steps)| {
            let mut points = vec![DecodePoint::new(b0.floor(), t0)];
            for (db, u) in steps {
                let last = *points.last().unwrap();
                let b = last.batch_size + db.floor();
                let growth = 1.0 + u * (b / last.batch_size - 1.0);
                points.push(DecodePoint::new(b, last.tpot * growth));
            }
            DecodeProfile::new(1024, 256, points).expect("generated curve is valid")
        })
}

pub fn ttft_round_trip(
    mu: f64,
    input_len: u32,
    overhead: f64,
    k: f64,
) -> Result<(), TestCaseError> {
    let profile = PrefillProfile::new(input_len, input_len, mu * f64::from(input_len)).unwrap();
    let mu = profile.max_throughput / f64::from(input_len);
    let ttft = overhead + k / mu;
    let slo = SloSpec::new(ttft, 0.02, overhead).unwrap();
    let lambda = max_arrival_rate(&profile, input_len, &slo).unwrap();
    let back = predicted_ttft(QueueParams::new(mu, lambda).unwrap(), overhead).unwrap();
    prop_assert!(rel(back, ttft) < 1e-9, "ttft {ttft} came back as {back}");
    Ok(())
}

fn eff(tp: f64, len: u32, ttft: f64, overhead: f64) -> Option<f64> {
    let profile = PrefillProfile::new(len, len, tp).ok()?;
    let slo = SloSpec::new(ttft, 0.02, overhead).ok()?;
    effective_prefill_throughput(&profile, len, &slo).ok()
}

/// `better` must be feasible whenever `worse` is, and at least as large.
fn no_worse(better: Option<f64>, worse: Option<f64>, what: &str) -> Result<(), TestCaseError> {
    if let Some(w) = worse {
        let b =
            better.ok_or_else(|| TestCaseError::fail(format!("{what}: better case infeasible")))?;
        prop_assert!(b >= w, "{what}: {b} < {w}");
    }
    Ok(())
}

pub fn effective_prefill_monotone(
    tp: f64,
    len: u32,
    ttft: f64,
    overhead: f64,
    bump: f64,
) -> Result<(), TestCaseError> {
    let base = eff(tp, len, ttft, overhead);
    no_worse(eff(tp, len, ttft + bump, overhead), base, "ttft")?;
    no_worse(
        eff(tp * (1.0 + bump), len, ttft, overhead),
        base,
        "max throughput",
    )?;
    no_worse(
        base,
        eff(tp, len + 1 + (bump * 100.0) as u32, ttft, overhead),
        "input length",
    )?;
    no_worse(base, eff(tp, len, ttft, overhead + bump * 0.1), "overhead")?;
    Ok(())
}

pub fn decode_throughput_monotone(
    profile: &DecodeProfile,
    a: f64,
    b: f64,
) -> Result<(), TestCaseError> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let span = profile.max_tpot() * 1.2;
    let (lo, hi) = (lo * span, hi * span);
    match (
        decode_throughput_for_tpot(profile, lo),
        decode_throughput_for_tpot(profile, hi),
    ) {
        (Ok((x, _)), Ok((y, _))) => {
            prop_assert!(
                y.throughput >= x.throughput * (1.0 - 1e-12),
                "{lo}->{x:?}, {hi}->{y:?}"
            );
            prop_assert!(x.tpot <= lo * (1.0 + 1e-12));
        }
        (Ok(_), Err(e)) => return Err(TestCaseError::fail(format!("looser target failed: {e}"))),
        (Err(_), _) => prop_assert!(lo < profile.min_tpot()),
    }
    Ok(())
}

pub fn balance(
    tpm: f64,
    input_len: u32,
    output_len: u32,
    tp_p: f64,
    tp_d: f64,
) -> Result<(), TestCaseError> {
    let w = WorkloadSpec::from_tpm(tpm, input_len, output_len).unwrap();
    let (np, nd) = fractional_counts(&w, tp_p, tp_d).unwrap();
    let (li, lo) = (f64::from(input_len), f64::from(output_len));
    let ratio = pd_ratio(li, lo, tp_p, tp_d).unwrap();
    prop_assert!(rel(np / nd, ratio) < 1e-12);
    prop_assert!(rel(np * tp_p * (li + lo) / li, w.total_throughput) < 1e-9);
    prop_assert!(rel(nd * tp_d * (li + lo) / lo, w.total_throughput) < 1e-9);

    let (cp, cd) = round_plan((np, nd), RoundingPolicy::Ceil);
    let (got, _) = achievable_total_throughput(cp, cd, input_len, output_len, tp_p, tp_d);
    prop_assert!(
        got >= w.total_throughput * (1.0 - 1e-12),
        "ceil plan {cp}P{cd}D gives {got}"
    );
    let (rp, rd) = round_plan((np, nd), RoundingPolicy::Nearest);
    prop_assert!(rp >= 1 && rd >= 1);
    prop_assert!(rp.abs_diff(cp) <= 1 && rd.abs_diff(cd) <= 1);
    Ok(())
}

pub fn sweep_monotone(
    profile: &DecodeProfile,
    n_p: u32,
    n_d: u32,
    top: f64,
) -> Result<(), TestCaseError> {
    let w = WorkloadSpec::new(1.0, 1024, 256).unwrap();
    let slo = SloSpec::new(5.0, 1.0, 0.0).unwrap();
    let prefill = PrefillProfile::new(1024, 1024, 20_000.0).unwrap();
    let grid: Vec<f64> = (0..=20).map(|i| top * f64::from(i) / 20.0).collect();
    let points = sweep(n_p, n_d, &w, &slo, &prefill, profile, &grid).unwrap();
    for pair in points.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        prop_assert!(b.predicted_ttft >= a.predicted_ttft);
        prop_assert!(b.prefill_utilization >= a.prefill_utilization);
        if a.decode_stable && b.decode_stable {
            prop_assert!(b.predicted_tpot >= a.predicted_tpot * (1.0 - 1e-9));
            prop_assert!(b.decode_batch_per_instance >= a.decode_batch_per_instance * (1.0 - 1e-9));
        }
        prop_assert!(a.prefill_stable || !b.prefill_stable);
    }
    Ok(())
}

pub fn throughput_identity(
    n: f64,
    input_len: u32,
    output_len: u32,
    t: f64,
) -> Result<(), TestCaseError> {
    let tp = total_throughput(n, input_len, output_len, t).unwrap();
    prop_assert!(rel(tp * t, n * f64::from(input_len + output_len)) < 1e-12);
    prop_assert!(rel(tps_to_tpm(tpm_to_tps(t)), t) < 1e-12);
    prop_assert!(rel(tpm_to_tps(1.0), 1e6 / 60.0) < 1e-15);
    Ok(())
}
