// Prefix-cache hits shrink prefill work. Planning with the uncached input
// length in place of the full prompt shows how many prefill instances that
// saves.

use pd_planner::{
    plan, DecodePoint, DecodeProfile, PrefillProfile, RoundingPolicy, SloSpec, WorkloadSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let slo = SloSpec::new(2.0, 0.020, 0.1)?;
    let prefill = PrefillProfile::new(6144, 24576, 28300.0)?;
    let decode = DecodeProfile::new(
        6144,
        512,
        vec![
            DecodePoint::new(8.0, 0.0105),
            DecodePoint::new(34.0, 0.020),
            DecodePoint::new(64.0, 0.032),
        ],
    )?;
    let base = WorkloadSpec::from_tpm(5.0, 6144, 512)?;
    for hit_rate in [0.0, 0.25, 0.5, 0.75] {
        let uncached = ((1.0 - hit_rate) * 6144.0_f64).round() as u32;
        let workload = base.with_effective_input_len(uncached)?;
        let p = plan(&workload, &slo, &prefill, &decode, RoundingPolicy::Nearest)?;
        println!(
            "hit rate {:>4.0}%: prefill len {uncached:>4} -> {} (P:D {:.3}), {} warning(s)",
            hit_rate * 100.0,
            p.label(),
            p.pd_ratio,
            p.warnings.len()
        );
    }
    Ok(())
}
