// Size a disaggregated deployment for 5 M TPM of 6144-in / 512-out traffic
// with a 2 s TTFT and 20 ms TPOT target.
//
// Run with `cargo run --example plan_deployment`.

use pd_planner::{
    plan, DecodePoint, DecodeProfile, PrefillProfile, RoundingPolicy, SloSpec, WorkloadSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workload = WorkloadSpec::from_tpm(5.0, 6144, 512)?;
    let slo = SloSpec::new(2.0, 0.020, 0.1)?;
    let prefill = PrefillProfile::new(6144, 24576, 28300.0)?;
    let decode = DecodeProfile::new(
        6144,
        512,
        [
            (1.0, 8.0),
            (8.0, 10.5),
            (16.0, 13.5),
            (34.0, 20.0),
            (64.0, 32.0),
        ]
        .iter()
        .map(|&(batch, ms)| DecodePoint::new(batch, ms / 1000.0))
        .collect(),
    )?;

    for policy in [RoundingPolicy::Nearest, RoundingPolicy::Ceil] {
        let p = plan(&workload, &slo, &prefill, &decode, policy)?;
        println!("{policy:?}: {}", p.label());
        println!(
            "  effective prefill {:.1} tok/s, decode {:.1} tok/s at batch {:.1}",
            p.eff_prefill_throughput, p.eff_decode_throughput, p.decode_batch
        );
        println!(
            "  P:D ratio {:.3}, fractional {:.3}P {:.3}D",
            p.pd_ratio, p.frac_prefill, p.frac_decode
        );
        println!(
            "  achievable {:.3} M TPM ({}-bound)",
            p.achievable_tpm(),
            p.binding_phase
        );
        for w in &p.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
