// Analytic TTFT/TPOT versus load for 3P4D and 3P3D, and where each
// deployment stops meeting its SLOs.

use pd_planner::{
    sweep, tpm_to_tps, tps_to_tpm, DecodePoint, DecodeProfile, PrefillProfile, SloSpec,
    WorkloadSpec,
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
            (4.0, 9.0),
            (8.0, 10.5),
            (16.0, 13.5),
            (24.0, 16.5),
            (34.0, 20.0),
            (48.0, 25.5),
            (64.0, 32.0),
        ]
        .iter()
        .map(|&(batch, ms)| DecodePoint::new(batch, ms / 1000.0))
        .collect(),
    )?;
    let grid: Vec<f64> = (0..=30)
        .map(|i| tpm_to_tps(2.5 + 0.1 * f64::from(i)))
        .collect();

    for (np, nd) in [(3, 4), (3, 3)] {
        let points = sweep(np, nd, &workload, &slo, &prefill, &decode, &grid)?;
        let knee = points.iter().take_while(|p| p.meets_slo(&slo)).last();
        match knee {
            Some(p) => println!(
                "{np}P{nd}D meets SLOs up to {:.1} M TPM (ttft {:.3} s, tpot {:.1} ms)",
                tps_to_tpm(p.total_throughput),
                p.predicted_ttft,
                p.predicted_tpot * 1000.0
            ),
            None => println!("{np}P{nd}D never meets SLOs on this grid"),
        }
    }
    Ok(())
}
