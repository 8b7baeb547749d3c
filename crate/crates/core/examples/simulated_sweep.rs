// Pair analytic sweep predictions with discrete-event simulation for the
// planned 3P4D deployment and the under-provisioned 3P3D one.

use pd_planner::sim::{simulate_sweep, simulated_knee, SimSettings};
use pd_planner::{
    tpm_to_tps, tps_to_tpm, DecodePoint, DecodeProfile, PrefillProfile, SloSpec, WorkloadSpec,
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
    let grid: Vec<f64> = (0..=8)
        .map(|i| tpm_to_tps(3.4 + 0.2 * f64::from(i)))
        .collect();
    let settings = SimSettings {
        requests: 10_000,
        seed: 7,
        ..Default::default()
    };

    for (np, nd) in [(3, 4), (3, 3)] {
        println!("{np}P{nd}D: tpm, ttft analytic/sim, tpot_ms analytic/sim");
        let rows = simulate_sweep(np, nd, &workload, &slo, &prefill, &decode, &grid, &settings)?;
        for (p, s) in &rows {
            let s = s.as_ref().expect("positive load");
            println!(
                "  {:.1}, {:.3}/{:.3}, {:.2}/{:.2}",
                tps_to_tpm(p.total_throughput),
                p.predicted_ttft,
                s.ttft_mean,
                p.predicted_tpot * 1000.0,
                s.tpot_mean * 1000.0
            );
        }
        println!(
            "  simulated knee: {:?} M TPM",
            simulated_knee(&rows, &slo).map(tps_to_tpm)
        );
    }
    Ok(())
}
