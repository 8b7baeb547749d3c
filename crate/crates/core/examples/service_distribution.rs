// Fixed-length prompts make prefill service nearly deterministic. Compare
// mean prefill sojourn under exponential and deterministic service at the
// same utilization.

use pd_planner::sim::{run_sim, Horizon, ServiceDistribution, SimConfig};
use pd_planner::{DecodePoint, DecodeProfile, PrefillProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prefill = PrefillProfile::new(6144, 6144, 28300.0)?;
    let mu = 28300.0 / 6144.0;
    let curve = DecodeProfile::new(
        6144,
        1,
        vec![DecodePoint::new(1.0, 0.01), DecodePoint::new(2.0, 0.02)],
    )?;
    println!("rho,mm1_analytic_s,exp_sim_s,md1_analytic_s,det_sim_s");
    for rho in [0.3, 0.5, 0.7, 0.9] {
        let mut row = Vec::new();
        for service in [
            ServiceDistribution::Exponential,
            ServiceDistribution::Deterministic,
        ] {
            let mut cfg = SimConfig::new(1, 1, rho * mu, &prefill, 6144, 1, curve.clone());
            cfg.prefill_service = service;
            cfg.horizon = Horizon::Requests(40_000);
            cfg.seed = 3;
            row.push(run_sim(&cfg)?.prefill_sojourn.mean);
        }
        let mm1 = 1.0 / (mu * (1.0 - rho));
        let md1 = 1.0 / mu + rho / (2.0 * mu * (1.0 - rho));
        println!("{rho},{mm1:.4},{:.4},{md1:.4},{:.4}", row[0], row[1]);
    }
    Ok(())
}
