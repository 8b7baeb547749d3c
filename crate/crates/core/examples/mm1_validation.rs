// Simulate a single prefill instance and compare mean TTFT with the M/M/1
// prediction at several arrival rates.

use pd_planner::sim::{validate_against_mm1, SimSettings};
use pd_planner::PrefillProfile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = PrefillProfile::new(6144, 6144, 28300.0)?;
    let settings = SimSettings {
        requests: 50_000,
        seed: 42,
        ..Default::default()
    };
    let rows = validate_against_mm1(&profile, 6144, 0.1, &[0.5, 2.0, 3.5, 4.0, 5.0], &settings)?;
    println!("rate_rps,analytic_ttft_s,sim_ttft_s,ci_half_width,rel_err");
    for r in rows {
        match (r.analytic_ttft, r.sim_ttft, r.ci_half_width, r.rel_err) {
            (Some(a), Some(s), Some(h), Some(e)) => {
                println!("{},{a:.4},{s:.4},{h:.4},{e:.4}", r.rate)
            }
            _ => println!("{},unstable", r.rate),
        }
    }
    Ok(())
}
