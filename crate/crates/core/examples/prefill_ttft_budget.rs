// How much of a prefill instance's peak throughput survives a TTFT target.
//
// Tighter targets leave less room for queueing, so the instance has to run
// at lower utilization.

use pd_planner::queueing::{
    effective_prefill_throughput, max_arrival_rate, predicted_ttft, service_rate,
};
use pd_planner::{PrefillProfile, QueueParams, SloSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = PrefillProfile::new(6144, 24576, 28300.0)?;
    let mu = service_rate(&profile, 6144)?;
    println!(
        "service rate {mu:.4} req/s, zero-load prefill {:.4} s",
        1.0 / mu
    );
    println!("ttft_s,max_rate_rps,effective_tps,utilization,check_ttft_s");
    for ttft in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let slo = SloSpec::new(ttft, 0.02, 0.1)?;
        match effective_prefill_throughput(&profile, 6144, &slo) {
            Ok(tp) => {
                let lambda = max_arrival_rate(&profile, 6144, &slo)?;
                let back = predicted_ttft(QueueParams::new(mu, lambda)?, 0.1)?;
                println!(
                    "{ttft},{lambda:.4},{tp:.1},{:.4},{back:.4}",
                    tp / profile.max_throughput
                );
            }
            Err(e) => println!("{ttft},,,,{e}"),
        }
    }
    Ok(())
}
