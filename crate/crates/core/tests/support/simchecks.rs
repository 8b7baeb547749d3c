// Simulator checks shared by the simulator suite and the acceptance harness.
#![allow(dead_code)]

use pd_planner::{
    run_sim, DecodePoint, DecodeProfile, Horizon, PrefillProfile, ServiceDistribution, SimConfig,
    SimResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn flat_curve(input_len: u32, output_len: u32) -> DecodeProfile {
    DecodeProfile::new(
        input_len,
        output_len,
        vec![
            DecodePoint::new(1.0, 0.010),
            DecodePoint::new(16.0, 0.014),
            DecodePoint::new(64.0, 0.030),
        ],
    )
    .unwrap()
}

/// `n_prefill` instances with service rate `mu` each, offered load `rho`.
pub fn prefill_config(n_prefill: u32, mu: f64, rho: f64, requests: u64, seed: u64) -> SimConfig {
    let prefill = PrefillProfile::new(1000, 1000, mu * 1000.0).unwrap();
    let rate = rho * mu * f64::from(n_prefill);
    let mut cfg = SimConfig::new(n_prefill, 2, rate, &prefill, 1000, 4, flat_curve(1000, 4));
    cfg.horizon = Horizon::Requests(requests);
    cfg.seed = seed;
    cfg
}

pub struct LittleCheck {
    pub queue_len: f64,
    pub lambda_w: f64,
    pub bound: f64,
}

impl LittleCheck {
    pub fn holds(&self) -> bool {
        (self.queue_len - self.lambda_w).abs() <= self.bound
    }
}

/// Time-average number in prefill against arrival rate times mean sojourn,
/// with the sojourn interval scaled by the arrival rate as tolerance.
pub fn little(r: &SimResult) -> LittleCheck {
    let lambda = r.observed_arrival_rate;
    LittleCheck {
        queue_len: r.mean_prefill_queue_len,
        lambda_w: lambda * r.prefill_sojourn.mean,
        bound: lambda * r.prefill_sojourn.half_width,
    }
}

pub struct ServiceComparison {
    pub rho: f64,
    pub mm1: f64,
    pub md1: f64,
    pub half_width: f64,
}

impl ServiceComparison {
    pub fn holds(&self) -> bool {
        self.md1 <= self.mm1 + self.half_width
    }
}

/// Runs `configs` random stable single-instance configurations under both
/// service distributions with common random numbers.
pub fn md1_vs_mm1(configs: usize, requests: u64, seed: u64) -> Vec<ServiceComparison> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..configs)
        .map(|i| {
            let mu = rng.random_range(0.5..50.0);
            let rho = rng.random_range(0.05..0.9);
            let mut cfg = prefill_config(1, mu, rho, requests, seed);
            cfg.stream = i as u64;
            let mm1 = run_sim(&cfg).unwrap();
            cfg.prefill_service = ServiceDistribution::Deterministic;
            let md1 = run_sim(&cfg).unwrap();
            ServiceComparison {
                rho,
                mm1: mm1.ttft_mean,
                md1: md1.ttft_mean,
                half_width: mm1.ttft_ci_half_width,
            }
        })
        .collect()
}
