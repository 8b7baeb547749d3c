//! Capacity planning for prefill/decode-disaggregated LLM serving.
//!
//! Given a total token-throughput demand, mean request lengths, TTFT and TPOT
//! targets, and measured hardware profiles, the crate computes how many
//! prefill and decode instances a cluster needs:
//!
//! * [`queueing`] turns a peak prefill throughput and a TTFT target into the
//!   throughput one prefill instance sustains, modelling it as an M/M/1 queue.
//! * [`decode`] reads the TPOT-feasible batch size and throughput off a
//!   benchmarked TPOT-versus-batch curve.
//! * [`planner`] balances the two phases into instance counts, the P:D ratio,
//!   and throughput-versus-latency sweeps.
//! * [`sim`] is a discrete-event simulator used to check the analytic
//!   predictions.
//! * [`cli`] backs the `pd-planner` binary.
//!
//! ```
//! use pd_planner::{plan, DecodePoint, DecodeProfile, PrefillProfile, RoundingPolicy, SloSpec, WorkloadSpec};
//!
//! let workload = WorkloadSpec::from_tpm(5.0, 6144, 512)?;
//! let slo = SloSpec::new(2.0, 0.020, 0.1)?;
//! let prefill = PrefillProfile::new(6144, 24576, 28300.0)?;
//! let decode = DecodeProfile::new(6144, 512, vec![
//!     DecodePoint::new(8.0, 0.0105),
//!     DecodePoint::new(34.0, 0.020),
//!     DecodePoint::new(64.0, 0.032),
//! ])?;
//! let plan = plan(&workload, &slo, &prefill, &decode, RoundingPolicy::Nearest)?;
//! assert_eq!(plan.label(), "3P4D");
//! # Ok::<(), pd_planner::Error>(())
//! ```

pub mod cli;
pub mod decode;
pub mod error;
pub mod planner;
pub mod queueing;
pub mod sim;
pub mod types;
pub mod warning;

pub use decode::{decode_throughput_for_tpot, DecodeOperatingPoint};
pub use error::{Error, Phase, Result};
pub use planner::{achievable_total_throughput, pd_ratio, plan, sweep, RoundingPolicy, SweepPoint};
pub use queueing::{effective_prefill_throughput, QueueParams};
pub use sim::{run_sim, Horizon, ServiceDistribution, SimConfig, SimResult, SimSettings};
pub use types::{
    tpm_to_tps, tps_to_tpm, validate_workload, AllocationPlan, DecodePoint, DecodeProfile,
    PrefillProfile, SloSpec, WorkloadSpec,
};
pub use warning::Warning;
