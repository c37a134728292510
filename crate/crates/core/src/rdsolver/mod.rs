//! The two rate-distortion programs: the continuous-time
//! information-distortion SDP and the sampled log-det rate-distortion SDP,
//! plus scalar closed forms used as cross-checks.

pub mod barrier;
mod ct;
mod dt;
mod scalar;

pub use barrier::SolverStats;
pub use ct::{solve_ct_info, CtInfoSolution};
pub use dt::{solve_dt_rate, solve_dt_rate_perturbed, DtRateSolution};
pub use scalar::{scalar_ct_info, scalar_dt_rate, scalar_dt_rate_raw};
