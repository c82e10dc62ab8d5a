//! The Markov branching approximation, simulated exactly through the power
//! sums of its island ages.

mod diagnostics;
mod moments;
mod params;
mod trajectory;

pub use diagnostics::{
    beta_r, diagnostics_at, eps_k, k_of_lambda, weighted_deviation, GrowthConstants, GrowthDiagnostics,
};
pub use moments::{
    cumulative_intensity, invert_intensity, moments_from_births, next_event_delay, step, MomentState,
};
pub use params::{ProcessKind, ProcessParams};
pub(crate) use params::{binom, factorial};
pub use trajectory::{
    h_hat, hitting_time, sample_w, simulate_to, w_statistics, Checkpoint, Trajectory, WStatistics,
    DEFAULT_EVENT_CAP, DEFAULT_W_BUDGET,
};
