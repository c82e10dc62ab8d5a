//! The limiting coverage profile `h_m`, the Laplace transform of the
//! branching limit `W`, and related constants.

mod constants;
mod mc;
mod solver;

pub use constants::{LawConstants, Ratio};
pub use mc::{gumbel_h_mc, gumbel_h_mc_with, reference_params, tail_constant, w_tail_bounds, TailBounds};
pub use solver::{solve_h, solve_h_default, GridSpec, LimitLaw, DEFAULT_MAX_ITER, DEFAULT_TOL};
