//! Exact simulation of the spread process on a flat torus or rectangle.

mod coverage;
mod ghost;
mod intersections;
mod sim;
mod weights;

pub use coverage::{covered_length_merge, Envelope1d};
pub use ghost::{coupled_ghost_run, CoupledEvent, CoupledRun, GhostCause, GhostRule};
pub use intersections::{
    count_cross_intersections, count_self_intersections, cross_intersection_mean, intersection_stats,
    p_lambda_plus, self_intersection_mean, IntersectionStats,
};
pub use sim::{simulate, write_jsonl, Disposition, EventRecord, SimOptions, SpatialState};
pub use weights::PowerSumTree;
