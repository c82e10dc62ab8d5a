//! Configuration, seeded ensembles and the experiments that compare
//! simulations with the limit theory.

mod config;
mod ensemble;
mod experiments;
mod output;

pub use config::{cd_preset, ExperimentConfig, IntersectionConfig, Tolerances, XGrid};
pub use ensemble::{run_ensemble, run_rng, AUX_STREAM};
pub use experiments::{
    all_passed, covering_constant, exp_pair_laplace, hitting_tail, run_coverage, run_distance,
    run_intersections, run_path_lln, run_path_lln_with, u_hat, Check, CoverageReport, DistanceReport,
    HittingTail, IntersectionReport, PathLlnReport, PathRun,
};
pub use output::{write_json, WriteOutputs};
