use rand::Rng;
use rand_distr::{Distribution, Gumbel};
use serde::Serialize;

use super::solver::LimitLaw;
use crate::branching::{sample_w, ProcessKind, ProcessParams, DEFAULT_EVENT_CAP};
use crate::error::{Error, Result};
use crate::geometry::{BallShape, ManifoldSpec, Topology};
use crate::stats::EmpiricalCdf;

/// Branching parameters whose limit `W` has the law matching profile power `m`.
///
/// The law of `W` depends only on the order `r = m + 1`, so a small-world
/// process in dimension `m + 1` with unit growth rate is used.
pub fn reference_params(m: usize) -> Result<ProcessParams> {
    let d = m + 1;
    let spec = ManifoldSpec::new(vec![1.0; d], Topology::Torus, BallShape::Sup)?;
    ProcessParams::with_lambda0(ProcessKind::SmallWorld, 1.0, spec)
}

/// Empirical law of `-G - log W` with `G` standard Gumbel, whose CDF is `h_m`.
pub fn gumbel_h_mc<R: Rng + ?Sized>(m: usize, n: usize, budget: f64, rng: &mut R) -> Result<EmpiricalCdf> {
    let params = reference_params(m)?;
    gumbel_h_mc_with(n, rng, |rng| sample_w(&params, budget, DEFAULT_EVENT_CAP, rng))
}

/// As [`gumbel_h_mc`] with a caller-supplied sampler for `W`.
pub fn gumbel_h_mc_with<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    mut sample: impl FnMut(&mut R) -> Result<f64>,
) -> Result<EmpiricalCdf> {
    if n < 1000 {
        return Err(Error::InvalidParams(format!("at least 1000 samples needed, got {n}")));
    }
    let gumbel = Gumbel::new(0.0, 1.0).expect("standard Gumbel");
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let w = sample(rng)?;
        let g: f64 = gumbel.sample(rng);
        out.push(-g - w.ln());
    }
    Ok(EmpiricalCdf::new(out))
}

/// Bounds on the tails of `W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBounds {
    /// Bound on `P[W <= w]`; only informative for `w < 1`.
    pub lower_tail_bound: f64,
    /// Markov bound on `P[W >= w]`.
    pub upper_tail_bound: f64,
}

/// Tail bounds `e exp(-c log(1/w)^{m+1})` with `c = (1 - phi(1)) / (m+1)!`, and `1/w`.
pub fn w_tail_bounds(law: &LimitLaw, w: f64) -> TailBounds {
    let c = tail_constant(law);
    let lower = if w < 1.0 {
        (std::f64::consts::E * (-c * (1.0 / w).ln().powi(law.m() as i32 + 1)).exp()).min(1.0)
    } else {
        1.0
    };
    TailBounds { lower_tail_bound: lower, upper_tail_bound: (1.0 / w).min(1.0) }
}

/// The constant `c` of the lower tail bound.
pub fn tail_constant(law: &LimitLaw) -> f64 {
    (1.0 - law.phi(1.0)) / crate::branching::factorial(law.m() + 1)
}
