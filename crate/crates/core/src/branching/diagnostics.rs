use std::f64::consts::PI;

use serde::Serialize;

use super::params::factorial;
use super::trajectory::Trajectory;

/// `5 K^{-1/3}`.
pub fn eps_k(k: f64) -> f64 {
    5.0 * k.powf(-1.0 / 3.0)
}

/// Exponent of the geometric bias in the W estimate.
pub fn beta_r(r: usize, k: f64) -> f64 {
    if r <= 6 {
        0.5 * (1.0 - eps_k(k))
    } else {
        1.0 - (2.0 * PI / r as f64).cos()
    }
}

/// Level `(40 log Lambda)^3` used for the early-phase events.
pub fn k_of_lambda(big_lambda: f64) -> f64 {
    (40.0 * big_lambda.ln()).powi(3)
}

/// Constants of the growth bounds for a process of order `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub c_a: f64,
    pub theta: f64,
    /// Time scale constant of the hitting-time tail bound.
    pub c_c: f64,
}

impl GrowthConstants {
    pub fn new(r: usize) -> Self {
        let root = factorial(r).powf(1.0 / r as f64);
        let c_a = 3.0 * root.exp();
        GrowthConstants { c_a, theta: c_a * (1.0f64 / 80.0).exp(), c_c: 2.0 * root / (6.0f64 / 5.0).ln() }
    }
}

/// The three early-phase events evaluated on one run at time `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthDiagnostics {
    pub k: f64,
    pub s: f64,
    pub eps_k: f64,
    pub beta_r: f64,
    /// `e^{-lambda0 s} max_i H_i(s)`.
    pub scaled_norm: f64,
    pub h_r: f64,
    /// `sup_u (u v 1)^{-(1+eps)/2} |Z(u) - u|` over `[0, H_r(s)]`.
    pub poisson_deviation: f64,
    /// Scaled norm at most `theta K`.
    pub bounded: bool,
    /// `H_r(s) >= K`.
    pub reached: bool,
    /// Poisson deviation at most `K^{(1-eps)/2}`.
    pub regular: bool,
}

impl GrowthDiagnostics {
    pub fn all(&self) -> bool {
        self.bounded && self.reached && self.regular
    }
}

/// Evaluates the early-phase events of `traj` at time `s` for level `k`.
pub fn diagnostics_at(traj: &Trajectory, s: f64, k: f64) -> GrowthDiagnostics {
    let params = &traj.params;
    let r = params.r();
    let state = traj.state_at(s);
    let h = state.h_vector(params.lambda0());
    let scaled_norm = (-params.lambda0() * s).exp() * h[1..].iter().cloned().fold(0.0, f64::max);
    let h_r = h[r];
    let eps = eps_k(k);
    let n = traj.z_times.partition_point(|u| *u <= h_r);
    let poisson_deviation = weighted_deviation(&traj.z_times[..n], h_r, 0.5 * (1.0 + eps));
    let consts = GrowthConstants::new(r);
    GrowthDiagnostics {
        k,
        s,
        eps_k: eps,
        beta_r: beta_r(r, k),
        scaled_norm,
        h_r,
        poisson_deviation,
        bounded: scaled_norm <= consts.theta * k,
        reached: h_r >= k,
        regular: poisson_deviation <= k.powf(0.5 * (1.0 - eps)),
    }
}

/// `sup_{0 <= u <= end} (u v 1)^{-a} |Z(u) - u|`, where `Z` counts `jumps`.
///
/// `Z` is constant between jumps, so on each piece the supremum sits at an
/// endpoint, at `u = 1`, or at the stationary point of `(u - k) u^{-a}`.
pub fn weighted_deviation(jumps: &[f64], end: f64, a: f64) -> f64 {
    let f = |u: f64, k: f64| u.max(1.0).powf(-a) * (k - u).abs();
    let mut best = 0.0f64;
    let mut lo = 0.0;
    for k in 0..=jumps.len() {
        let hi = if k < jumps.len() { jumps[k] } else { end };
        let kf = k as f64;
        let mut cands = vec![lo, hi];
        if lo < 1.0 && 1.0 < hi {
            cands.push(1.0);
        }
        if a > 1.0 {
            let star = a * kf / (a - 1.0);
            if lo < star && star < hi {
                cands.push(star);
            }
        }
        for u in cands {
            best = best.max(f(u, kf));
        }
        lo = hi;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::trajectory::{simulate_to, DEFAULT_EVENT_CAP};
    use crate::branching::{ProcessKind, ProcessParams};
    use crate::geometry::{BallShape, ManifoldSpec, Topology};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn traj(seed: u64) -> Trajectory {
        let spec = ManifoldSpec::new(vec![100.0], Topology::Torus, BallShape::Round).unwrap();
        let p = ProcessParams::with_lambda0(ProcessKind::Gossip, 1.0, spec).unwrap();
        simulate_to(&p, 6.0, &[], DEFAULT_EVENT_CAP, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn constants() {
        let c = GrowthConstants::new(2);
        assert!((c.c_a - 3.0 * 2f64.sqrt().exp()).abs() < 1e-12);
        assert!((c.c_c - 2.0 * 2f64.sqrt() / 1.2f64.ln()).abs() < 1e-12);
        assert_eq!(eps_k(125.0), 1.0);
        assert!((beta_r(7, 1e6) - (1.0 - (2.0 * PI / 7.0).cos())).abs() < 1e-15);
        assert!((k_of_lambda(1e4) - (40.0 * 1e4f64.ln()).powi(3)).abs() < 1e-6);
    }

    #[test]
    fn nothing_reached_at_time_zero() {
        let d = diagnostics_at(&traj(1), 0.0, 1.0);
        assert!(!d.reached);
        assert_eq!(d.h_r, 0.0);
    }

    #[test]
    fn bounded_event_is_monotone_in_level() {
        for seed in 0..50 {
            let tr = traj(seed);
            let mut was = false;
            for k in [1.0, 2.0, 5.0, 20.0, 100.0] {
                let now = diagnostics_at(&tr, 4.0, k).bounded;
                assert!(!was || now);
                was = now;
            }
        }
    }

    #[test]
    fn weighted_deviation_matches_dense_scan() {
        let jumps = [0.3, 0.9, 2.5, 2.6, 7.0];
        for a in [0.6, 1.0, 1.7] {
            let exact = weighted_deviation(&jumps, 9.0, a);
            let mut dense = 0.0f64;
            for i in 0..=90_000 {
                let u = i as f64 * 1e-4;
                let z = jumps.iter().filter(|j| **j <= u).count() as f64;
                dense = dense.max(u.max(1.0).powf(-a) * (z - u).abs());
            }
            assert!(exact >= dense - 1e-9);
            assert!(exact - dense < 1e-3, "{a}: {exact} vs {dense}");
        }
    }
}
