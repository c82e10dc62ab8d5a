use rand::Rng;
use rand_distr::Exp1;

use super::params::{binom, factorial, ProcessParams};

/// Power sums `M_l(t) = sum_j (t - birth_j)^l` for `l = 0..=r`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    t: f64,
    m: Vec<f64>,
    births: Vec<f64>,
}

impl MomentState {
    /// One island born at time zero.
    pub fn initial(r: usize) -> Self {
        let mut m = vec![0.0; r + 1];
        m[0] = 1.0;
        MomentState { t: 0.0, m, births: vec![0.0] }
    }

    /// Builds the state at time `t` from the given birth times.
    pub fn from_births(r: usize, births: &[f64], t: f64) -> Self {
        MomentState { t, m: moments_from_births(r, births, t), births: births.to_vec() }
    }

    /// State with the given power sums and no birth record.
    pub(crate) fn from_parts(t: f64, m: Vec<f64>) -> Self {
        MomentState { t, m, births: Vec::new() }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn births(&self) -> &[f64] {
        &self.births
    }

    pub fn count(&self) -> usize {
        self.births.len()
    }

    pub fn r(&self) -> usize {
        self.m.len() - 1
    }

    /// Power sums at time `t + dt` assuming no birth in between.
    pub fn moments_after(&self, dt: f64) -> Vec<f64> {
        let mut out = self.m.clone();
        shift_into(&self.m, dt, &mut out);
        out
    }

    /// Advances time by `dt` with no birth, using the binomial shift.
    pub fn advance(&mut self, dt: f64) {
        if dt == 0.0 {
            return;
        }
        let n = self.m.len();
        let mut old = [0.0f64; 16];
        old[..n].copy_from_slice(&self.m);
        shift_into(&old[..n], dt, &mut self.m);
        self.t += dt;
    }

    /// Adds an island born now.
    pub fn add_birth(&mut self) {
        self.m[0] += 1.0;
        self.births.push(self.t);
    }

    /// Coefficients `a_1..a_r` of `Lambda(dt) = sum_k a_k dt^k`, the
    /// cumulative intensity `coef * (M_r(t + dt) - M_r(t))`. Index 0 is unused.
    pub fn intensity_poly(&self, coef: f64) -> Vec<f64> {
        let r = self.r();
        let mut a = vec![0.0; r + 1];
        for (k, ak) in a.iter_mut().enumerate().skip(1) {
            *ak = coef * binom(r, k) * self.m[r - k];
        }
        a
    }

    /// `H_i = M_i lambda^i / i!`.
    pub fn h_vector(&self, lambda0: f64) -> Vec<f64> {
        self.m
            .iter()
            .enumerate()
            .map(|(i, m)| m * lambda0.powi(i as i32) / factorial(i))
            .collect()
    }
}

/// `M_l(t + dt) = sum_k C(l, k) dt^k M_{l-k}(t)`.
fn shift_into(m: &[f64], dt: f64, out: &mut [f64]) {
    let n = m.len();
    let mut pw = [1.0f64; 16];
    for k in 1..n {
        pw[k] = pw[k - 1] * dt;
    }
    out[0] = m[0];
    for l in 1..n {
        out[l] = (0..=l).map(|k| binom(l, k) * pw[k] * m[l - k]).sum();
    }
}

/// Recomputes the power sums directly from birth times.
pub fn moments_from_births(r: usize, births: &[f64], t: f64) -> Vec<f64> {
    let mut m = vec![0.0; r + 1];
    for b in births {
        let a = t - b;
        let mut p = 1.0;
        for ml in m.iter_mut() {
            *ml += p;
            p *= a;
        }
    }
    m
}

fn eval_poly(a: &[f64], x: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut dv = 0.0;
    for k in (1..a.len()).rev() {
        dv = dv * x + k as f64 * a[k];
        v = (v + a[k]) * x;
    }
    (v, dv)
}

/// Cumulative intensity of the candidate process over `[t, t + dt]`.
pub fn cumulative_intensity(params: &ProcessParams, state: &MomentState, dt: f64) -> f64 {
    eval_poly(&state.intensity_poly(params.intensity_coef()), dt.max(0.0)).0
}

/// Smallest `x >= 0` with `sum_k a_k x^k = target`, for nonnegative `a`.
///
/// Returns `+inf` if the polynomial vanishes identically.
pub fn invert_intensity(a: &[f64], target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let nonzero: Vec<usize> = (1..a.len()).filter(|&k| a[k] > 0.0).collect();
    match nonzero.as_slice() {
        [] => return f64::INFINITY,
        [k] => return (target / a[*k]).powf(1.0 / *k as f64),
        _ => {}
    }
    // Each term alone bounds the sum from below, so this overshoots.
    let mut x = nonzero
        .iter()
        .map(|&k| (target / a[k]).powf(1.0 / k as f64))
        .fold(f64::INFINITY, f64::min);
    // Newton from the right converges monotonically on a convex increasing function.
    for _ in 0..200 {
        let (v, dv) = eval_poly(a, x);
        let res = v - target;
        if res.abs() <= 1e-12 * target || dv <= 0.0 {
            break;
        }
        let next = x - res / dv;
        if next >= x || next < 0.0 {
            break;
        }
        x = next;
    }
    x
}

/// Delay until the next birth, by inverting the cumulative intensity at an
/// `Exp(1)` level drawn from `rng`.
pub fn next_event_delay<R: Rng + ?Sized>(params: &ProcessParams, state: &MomentState, rng: &mut R) -> f64 {
    let e: f64 = rng.sample(Exp1);
    invert_intensity(&state.intensity_poly(params.intensity_coef()), e)
}

/// Advances to the next birth and records it. Returns the delay.
pub fn step<R: Rng + ?Sized>(params: &ProcessParams, state: &mut MomentState, rng: &mut R) -> f64 {
    let dt = next_event_delay(params, state, rng);
    if dt.is_finite() {
        state.advance(dt);
        state.add_birth();
    }
    dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::ProcessKind;
    use crate::geometry::{BallShape, ManifoldSpec, Topology};
    use crate::stats::ks_one_sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(kind: ProcessKind, d: usize, rho: f64) -> ProcessParams {
        let spec = ManifoldSpec::new(vec![100.0; d], Topology::Torus, BallShape::Round).unwrap();
        ProcessParams::new(kind, rho, spec).unwrap()
    }

    #[test]
    fn zero_delay_has_zero_intensity() {
        let p = params(ProcessKind::Gossip, 2, 0.5);
        assert_eq!(cumulative_intensity(&p, &MomentState::initial(3), 0.0), 0.0);
    }

    #[test]
    fn single_island_gossip_d1() {
        let p = params(ProcessKind::Gossip, 1, 0.7);
        let s = MomentState::initial(2);
        let t = 1.3;
        let want = 0.7 * 2.0 * t * t / 2.0;
        assert!((cumulative_intensity(&p, &s, t) - want).abs() < 1e-12);
        let e = 0.9;
        let dt = invert_intensity(&s.intensity_poly(p.intensity_coef()), e);
        assert!((dt - (2.0 * e / (0.7 * 2.0)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn small_world_d1_constant_rate() {
        let p = params(ProcessKind::SmallWorld, 1, 0.4);
        let s = MomentState::from_births(1, &[0.0, 0.5, 0.7], 1.0);
        let want = 0.4 * 2.0 * 3.0 * 0.25;
        assert!((cumulative_intensity(&p, &s, 0.25) - want).abs() < 1e-12);
        let dt = invert_intensity(&s.intensity_poly(p.intensity_coef()), 1.1);
        assert!((dt - 1.1 / (0.4 * 2.0 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn inversion_residual() {
        let a = [0.0, 0.3, 2.0, 0.01, 5.0];
        for target in [1e-9, 1e-3, 0.5, 3.0, 1e4] {
            let x = invert_intensity(&a, target);
            let (v, _) = eval_poly(&a, x);
            assert!((v - target).abs() <= 1e-12 * target * 10.0, "{target}: {v}");
        }
        assert_eq!(invert_intensity(&[0.0, 0.0], 1.0), f64::INFINITY);
    }

    #[test]
    fn delays_are_time_changed_exponentials() {
        let p = params(ProcessKind::Gossip, 2, 0.2);
        let s = MomentState::from_births(3, &[0.0, 0.4, 1.1, 1.5], 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| cumulative_intensity(&p, &s, next_event_delay(&p, &s, &mut rng)))
            .collect();
        assert!(ks_one_sample(&xs, |x| 1.0 - (-x).exp()).p_value > 0.01);
    }

    #[test]
    fn steps_count_and_moments() {
        let p = params(ProcessKind::Gossip, 2, 0.5);
        let mut s = MomentState::initial(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 0..500 {
            step(&p, &mut s, &mut rng);
            assert_eq!(s.m()[0] as usize, k + 2);
        }
        assert!(s.births().windows(2).all(|w| w[0] < w[1]));
        let direct = moments_from_births(3, s.births(), s.t());
        for (a, b) in s.m().iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-9 * b.abs());
        }
    }

    #[test]
    fn h_vector_single_island() {
        let mut s = MomentState::initial(2);
        assert_eq!(s.h_vector(1.5), vec![1.0, 0.0, 0.0]);
        s.advance(2.0);
        let h = s.h_vector(1.5);
        assert!((h[1] - 3.0).abs() < 1e-12);
        assert!((h[2] - 4.5).abs() < 1e-12);
    }
}
