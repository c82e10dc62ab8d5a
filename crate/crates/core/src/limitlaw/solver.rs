use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid in `s = log(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub ds: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { s_min: -16.0, s_max: 12.0, ds: 0.005 }
    }
}

impl GridSpec {
    pub fn len(&self) -> usize {
        ((self.s_max - self.s_min) / self.ds).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        self.s_min + i as f64 * self.ds
    }
}

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// The profile `h = 1 - phi(e^s)` solved on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitLaw {
    m: usize,
    grid: GridSpec,
    h: Vec<f64>,
    #[serde(skip)]
    slopes: Vec<f64>,
    iterations: usize,
    last_change: f64,
    residual: f64,
}

/// Solves `h(s) = 1 - exp(-int_0^inf x^m / m! h(s - x) dx)` normalised by
/// `h(s) ~ e^s` as `s -> -inf`, by fixed-point iteration from `min(1, e^s)`.
pub fn solve_h(m: usize, grid: GridSpec, tol: f64, max_iter: usize) -> Result<LimitLaw> {
    if grid.s_min.exp() > 1e-6 {
        return Err(Error::InvalidSolverInput(format!("s_min = {} is not far enough left", grid.s_min)));
    }
    if !(grid.ds > 0.0 && grid.ds <= 0.01) {
        return Err(Error::InvalidSolverInput(format!("grid step {} must be in (0, 0.01]", grid.ds)));
    }
    if !(grid.s_max > grid.s_min + 1.0) {
        return Err(Error::InvalidSolverInput("grid must extend at least one unit right of s_min".into()));
    }
    if !(tol >= 1e-12) {
        return Err(Error::InvalidSolverInput(format!("tolerance {tol} is below 1e-12")));
    }
    let n = grid.len();
    let mut h: Vec<f64> = (0..n).map(|i| grid.point(i).exp().min(1.0)).collect();
    let mut work = Workspace::new(m, n);
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let next = work.apply(&h, &grid);
        change = next.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        h = next;
        if change < tol {
            break;
        }
    }
    if change >= tol {
        return Err(Error::NoConvergence { iterations, last_change: change });
    }
    let residual = work.apply(&h, &grid).iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let slopes = pchip_slopes(&h, grid.ds);
    Ok(LimitLaw { m, grid, h, slopes, iterations, last_change: change, residual })
}

/// Default grid and tolerance.
pub fn solve_h_default(m: usize) -> Result<LimitLaw> {
    solve_h(m, GridSpec::default(), DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Buffers for the iterated integrals `J_k(s) = int_{-inf}^s J_{k-1}`, `J_{-1} = h`.
struct Workspace {
    m: usize,
    j: Vec<Vec<f64>>,
    dh: Vec<f64>,
}

impl Workspace {
    fn new(m: usize, n: usize) -> Self {
        Workspace { m, j: vec![vec![0.0; n]; m + 1], dh: vec![0.0; n] }
    }

    /// One application of `h -> 1 - exp(-I[h])`, where `I[h] = J_m`.
    ///
    /// Each `J_k` is a cumulative trapezoid sum with the Euler–Maclaurin end
    /// correction; left of the grid all `J_k` equal `e^s`.
    fn apply(&mut self, h: &[f64], grid: &GridSpec) -> Vec<f64> {
        let n = h.len();
        let ds = grid.ds;
        let e0 = grid.s_min.exp();
        let c = ds * ds / 12.0;
        // Derivative of h for the first correction.
        self.dh[0] = e0;
        for i in 1..n - 1 {
            self.dh[i] = (h[i + 1] - h[i - 1]) / (2.0 * ds);
        }
        self.dh[n - 1] = (3.0 * h[n - 1] - 4.0 * h[n - 2] + h[n - 3]) / (2.0 * ds);
        for k in 0..=self.m {
            let (lower, upper) = self.j.split_at_mut(k);
            let out = &mut upper[0];
            let f: &[f64] = if k == 0 { h } else { &lower[k - 1] };
            let df: &[f64] = match k {
                0 => &self.dh,
                1 => h,
                _ => &lower[k - 2],
            };
            let mut acc = 0.0;
            out[0] = e0;
            for i in 1..n {
                acc += 0.5 * ds * (f[i - 1] + f[i]);
                out[i] = e0 + acc - c * (df[i] - df[0]);
            }
        }
        self.j[self.m].iter().map(|x| -(-x).exp_m1()).collect()
    }
}

/// Fritsch–Carlson monotone slopes on a uniform grid.
fn pchip_slopes(y: &[f64], dx: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        d[i] = if a * b <= 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
    }
    let end = |d0: f64, d1: f64| {
        let s = 0.5 * (3.0 * d0 - d1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(delta[0], delta[1]);
    d[n - 1] = end(delta[n - 2], delta[n - 3]);
    d
}

impl LimitLaw {
    /// Integrand power `m`; `r = m + 1` is the order of the branching process.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn last_change(&self) -> f64 {
        self.last_change
    }

    /// `sup |h - (1 - exp(-I[h]))|` over the grid after convergence.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `h(s_min + 1) / h(s_min)`, which should be close to `e`.
    pub fn left_edge_ratio(&self) -> f64 {
        let k = (1.0 / self.grid.ds).round() as usize;
        self.h[k] / self.h[0]
    }

    /// Monotone cubic interpolation of `h`; an exponential tail `~ e^x` left of
    /// the grid (matched to the first grid value), 1 right of it.
    pub fn eval_h(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= self.grid.s_min {
            return self.h[0] * (x - self.grid.s_min).exp();
        }
        if x >= self.grid.s_max {
            return 1.0;
        }
        let u = (x - self.grid.s_min) / self.grid.ds;
        let i = (u.floor() as usize).min(self.h.len() - 2);
        let t = u - i as f64;
        let dx = self.grid.ds;
        let (y0, y1) = (self.h[i], self.h[i + 1]);
        let (m0, m1) = (self.slopes[i] * dx, self.slopes[i + 1] * dx);
        // Increment form keeps rounding monotone when y0 is close to 1.
        let u1 = 1.0 - t;
        let inc = (y1 - y0) * t * t * (3.0 - 2.0 * t) + m0 * t * u1 * u1 - m1 * t * t * u1;
        (y0 + inc).clamp(y0.min(y1), y0.max(y1))
    }

    /// Laplace transform `phi(theta) = E exp(-theta W)`.
    pub fn phi(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return 1.0;
        }
        1.0 - self.eval_h(theta.ln())
    }

    /// Writes `(s, h(s))` rows as CSV.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "s,h")?;
        for (i, h) in self.h.iter().enumerate() {
            writeln!(out, "{},{}", self.grid.point(i), h)?;
        }
        Ok(())
    }
}
