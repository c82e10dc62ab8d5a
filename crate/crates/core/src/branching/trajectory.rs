use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;

use super::moments::{invert_intensity, next_event_delay, MomentState};
use super::params::ProcessParams;
use crate::error::{Error, Result};

/// Default number of births after which a run is abandoned.
pub const DEFAULT_EVENT_CAP: usize = 10_000_000;
/// Default `B` in `T = log(B) / lambda0` for [`sample_w`].
pub const DEFAULT_W_BUDGET: f64 = 1e3;

/// Normalised summaries of the moment vector at the state's current time.
#[derive(Debug, Clone, PartialEq)]
pub struct WStatistics {
    /// `r e^{-lambda0 t} (H_1, ..., H_r)`.
    pub w_vec: Vec<f64>,
    /// `e^{-lambda0 t} (H_1 + ... + H_r)`.
    pub w_star: f64,
    /// `e^{-lambda0 t} (H_0 + ... + H_{r-1})`, a mean-one martingale.
    pub w_tilde: f64,
}

pub fn w_statistics(params: &ProcessParams, state: &MomentState) -> WStatistics {
    w_from_h(&state.h_vector(params.lambda0()), params.lambda0() * state.t())
}

pub(crate) fn w_from_h(h: &[f64], scaled_t: f64) -> WStatistics {
    let r = h.len() - 1;
    let damp = (-scaled_t).exp();
    WStatistics {
        w_vec: h[1..].iter().map(|x| r as f64 * damp * x).collect(),
        w_star: damp * h[1..].iter().sum::<f64>(),
        w_tilde: damp * h[..r].iter().sum::<f64>(),
    }
}

/// `H_0 - H_r`, the perturbation in the vector equation for `H`.
pub fn h_hat(h: &[f64]) -> f64 {
    h[0] - h[h.len() - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub m: Vec<f64>,
    pub h: Vec<f64>,
    pub w_tilde: f64,
}

/// A completed branching run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ProcessParams,
    pub horizon: f64,
    /// Birth times, starting with the initial island at 0.
    pub births: Vec<f64>,
    /// `H_r` at each birth after the first: the jump points of the driving
    /// unit-rate Poisson process.
    pub z_times: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
}

impl Trajectory {
    /// Moment state reconstructed at time `s <= horizon`.
    pub fn state_at(&self, s: f64) -> MomentState {
        let n = self.births.partition_point(|b| *b <= s);
        MomentState::from_births(self.params.r(), &self.births[..n], s)
    }

    /// Writes checkpoints as CSV with columns `t, M_0..M_r, H_0..H_r, W_tilde`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let r = self.params.r();
        let mut header = vec!["t".to_string()];
        header.extend((0..=r).map(|i| format!("M_{i}")));
        header.extend((0..=r).map(|i| format!("H_{i}")));
        header.push("W_tilde".into());
        writeln!(out, "{}", header.join(","))?;
        for c in &self.checkpoints {
            let mut row = vec![c.t.to_string()];
            row.extend(c.m.iter().map(f64::to_string));
            row.extend(c.h.iter().map(f64::to_string));
            row.push(c.w_tilde.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn checkpoint(params: &ProcessParams, t: f64, m: Vec<f64>) -> Checkpoint {
    let state = MomentState::from_parts(t, m.clone());
    let h = state.h_vector(params.lambda0());
    let w_tilde = w_from_h(&h, params.lambda0() * t).w_tilde;
    Checkpoint { t, m, h, w_tilde }
}

/// Runs the branching process from one island at time 0 up to `horizon`,
/// recording checkpoints at the given (sorted) times.
pub fn simulate_to<R: Rng + ?Sized>(
    params: &ProcessParams,
    horizon: f64,
    checkpoint_times: &[f64],
    event_cap: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut state = MomentState::initial(params.r());
    let coef = params.intensity_coef();
    let mut z_times = Vec::new();
    let mut checkpoints = Vec::with_capacity(checkpoint_times.len());
    let mut pending = checkpoint_times.iter().copied().filter(|c| *c <= horizon).peekable();
    loop {
        let dt = next_event_delay(params, &state, rng);
        let next = state.t() + dt;
        while let Some(&c) = pending.peek() {
            if c >= next {
                break;
            }
            checkpoints.push(checkpoint(params, c, state.moments_after(c - state.t())));
            pending.next();
        }
        if next > horizon {
            state.advance(horizon - state.t());
            break;
        }
        state.advance(dt);
        z_times.push(coef * state.m()[params.r()]);
        state.add_birth();
        if state.count() > event_cap {
            return Err(Error::EventCapExceeded { cap: event_cap, t: state.t() });
        }
    }
    for c in pending {
        checkpoints.push(checkpoint(params, c, state.moments_after(c - state.t())));
    }
    Ok(Trajectory { params: params.clone(), horizon, births: state.births().to_vec(), z_times, checkpoints })
}

/// Runs to `T = log(budget) / lambda0` and returns `W_tilde(T)`.
///
/// The estimate is unbiased for the mean but differs from the limit by a
/// fluctuation that shrinks like a negative power of `budget`.
pub fn sample_w<R: Rng + ?Sized>(params: &ProcessParams, budget: f64, event_cap: usize, rng: &mut R) -> Result<f64> {
    if !(budget > 1.0) {
        return Err(Error::InvalidParams(format!("budget must exceed 1, got {budget}")));
    }
    if !(params.lambda0() > 0.0) {
        return Err(Error::InvalidParams("sampling W needs a positive growth rate".into()));
    }
    let horizon = budget.ln() / params.lambda0();
    let mut state = MomentState::initial(params.r());
    loop {
        let dt = next_event_delay(params, &state, rng);
        if state.t() + dt > horizon {
            state.advance(horizon - state.t());
            return Ok(w_statistics(params, &state).w_tilde);
        }
        state.advance(dt);
        state.add_birth();
        if state.count() > event_cap {
            return Err(Error::EventCapExceeded { cap: event_cap, t: state.t() });
        }
    }
}

/// First time `H_r` reaches `level`, with the crossing located exactly
/// inside the inter-birth interval where it happens.
pub fn hitting_time<R: Rng + ?Sized>(params: &ProcessParams, level: f64, event_cap: usize, rng: &mut R) -> Result<f64> {
    if !(level >= 1.0) {
        return Err(Error::InvalidParams(format!("level must be at least 1, got {level}")));
    }
    let coef = params.intensity_coef();
    let mut state = MomentState::initial(params.r());
    loop {
        let a = state.intensity_poly(coef);
        let e: f64 = rng.sample(Exp1);
        let hr = coef * state.m()[params.r()];
        if hr + e >= level {
            return Ok(state.t() + invert_intensity(&a, level - hr));
        }
        let dt = invert_intensity(&a, e);
        if !dt.is_finite() {
            return Ok(f64::INFINITY);
        }
        state.advance(dt);
        state.add_birth();
        if state.count() > event_cap {
            return Err(Error::EventCapExceeded { cap: event_cap, t: state.t() });
        }
    }
}
