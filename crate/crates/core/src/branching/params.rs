use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ManifoldSpec;

/// How long-range contacts are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    /// Contacts at a rate proportional to the informed volume.
    Gossip,
    /// Contacts at a rate proportional to the boundary of the informed region.
    SmallWorld,
}

impl ProcessKind {
    /// Number of moment equations driving the process: `d + 1` or `d`.
    pub fn order(self, d: usize) -> usize {
        match self {
            ProcessKind::Gossip => d + 1,
            ProcessKind::SmallWorld => d,
        }
    }

    /// Power of the integrand in the limiting profile equation.
    pub fn profile_power(self, d: usize) -> usize {
        self.order(d) - 1
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub(crate) fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Process kind, long-range intensity and the rates derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessParams {
    kind: ProcessKind,
    rho: f64,
    manifold: ManifoldSpec,
    r: usize,
    lambda0: f64,
}

impl ProcessParams {
    pub fn new(kind: ProcessKind, rho: f64, manifold: ManifoldSpec) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidParams(format!("rho must be finite and nonnegative, got {rho}")));
        }
        let d = manifold.d();
        let r = kind.order(d);
        if r == 0 {
            return Err(Error::InvalidParams("small-world process needs d >= 1".into()));
        }
        let lambda0 = (factorial(d) * rho * manifold.v_k()).powf(1.0 / r as f64);
        Ok(ProcessParams { kind, rho, manifold, r, lambda0 })
    }

    /// Chooses `rho` so that the growth rate equals `lambda0`.
    pub fn with_lambda0(kind: ProcessKind, lambda0: f64, manifold: ManifoldSpec) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(Error::InvalidParams(format!("lambda0 must be positive, got {lambda0}")));
        }
        let r = kind.order(manifold.d());
        let rho = lambda0.powi(r as i32) / (factorial(manifold.d()) * manifold.v_k());
        Self::new(kind, rho, manifold)
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn d(&self) -> usize {
        self.manifold.d()
    }

    /// `d + 1` for gossip, `d` for small-world.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Dimensionless size `L lambda0^d / v(K)`.
    pub fn big_lambda(&self) -> f64 {
        self.manifold.volume() * self.lambda0.powi(self.d() as i32) / self.manifold.v_k()
    }

    /// Coefficient `c` with cumulative intensity `c * (M_r(t + dt) - M_r(t))`.
    ///
    /// It equals `lambda0^r / r!`, so `c * M_r` is also `H_r`.
    pub fn intensity_coef(&self) -> f64 {
        self.lambda0.powi(self.r as i32) / factorial(self.r)
    }

    /// Power `p` of a single island's candidate rate `~ (t - birth)^p`.
    pub fn rate_power(&self) -> usize {
        self.r - 1
    }
}
