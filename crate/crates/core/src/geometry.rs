//! The space `C`: a flat torus or an axis-aligned rectangle, with metric
//! balls `K(P, s)` that grow at a constant speed.
//!
//! A ball parameter `s` is a *time*: `K(P, s)` is the metric ball of radius
//! `speed * s` around `P`, so that `|K(P, s)| = s^d v(K)` holds exactly on a
//! flat torus as long as `2 * speed * s <= min(sides)`.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Rectangle,
}

/// Shape of the neighbourhoods `K(P, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallShape {
    /// Ball of the intrinsic (Euclidean) metric.
    Round,
    /// Axis-aligned cube, i.e. a ball of the max metric.
    Sup,
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Immutable description of `C` and its neighbourhood shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifoldConfig", into = "ManifoldConfig")]
pub struct ManifoldSpec {
    d: usize,
    sides: Vec<f64>,
    topology: Topology,
    ball_shape: BallShape,
    speed: f64,
    v_k: f64,
}

/// Serialized form of [`ManifoldSpec`]; validated on conversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldConfig {
    pub d: usize,
    pub sides: Vec<f64>,
    pub topology: Topology,
    pub ball_shape: BallShape,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub speed: f64,
    #[serde(default, rename = "vK", skip_serializing_if = "Option::is_none")]
    pub v_k: Option<f64>,
    /// Curvature correction constant; only the flat case `0` is accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_g: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

impl TryFrom<ManifoldConfig> for ManifoldSpec {
    type Error = Error;

    fn try_from(c: ManifoldConfig) -> Result<Self> {
        if let Some(cg) = c.c_g {
            if cg != 0.0 {
                return Err(Error::InvalidManifold(format!(
                    "curved geometries are not supported (c_g = {cg})"
                )));
            }
        }
        let mut spec = ManifoldSpec::new(c.sides, c.topology, c.ball_shape)?.with_speed(c.speed)?;
        if spec.d != c.d {
            return Err(Error::InvalidManifold(format!(
                "d = {} but {} side lengths given",
                c.d, spec.d
            )));
        }
        if let Some(v) = c.v_k {
            spec = spec.with_vk_override(v)?;
        }
        Ok(spec)
    }
}

impl From<ManifoldSpec> for ManifoldConfig {
    fn from(s: ManifoldSpec) -> Self {
        ManifoldConfig {
            d: s.d,
            sides: s.sides,
            topology: s.topology,
            ball_shape: s.ball_shape,
            speed: s.speed,
            v_k: None,
            c_g: None,
        }
    }
}

impl ManifoldSpec {
    /// Builds a spec with unit speed. The dimension is the number of sides.
    pub fn new(sides: Vec<f64>, topology: Topology, ball_shape: BallShape) -> Result<Self> {
        let d = sides.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidManifold(format!(
                "dimension must be in 1..={MAX_DIM}, got {d}"
            )));
        }
        if let Some(bad) = sides.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidManifold(format!("side length {bad} is not positive")));
        }
        let mut spec = ManifoldSpec { d, sides, topology, ball_shape, speed: 1.0, v_k: 0.0 };
        spec.v_k = spec.shape_constant();
        Ok(spec)
    }

    /// Flat torus with `d` equal sides of total volume `volume`.
    pub fn cube_torus(d: usize, volume: f64, ball_shape: BallShape) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidManifold("dimension must be positive".into()));
        }
        let side = volume.powf(1.0 / d as f64);
        Self::new(vec![side; d], Topology::Torus, ball_shape)
    }

    /// Scales the metric radius of `K(P, s)` to `speed * s`.
    pub fn with_speed(mut self, speed: f64) -> Result<Self> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(Error::InvalidManifold(format!("speed {speed} is not positive")));
        }
        self.speed = speed;
        self.v_k = self.shape_constant();
        Ok(self)
    }

    /// Accepts a user supplied `v(K)` only if it agrees with the shape.
    pub fn with_vk_override(self, v_k: f64) -> Result<Self> {
        if (v_k - self.v_k).abs() > 1e-12 * self.v_k.max(1.0) {
            return Err(Error::InvalidManifold(format!(
                "v(K) = {v_k} does not match the {:?} shape constant {}",
                self.ball_shape, self.v_k
            )));
        }
        Ok(self)
    }

    fn shape_constant(&self) -> f64 {
        let unit = match self.ball_shape {
            BallShape::Round => unit_ball_volume(self.d),
            BallShape::Sup => 2f64.powi(self.d as i32),
        };
        unit * self.speed.powi(self.d as i32)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn ball_shape(&self) -> BallShape {
        self.ball_shape
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// The shape constant `v(K)`, with `|K(P, s)| = s^d v(K)`.
    pub fn v_k(&self) -> f64 {
        self.v_k
    }

    /// Volume `L = |C|`.
    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn min_side(&self) -> f64 {
        self.sides.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_torus(&self) -> bool {
        self.topology == Topology::Torus
    }

    /// Largest ball parameter `s` for which volumes stay exact on a torus.
    pub fn radius_cap(&self) -> f64 {
        match self.topology {
            Topology::Torus => self.min_side() / (2.0 * self.speed),
            Topology::Rectangle => f64::INFINITY,
        }
    }

    pub fn origin(&self) -> Point {
        Point::zero(self.d)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.coords().iter().zip(&self.sides).all(|(x, s)| *x >= 0.0 && *x < *s)
    }

    /// Reduces a point onto the torus; rectangles are left untouched.
    pub fn wrap(&self, p: &mut Point) {
        if self.topology == Topology::Torus {
            for (x, s) in p.x.iter_mut().zip(&self.sides) {
                *x = wrap_coord(*x, *s);
            }
        }
    }

    /// Signed per-axis offset from `p` to `q`, using the shortest way round on a torus.
    #[inline]
    pub(crate) fn axis_delta(&self, i: usize, p: f64, q: f64) -> f64 {
        let mut dx = (q - p).abs();
        if self.topology == Topology::Torus {
            let s = self.sides[i];
            dx %= s;
            if dx > 0.5 * s {
                dx = s - dx;
            }
        }
        dx
    }

    /// Combines per-axis absolute offsets according to the ball shape.
    #[inline]
    pub(crate) fn norm_of(&self, deltas: impl Iterator<Item = f64>) -> f64 {
        match self.ball_shape {
            BallShape::Round => deltas.map(|x| x * x).sum::<f64>().sqrt(),
            BallShape::Sup => deltas.fold(0.0, f64::max),
        }
    }
}

#[inline]
fn wrap_coord(x: f64, side: f64) -> f64 {
    let mut y = x.rem_euclid(side);
    if y >= side {
        y = 0.0;
    }
    y
}

/// A point of `C` (or, transiently, just outside a rectangle).
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    x: [f64; MAX_DIM],
    d: u8,
}

impl Point {
    pub fn zero(d: usize) -> Self {
        assert!(d <= MAX_DIM);
        Point { x: [0.0; MAX_DIM], d: d as u8 }
    }

    pub fn new(coords: &[f64]) -> Self {
        let mut p = Point::zero(coords.len());
        p.x[..coords.len()].copy_from_slice(coords);
        p
    }

    pub fn coords(&self) -> &[f64] {
        &self.x[..self.d as usize]
    }

    pub fn dim(&self) -> usize {
        self.d as usize
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.is_empty() || v.len() > MAX_DIM {
            return Err(serde::de::Error::custom("point dimension out of range"));
        }
        Ok(Point::new(&v))
    }
}

/// A growing ball `K(center, t - birth)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Island {
    pub center: Point,
    pub birth: f64,
    pub id: u32,
}

impl Island {
    /// Ball parameter at time `t`, i.e. `(t - birth)+`.
    pub fn radius_at(&self, t: f64) -> f64 {
        (t - self.birth).max(0.0)
    }
}

pub fn sample_uniform<R: Rng + ?Sized>(spec: &ManifoldSpec, rng: &mut R) -> Point {
    let mut p = Point::zero(spec.d);
    for (x, s) in p.x.iter_mut().zip(&spec.sides) {
        *x = wrap_coord(rng.random::<f64>() * s, *s);
    }
    p
}

/// Metric distance; wrapped per axis on a torus.
pub fn distance(spec: &ManifoldSpec, p: &Point, q: &Point) -> f64 {
    spec.norm_of((0..spec.d).map(|i| spec.axis_delta(i, p.x[i], q.x[i])))
}

/// Time a front moving at the ball speed needs to get from `p` to `q`.
#[inline]
pub fn reach_time(spec: &ManifoldSpec, p: &Point, q: &Point) -> f64 {
    distance(spec, p, q) / spec.speed
}

/// `|K(P, s)| = s^d v(K)`; unclipped for rectangles.
pub fn ball_volume(spec: &ManifoldSpec, s: f64) -> Result<f64> {
    if s > spec.radius_cap() * (1.0 + 1e-12) {
        return Err(Error::RadiusTooLarge { radius: s * spec.speed, min_side: spec.min_side() });
    }
    Ok(s.max(0.0).powi(spec.d as i32) * spec.v_k)
}

/// Uniform point of `K(center, s)` w.r.t. volume.
pub fn sample_in_ball<R: Rng + ?Sized>(spec: &ManifoldSpec, center: &Point, s: f64, rng: &mut R) -> Point {
    let r = s * spec.speed;
    let d = spec.d;
    let mut p = *center;
    match spec.ball_shape {
        BallShape::Round => {
            let dir = gaussian_direction(d, rng);
            let rad = r * rng.random::<f64>().powf(1.0 / d as f64);
            for i in 0..d {
                p.x[i] += rad * dir[i];
            }
        }
        BallShape::Sup => {
            for i in 0..d {
                p.x[i] += r * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
    }
    spec.wrap(&mut p);
    p
}

/// Uniform point of the boundary of `K(center, s)` w.r.t. surface measure.
pub fn sample_on_sphere<R: Rng + ?Sized>(spec: &ManifoldSpec, center: &Point, s: f64, rng: &mut R) -> Point {
    let r = s * spec.speed;
    let d = spec.d;
    let mut p = *center;
    match spec.ball_shape {
        BallShape::Round => {
            let dir = gaussian_direction(d, rng);
            for i in 0..d {
                p.x[i] += r * dir[i];
            }
        }
        BallShape::Sup => {
            // The 2d faces have equal area.
            let face = rng.random_range(0..2 * d);
            for i in 0..d {
                p.x[i] += if i == face / 2 {
                    if face % 2 == 0 { r } else { -r }
                } else {
                    r * (2.0 * rng.random::<f64>() - 1.0)
                };
            }
        }
    }
    spec.wrap(&mut p);
    p
}

fn gaussian_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> [f64; MAX_DIM] {
    let mut v = [0.0; MAX_DIM];
    if d == 1 {
        v[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return v;
    }
    loop {
        let mut n2 = 0.0;
        for x in v.iter_mut().take(d) {
            *x = rng.sample(StandardNormal);
            n2 += *x * *x;
        }
        if n2 > 1e-300 {
            let inv = n2.sqrt().recip();
            for x in v.iter_mut().take(d) {
                *x *= inv;
            }
            return v;
        }
    }
}

/// Whether `island` has reached `q` by time `t`.
pub fn covers(spec: &ManifoldSpec, island: &Island, q: &Point, t: f64) -> bool {
    t >= island.birth && reach_time(spec, &island.center, q) <= t - island.birth
}

/// `|C_delta| / L`, the fraction of points whose `K(P, delta)` meets the boundary.
pub fn boundary_fraction(spec: &ManifoldSpec, delta: f64) -> f64 {
    match spec.topology {
        Topology::Torus => 0.0,
        Topology::Rectangle => {
            let r = delta.max(0.0) * spec.speed;
            let interior: f64 = spec.sides.iter().map(|s| ((s - 2.0 * r) / s).max(0.0)).product();
            1.0 - interior
        }
    }
}
