//! Exact covered length for one-dimensional runs.

use crate::error::{Error, Result};
use crate::geometry::{Island, ManifoldSpec, Topology};

/// Length of the union of the arcs `[c - speed (t - b), c + speed (t - b)]`
/// over islands born by `t`, by sorting and merging intervals.
pub fn covered_length_merge(spec: &ManifoldSpec, islands: &[Island], t: f64) -> Result<f64> {
    if spec.d() != 1 {
        return Err(Error::ExactOnlyInOneDimension("exact covered length"));
    }
    let side = spec.sides()[0];
    let torus = spec.topology() == Topology::Torus;
    let mut iv: Vec<(f64, f64)> = Vec::with_capacity(islands.len() + 1);
    for isl in islands.iter().filter(|i| i.birth <= t) {
        let r = spec.speed() * (t - isl.birth);
        let c = isl.center.coords()[0];
        let (lo, hi) = (c - r, c + r);
        if torus {
            if hi - lo >= side {
                return Ok(side);
            }
            if lo < 0.0 {
                iv.push((lo + side, side));
                iv.push((0.0, hi));
            } else if hi > side {
                iv.push((lo, side));
                iv.push((0.0, hi - side));
            } else {
                iv.push((lo, hi));
            }
        } else {
            iv.push((lo.max(0.0), hi.min(side)));
        }
    }
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (lo, hi) in iv {
        match cur {
            Some((a, b)) if lo <= b => cur = Some((a, b.max(hi))),
            Some((a, b)) => {
                total += b - a;
                cur = Some((lo, hi));
            }
            None => cur = Some((lo, hi)),
        }
    }
    if let Some((a, b)) = cur {
        total += b - a;
    }
    Ok(total.min(side))
}

/// One gap between neighbouring centers, with the first-coverage times at
/// its two ends. Open ends of a rectangle have `right = +inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Gap {
    len: f64,
    left: f64,
    right: f64,
}

impl Gap {
    /// Covered length at time `u`.
    fn covered(&self, u: f64, speed: f64) -> f64 {
        let grow = speed * ((u - self.left).max(0.0) + (u - self.right).max(0.0));
        grow.min(self.len)
    }

    /// First time the whole gap is covered.
    fn full_time(&self, speed: f64) -> f64 {
        if self.right.is_infinite() {
            self.left + self.len / speed
        } else {
            0.5 * (self.len / speed + self.left + self.right)
        }
    }

    /// `int_0^u covered(v) dv`.
    fn integral(&self, u: f64, speed: f64) -> f64 {
        let (a, b) = if self.left <= self.right { (self.left, self.right) } else { (self.right, self.left) };
        let cap = self.full_time(speed).max(a);
        let x = u.min(cap);
        let ramp = |v: f64, s: f64| if v > s { 0.5 * (v - s) * (v - s) } else { 0.0 };
        speed * (ramp(x, a) + ramp(x, b)) + self.len * (u - cap).max(0.0)
    }
}

/// First-coverage profile of a one-dimensional run: between neighbouring
/// centers the first-coverage time is the lower envelope of two cones.
#[derive(Debug, Clone)]
pub struct Envelope1d {
    speed: f64,
    side: f64,
    gaps: Vec<Gap>,
}

impl Envelope1d {
    pub fn new(spec: &ManifoldSpec, islands: &[Island]) -> Result<Self> {
        if spec.d() != 1 {
            return Err(Error::ExactOnlyInOneDimension("coverage envelope"));
        }
        if islands.is_empty() {
            return Err(Error::InvalidParams("coverage envelope needs at least one island".into()));
        }
        let speed = spec.speed();
        let side = spec.sides()[0];
        let torus = spec.topology() == Topology::Torus;
        let mut pts: Vec<(f64, f64)> = islands.iter().map(|i| (i.center.coords()[0], i.birth)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let n = pts.len();
        let gap_len = |k: usize| -> f64 {
            if k + 1 < n {
                pts[k + 1].0 - pts[k].0
            } else {
                pts[0].0 + side - pts[n - 1].0
            }
        };
        let mut g: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let passes = if torus { 2 } else { 1 };
        for _ in 0..passes {
            for k in 0..n {
                if k + 1 < n || torus {
                    let next = (k + 1) % n;
                    g[next] = g[next].min(g[k] + gap_len(k) / speed);
                }
            }
        }
        for _ in 0..passes {
            for k in (0..n).rev() {
                if k + 1 < n || torus {
                    let next = (k + 1) % n;
                    g[k] = g[k].min(g[next] + gap_len(k) / speed);
                }
            }
        }
        let mut gaps = Vec::with_capacity(n + 1);
        for k in 0..n - 1 {
            gaps.push(Gap { len: gap_len(k), left: g[k], right: g[k + 1] });
        }
        if torus {
            gaps.push(Gap { len: gap_len(n - 1), left: g[n - 1], right: g[0] });
        } else {
            gaps.push(Gap { len: pts[0].0, left: g[0], right: f64::INFINITY });
            gaps.push(Gap { len: side - pts[n - 1].0, left: g[n - 1], right: f64::INFINITY });
        }
        Ok(Envelope1d { speed, side, gaps })
    }

    /// Covered length at time `u`, counting only islands born by `u`.
    pub fn covered_length(&self, u: f64) -> f64 {
        self.gaps.iter().map(|g| g.covered(u, self.speed)).sum::<f64>().min(self.side)
    }

    pub fn covered_fraction(&self, u: f64) -> f64 {
        self.covered_length(u) / self.side
    }

    /// `int_0^u covered_length(v) dv`.
    pub fn integrated_length(&self, u: f64) -> f64 {
        self.gaps.iter().map(|g| g.integral(u, self.speed)).sum()
    }

    /// Time at which every gap is full, given these islands only. Adding
    /// later-born islands can only lower it.
    pub fn coverage_time(&self) -> f64 {
        self.gaps.iter().map(|g| g.full_time(self.speed)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BallShape, Point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn isl(c: f64, b: f64) -> Island {
        Island { center: Point::new(&[c]), birth: b, id: 0 }
    }

    fn circle(l: f64) -> ManifoldSpec {
        ManifoldSpec::new(vec![l], Topology::Torus, BallShape::Round).unwrap()
    }

    #[test]
    fn two_disjoint_arcs() {
        let spec = circle(100.0);
        let islands = [isl(10.0, 0.0), isl(60.0, 1.0)];
        let got = covered_length_merge(&spec, &islands, 4.0).unwrap();
        assert!((got - (2.0 * 4.0 + 2.0 * 3.0)).abs() < 1e-12);
        let env = Envelope1d::new(&spec, &islands).unwrap();
        assert!((env.covered_length(4.0) - got).abs() < 1e-12);
        assert_eq!(covered_length_merge(&spec, &islands, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_ball_covers_circle_at_half_length() {
        let spec = circle(30.0);
        let env = Envelope1d::new(&spec, &[isl(7.0, 0.0)]).unwrap();
        assert!((env.coverage_time() - 15.0).abs() < 1e-12);
        assert!((env.integrated_length(15.0) - 225.0).abs() < 1e-9);
    }

    #[test]
    fn envelope_matches_merge_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for top in [Topology::Torus, Topology::Rectangle] {
            let spec = ManifoldSpec::new(vec![50.0], top, BallShape::Round).unwrap().with_speed(0.7).unwrap();
            for _ in 0..20 {
                let n = rng.random_range(1..40);
                let mut b = 0.0;
                let islands: Vec<Island> = (0..n)
                    .map(|_| {
                        b += rng.random::<f64>();
                        isl(rng.random::<f64>() * 50.0, b)
                    })
                    .collect();
                let env = Envelope1d::new(&spec, &islands).unwrap();
                let mut integral = 0.0;
                let du = 1e-3;
                let mut u = 0.0;
                while u < 60.0 {
                    let m = covered_length_merge(&spec, &islands, u).unwrap();
                    assert!((env.covered_length(u) - m).abs() < 1e-9, "{u}");
                    integral += du * covered_length_merge(&spec, &islands, u + 0.5 * du).unwrap();
                    u += du;
                }
                assert!((env.integrated_length(u) - integral).abs() < 1e-3 * integral.max(1.0));
                let tc = env.coverage_time();
                assert!((covered_length_merge(&spec, &islands, tc).unwrap() - 50.0).abs() < 1e-9);
                assert!(covered_length_merge(&spec, &islands, tc - 1e-6).unwrap() < 50.0);
            }
        }
    }

    #[test]
    fn exact_rejected_in_two_dimensions() {
        let spec = ManifoldSpec::new(vec![5.0, 5.0], Topology::Torus, BallShape::Round).unwrap();
        assert!(matches!(covered_length_merge(&spec, &[], 1.0), Err(Error::ExactOnlyInOneDimension(_))));
    }
}
