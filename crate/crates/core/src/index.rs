//! Spatial index for growing balls.
//!
//! Entries are `(center, birth)` pairs inserted in nondecreasing birth order.
//! A pyramid of power-of-two grids remembers, for every cell, the first entry
//! that landed in it. Since births never decrease, that entry also has the
//! earliest birth in the cell, so `birth + lower_bound_distance / speed` is a
//! valid lower bound for the arrival time of any ball stored below the cell.

use crate::geometry::{distance, ManifoldSpec, Point};

const EMPTY: u32 = u32::MAX;
/// Upper bound on `d * finest_level`, i.e. about 2^20 leaf cells.
const MAX_LEAF_BITS: u32 = 20;

#[derive(Debug, Clone)]
pub struct ConeIndex {
    spec: ManifoldSpec,
    depth: u32,
    /// `first[l][cell]` is the index of the first entry inside `cell` at level `l`.
    first: Vec<Vec<u32>>,
    leaves: Vec<Vec<u32>>,
    centers: Vec<Point>,
    births: Vec<f64>,
    keys: Vec<u32>,
    /// Reused DFS stack: (level, cell, lower bound on arrival time).
    stack: Vec<(u32, u32, f64)>,
}

impl ConeIndex {
    /// `cell_hint` is the preferred side length of the finest cells.
    pub fn new(spec: &ManifoldSpec, cell_hint: f64) -> Self {
        let d = spec.d() as u32;
        let max_side = spec.sides().iter().cloned().fold(0.0, f64::max);
        let want = if cell_hint > 0.0 { (max_side / cell_hint).log2().ceil().max(0.0) as u32 } else { 0 };
        let depth = want.min(MAX_LEAF_BITS / d);
        let first = (0..=depth).map(|l| vec![EMPTY; 1usize << (l * d)]).collect();
        let leaves = vec![Vec::new(); 1usize << (depth * d)];
        ConeIndex {
            spec: spec.clone(),
            depth,
            first,
            leaves,
            centers: Vec::new(),
            births: Vec::new(),
            keys: Vec::new(),
            stack: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.births.len()
    }

    pub fn is_empty(&self) -> bool {
        self.births.is_empty()
    }

    /// Adds a ball born at `birth`; births must be nondecreasing.
    pub fn insert(&mut self, center: Point, birth: f64, key: u32) {
        debug_assert!(self.births.last().is_none_or(|b| *b <= birth));
        let idx = self.births.len() as u32;
        self.centers.push(center);
        self.births.push(birth);
        self.keys.push(key);
        let d = self.spec.d();
        let mut coords = [0u32; crate::geometry::MAX_DIM];
        let n = 1u32 << self.depth;
        for (i, c) in coords.iter_mut().enumerate().take(d) {
            let side = self.spec.sides()[i];
            let k = (center.coords()[i] / side * n as f64).floor();
            *c = (k.max(0.0) as u32).min(n - 1);
        }
        for l in (0..=self.depth).rev() {
            let shift = self.depth - l;
            let mut cell = 0usize;
            for i in (0..d).rev() {
                cell = (cell << l) | (coords[i] >> shift) as usize;
            }
            if l == self.depth {
                self.leaves[cell].push(idx);
            }
            let slot = &mut self.first[l as usize][cell];
            if *slot != EMPTY {
                // Coarser cells already have an earlier entry.
                break;
            }
            *slot = idx;
        }
    }

    fn arrival(&self, idx: u32, q: &Point) -> f64 {
        let i = idx as usize;
        self.births[i] + distance(&self.spec, &self.centers[i], q) / self.spec.speed()
    }

    /// Lower bound on the distance from `q` to a cell.
    fn cell_gap(&self, level: u32, cell: u32, q: &Point) -> f64 {
        let d = self.spec.d();
        let n = 1u32 << level;
        let mask = n - 1;
        let mut c = cell;
        let gaps = (0..d).map(|i| {
            let k = c & mask;
            c >>= level;
            let w = self.spec.sides()[i] / n as f64;
            let mid = (k as f64 + 0.5) * w;
            (self.spec.axis_delta(i, q.coords()[i], mid) - 0.5 * w).max(0.0)
        });
        self.spec.norm_of(gaps)
    }

    fn push_children(&mut self, level: u32, cell: u32, q: &Point, born_before: f64) {
        let d = self.spec.d();
        let child_level = level + 1;
        let speed = self.spec.speed();
        let base = self.stack.len();
        for bits in 0..(1u32 << d) {
            let mut child = 0u32;
            let mut c = cell;
            for i in 0..d {
                let k = ((c & ((1 << level) - 1)) << 1) | ((bits >> i) & 1);
                c >>= level;
                child |= k << (i as u32 * child_level);
            }
            let f = self.first[child_level as usize][child as usize];
            if f == EMPTY || self.births[f as usize] >= born_before {
                continue;
            }
            let lb = self.births[f as usize] + self.cell_gap(child_level, child, q) / speed;
            self.stack.push((child_level, child, lb));
        }
        // Pop order: smallest bound first.
        self.stack[base..].sort_unstable_by(|a, b| b.2.total_cmp(&a.2));
    }

    /// Whether some entry born strictly before `born_before`, other than
    /// `exclude`, has reached `q` by time `t` (strictly before `t` if `strict`).
    pub fn reaches(&mut self, q: &Point, t: f64, strict: bool, born_before: f64, exclude: Option<u32>) -> bool {
        let hit = |a: f64| if strict { a < t } else { a <= t };
        if self.first[0][0] == EMPTY {
            return false;
        }
        self.stack.clear();
        self.stack.push((0, 0, f64::NEG_INFINITY));
        while let Some((level, cell, lb)) = self.stack.pop() {
            if !hit(lb) {
                continue;
            }
            if level == self.depth {
                for &idx in &self.leaves[cell as usize] {
                    let i = idx as usize;
                    if self.births[i] >= born_before || Some(self.keys[i]) == exclude {
                        continue;
                    }
                    if hit(self.arrival(idx, q)) {
                        self.stack.clear();
                        return true;
                    }
                }
            } else {
                self.push_children(level, cell, q, born_before);
            }
        }
        false
    }

    /// Earliest arrival time at `q` over all entries, with the key of the
    /// entry achieving it.
    pub fn first_arrival(&mut self, q: &Point) -> (f64, Option<u32>) {
        let mut best = f64::INFINITY;
        let mut who = None;
        if self.first[0][0] == EMPTY {
            return (best, who);
        }
        self.stack.clear();
        self.stack.push((0, 0, f64::NEG_INFINITY));
        while let Some((level, cell, lb)) = self.stack.pop() {
            if lb >= best {
                continue;
            }
            if level == self.depth {
                for &idx in &self.leaves[cell as usize] {
                    let a = self.arrival(idx, q);
                    if a < best {
                        best = a;
                        who = Some(self.keys[idx as usize]);
                    }
                }
            } else {
                self.push_children(level, cell, q, f64::INFINITY);
            }
        }
        (best, who)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_uniform, BallShape, Topology};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(spec: &ManifoldSpec, pts: &[(Point, f64)], q: &Point) -> f64 {
        pts.iter()
            .map(|(c, b)| b + distance(spec, c, q) / spec.speed())
            .fold(f64::INFINITY, f64::min)
    }

    fn check(spec: ManifoldSpec, hint: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = ConeIndex::new(&spec, hint);
        let mut pts = Vec::new();
        let mut t = 0.0;
        for k in 0..400u32 {
            t += rng.random::<f64>() * 0.05;
            let c = sample_uniform(&spec, &mut rng);
            idx.insert(c, t, k);
            pts.push((c, t));
        }
        for _ in 0..300 {
            let q = sample_uniform(&spec, &mut rng);
            let (a, who) = idx.first_arrival(&q);
            let b = brute(&spec, &pts, &q);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            let w = who.unwrap() as usize;
            assert!((pts[w].1 + distance(&spec, &pts[w].0, &q) / spec.speed() - b).abs() < 1e-12);
            let tq = rng.random::<f64>() * 30.0;
            let cut = rng.random::<f64>() * t;
            let expect = pts.iter().any(|(c, bth)| *bth < cut && bth + distance(&spec, c, &q) / spec.speed() <= tq);
            assert_eq!(idx.reaches(&q, tq, false, cut, None), expect);
        }
    }

    #[test]
    fn matches_brute_force() {
        for (d, shape) in [(1, BallShape::Round), (2, BallShape::Round), (2, BallShape::Sup), (3, BallShape::Round)] {
            for top in [Topology::Torus, Topology::Rectangle] {
                let spec = ManifoldSpec::new(vec![40.0; d], top, shape).unwrap().with_speed(1.7).unwrap();
                check(spec.clone(), 1.0, 1);
                check(spec, 50.0, 2);
            }
        }
        let skew = ManifoldSpec::new(vec![10.0, 60.0], Topology::Torus, BallShape::Round).unwrap();
        check(skew, 0.5, 3);
    }

    #[test]
    fn exclusion_and_strictness() {
        let spec = ManifoldSpec::new(vec![10.0], Topology::Torus, BallShape::Round).unwrap();
        let mut idx = ConeIndex::new(&spec, 1.0);
        idx.insert(Point::new(&[1.0]), 0.0, 7);
        let q = Point::new(&[3.0]);
        assert!(idx.reaches(&q, 2.0, false, f64::INFINITY, None));
        assert!(!idx.reaches(&q, 2.0, true, f64::INFINITY, None));
        assert!(!idx.reaches(&q, 5.0, false, f64::INFINITY, Some(7)));
        assert!(!idx.reaches(&q, 5.0, false, 0.0, None));
        assert_eq!(ConeIndex::new(&spec, 1.0).first_arrival(&q), (f64::INFINITY, None));
    }
}
