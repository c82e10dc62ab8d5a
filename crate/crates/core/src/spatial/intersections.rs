//! Counting intersecting pairs of balls and their predicted means.

use serde::Serialize;

use crate::branching::binom;
use crate::geometry::{distance, ManifoldSpec, Point};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionStats {
    /// Intersecting pairs within the first set.
    pub n_self: u64,
    /// Intersecting pairs across the two sets, if a second set was given.
    pub n_cross: Option<u64>,
    /// Predicted mean of `n_self` for uniform centers.
    pub mu: f64,
    pub mu_cross: Option<f64>,
    /// Bound on the intersection probability of two balls of radius at most
    /// `1.5 log(Lambda) / lambda0`.
    pub p_plus: f64,
}

/// `sum_i a_i^l` for `l = 0..=d`.
fn power_sums(ages: &[f64], d: usize) -> Vec<f64> {
    (0..=d).map(|l| ages.iter().map(|a| a.powi(l as i32)).sum()).collect()
}

/// Predicted number of intersecting pairs among balls of the given ages with
/// independent uniform centers.
pub fn self_intersection_mean(spec: &ManifoldSpec, ages: &[f64]) -> f64 {
    let d = spec.d();
    let m = power_sums(ages, d);
    let s: f64 = (0..=d).map(|l| binom(d, l) * (m[l] * m[d - l] - m[d])).sum();
    0.5 * spec.v_k() * s / spec.volume()
}

/// Predicted number of intersecting pairs between two independent sets.
pub fn cross_intersection_mean(spec: &ManifoldSpec, ages: &[f64], other: &[f64]) -> f64 {
    let d = spec.d();
    let (m, mt) = (power_sums(ages, d), power_sums(other, d));
    let s: f64 = (0..=d).map(|l| binom(d, l) * m[l] * mt[d - l]).sum();
    spec.v_k() * s / spec.volume()
}

pub fn p_lambda_plus(big_lambda: f64, d: usize) -> f64 {
    (3.0 * big_lambda.ln()).powi(d as i32) / big_lambda
}

fn touches(spec: &ManifoldSpec, p: &Point, a: f64, q: &Point, b: f64) -> bool {
    distance(spec, p, q) <= spec.speed() * (a + b)
}

pub fn count_self_intersections(spec: &ManifoldSpec, centers: &[Point], ages: &[f64]) -> u64 {
    let mut n = 0;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if touches(spec, &centers[i], ages[i], &centers[j], ages[j]) {
                n += 1;
            }
        }
    }
    n
}

pub fn count_cross_intersections(
    spec: &ManifoldSpec,
    centers: &[Point],
    ages: &[f64],
    other_centers: &[Point],
    other_ages: &[f64],
) -> u64 {
    let mut n = 0;
    for (p, a) in centers.iter().zip(ages) {
        for (q, b) in other_centers.iter().zip(other_ages) {
            if touches(spec, p, *a, q, *b) {
                n += 1;
            }
        }
    }
    n
}

/// Balls given as `(centers, ages)`.
pub fn intersection_stats(
    spec: &ManifoldSpec,
    set: (&[Point], &[f64]),
    other: Option<(&[Point], &[f64])>,
    big_lambda: f64,
) -> IntersectionStats {
    let (centers, ages) = set;
    IntersectionStats {
        n_self: count_self_intersections(spec, centers, ages),
        n_cross: other.map(|(c, a)| count_cross_intersections(spec, centers, ages, c, a)),
        mu: self_intersection_mean(spec, ages),
        mu_cross: other.map(|(_, a)| cross_intersection_mean(spec, ages, a)),
        p_plus: p_lambda_plus(big_lambda, spec.d()),
    }
}
