//! Small statistical toolkit used by tests and experiments.

use rand::Rng;

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let (_, se) = mean_se(xs);
    se * se * xs.len() as f64
}

/// Standard error of a proportion `p` estimated from `n` trials.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolated sample quantile.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        EmpiricalCdf { sorted: samples }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|s| *s <= x) as f64 / self.sorted.len() as f64
    }

    /// `sup_x |F_n(x) - F(x)|` for a continuous `F`.
    pub fn sup_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = cdf(*x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov survival function `P[K > lambda]`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let rn = n_eff.sqrt();
    kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let ecdf = EmpiricalCdf::new(samples.to_vec());
    let d = ecdf.sup_distance(cdf);
    KsResult { statistic: d, p_value: ks_p(d, samples.len() as f64) }
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    KsResult { statistic: d, p_value: ks_p(d, n * m / (n + m)) }
}

/// Poisson probability mass function, computed in log space.
pub fn poisson_pmf(k: usize, mu: f64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let lg: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (k as f64 * mu.ln() - mu - lg).exp()
}

/// Total variation distance between the empirical law of `counts` and
/// Poisson(`mu`), including the Poisson mass above the largest observation.
pub fn poisson_tv(counts: &[usize], mu: f64) -> f64 {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; max + 1];
    for &c in counts {
        hist[c] += 1;
    }
    let mut tv = 0.0;
    let mut mass = 0.0;
    for (k, h) in hist.iter().enumerate() {
        let p = poisson_pmf(k, mu);
        mass += p;
        tv += (*h as f64 / n - p).abs();
    }
    tv += (1.0 - mass).max(0.0);
    0.5 * tv
}

/// Bootstrap standard error of `stat` with `resamples` resamples.
pub fn bootstrap_se<R: Rng + ?Sized>(xs: &[f64], stat: impl Fn(&[f64]) -> f64, resamples: usize, rng: &mut R) -> f64 {
    if xs.is_empty() || resamples < 2 {
        return f64::NAN;
    }
    let mut buf = vec![0.0; xs.len()];
    let reps: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.random_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    let (_, se) = mean_se(&reps);
    se * (resamples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1};

    #[test]
    fn mean_se_basic() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn kolmogorov_known_values() {
        // Tabulated critical values of the limiting distribution.
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_true_law_and_rejects_wrong_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..5000).map(|_| Exp1.sample(&mut rng)).collect();
        assert!(ks_one_sample(&xs, |x| 1.0 - (-x).exp()).p_value > 0.01);
        assert!(ks_one_sample(&xs, |x| 1.0 - (-1.2 * x).exp()).p_value < 0.01);
        let ys: Vec<f64> = (0..5000).map(|_| Exp1.sample(&mut rng)).collect();
        assert!(ks_two_sample(&xs, &ys).p_value > 0.01);
        let zs: Vec<f64> = ys.iter().map(|y| y * 1.2).collect();
        assert!(ks_two_sample(&xs, &zs).p_value < 0.01);
    }

    #[test]
    fn ecdf_eval() {
        let e = EmpiricalCdf::new(vec![3.0, 1.0, 2.0, 2.0]);
        assert_eq!(e.eval(0.0), 0.0);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(5.0), 1.0);
    }

    #[test]
    fn poisson_tv_of_poisson_sample_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pois = rand_distr::Poisson::new(1.5).unwrap();
        let counts: Vec<usize> = (0..20000).map(|_| pois.sample(&mut rng) as usize).collect();
        assert!(poisson_tv(&counts, 1.5) < 0.02);
        assert!(poisson_tv(&counts, 3.0) > 0.2);
        let pmf_sum: f64 = (0..60).map(|k| poisson_pmf(k, 4.0)).sum();
        assert!((pmf_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_se_of_mean_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..2000).map(|_| Exp1.sample(&mut rng)).collect();
        let (_, se) = mean_se(&xs);
        let b = bootstrap_se(&xs, |v| v.iter().sum::<f64>() / v.len() as f64, 1000, &mut rng);
        assert!((b / se - 1.0).abs() < 0.1);
    }
}
