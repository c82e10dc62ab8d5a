use rand::Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::ensemble::{run_ensemble, run_rng, AUX_STREAM};
use crate::branching::{
    hitting_time, sample_w, w_statistics, GrowthConstants, MomentState, ProcessParams, DEFAULT_EVENT_CAP,
};
use crate::error::{Error, Result};
use crate::geometry::{sample_uniform, BallShape, ManifoldSpec, Point};
use crate::limitlaw::{solve_h_default, LimitLaw};
use crate::spatial::{
    count_cross_intersections, count_self_intersections, cross_intersection_mean, p_lambda_plus,
    self_intersection_mean, simulate, SimOptions, SpatialState,
};
use crate::stats::{binomial_se, bootstrap_se, mean_se, median, poisson_tv, quantile, variance};

/// One named pass/fail comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, passed: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, passed: value >= threshold }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// `log W~(s)` computed from the islands born by `s`.
pub fn u_hat(params: &ProcessParams, births: &[f64], s: f64) -> f64 {
    let early: Vec<f64> = births.iter().copied().filter(|b| *b <= s).collect();
    let state = MomentState::from_births(params.r(), &early, s);
    w_statistics(params, &state).w_tilde.ln()
}

fn covered_fractions(state: &SpatialState, times: &[f64]) -> Result<Vec<f64>> {
    if state.params().d() == 1 {
        let env = state.envelope()?;
        Ok(times.iter().map(|t| env.covered_fraction(*t)).collect())
    } else {
        Ok(times.iter().map(|t| state.covered_fraction_probes(*t).0).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRun {
    pub run: usize,
    pub u_hat: f64,
    pub sup_distance: f64,
    pub islands: usize,
    pub candidates: usize,
    /// Covered fraction at each grid point.
    #[serde(skip)]
    pub fractions: Vec<f64>,
    /// Profile prediction at each grid point.
    #[serde(skip)]
    pub predicted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathLlnReport {
    pub big_lambda: f64,
    pub runs: usize,
    pub profile_power: usize,
    pub profile_constant: f64,
    pub s_lambda: f64,
    pub x: Vec<f64>,
    pub median_distance: f64,
    pub mean_distance: f64,
    pub q90_distance: f64,
    pub exp_u_mean: f64,
    pub exp_u_se: f64,
    /// Across-run variance of the covered fraction at the grid point nearest 0.
    pub raw_variance: f64,
    /// Same, after subtracting each run's profile prediction.
    pub centered_variance: f64,
    pub variance_ratio: f64,
    pub per_run: Vec<PathRun>,
    pub checks: Vec<Check>,
}

/// Compares each run's covered fraction with the profile shifted by the
/// run's own early-phase estimate of `log W`.
pub fn run_path_lln(cfg: &ExperimentConfig) -> Result<PathLlnReport> {
    cfg.validate()?;
    let law = solve_h_default(cfg.profile_power())?;
    run_path_lln_with(cfg, &law)
}

/// As [`run_path_lln`] with an already solved profile.
pub fn run_path_lln_with(cfg: &ExperimentConfig, law: &LimitLaw) -> Result<PathLlnReport> {
    if law.m() != cfg.profile_power() {
        return Err(Error::InvalidConfig(format!(
            "profile power {} does not match the process (needs {})",
            law.m(),
            cfg.profile_power()
        )));
    }
    let params = cfg.params()?;
    let xs = cfg.x_grid.points();
    let times: Vec<f64> = xs.iter().map(|x| cfg.profile_time(*x)).collect();
    let log_c = cfg.profile_constant().ln();
    let s = cfg.s_lambda();
    let mut opts = SimOptions::new(cfg.profile_time(cfg.x_grid.max));
    opts.n_probes = if cfg.d == 1 { 0 } else { cfg.probes };
    let per_run = run_ensemble(cfg.seed, cfg.runs, 0, |run, rng| {
        let state = simulate(&params, &opts, rng)?;
        let u = u_hat(&params, &state.births(), s);
        let fractions = covered_fractions(&state, &times)?;
        let predicted: Vec<f64> = xs.iter().map(|x| law.eval_h(x + log_c + u)).collect();
        let sup_distance = fractions.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(PathRun {
            run,
            u_hat: u,
            sup_distance,
            islands: state.islands().len(),
            candidates: state.candidates(),
            fractions,
            predicted,
        })
    })?;
    let dists: Vec<f64> = per_run.iter().map(|r| r.sup_distance).collect();
    let exp_u: Vec<f64> = per_run.iter().map(|r| r.u_hat.exp()).collect();
    let (exp_u_mean, exp_u_se) = mean_se(&exp_u);
    let k0 = xs.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(k, _)| k).unwrap_or(0);
    let raw: Vec<f64> = per_run.iter().map(|r| r.fractions[k0]).collect();
    let centered: Vec<f64> = per_run.iter().map(|r| r.fractions[k0] - r.predicted[k0]).collect();
    let (raw_variance, centered_variance) = (variance(&raw), variance(&centered));
    let variance_ratio = raw_variance / centered_variance;
    let median_distance = median(&dists);
    let tol = &cfg.tolerances;
    let checks = vec![
        Check::at_most("median sup distance", median_distance, tol.path_median),
        Check::at_most("|mean exp(U) - 1| / se", (exp_u_mean - 1.0).abs() / exp_u_se, 3.0),
        Check::at_least("variance ratio at x = 0", variance_ratio, tol.variance_collapse),
    ];
    Ok(PathLlnReport {
        big_lambda: cfg.big_lambda,
        runs: cfg.runs,
        profile_power: cfg.profile_power(),
        profile_constant: cfg.profile_constant(),
        s_lambda: s,
        x: xs,
        median_distance,
        mean_distance: mean_se(&dists).0,
        q90_distance: quantile(&dists, 0.9),
        exp_u_mean,
        exp_u_se,
        raw_variance,
        centered_variance,
        variance_ratio,
        per_run,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub big_lambda: f64,
    pub pooled_probes: usize,
    pub w_pairs: usize,
    pub x: Vec<f64>,
    /// Pooled fraction of probes with `lambda0 tau - log Lambda > x`.
    pub survival: Vec<f64>,
    /// `E exp(-e^x C W1 W2)` over sampled pairs.
    pub oracle: Vec<f64>,
    /// `E exp(-e^x C W1 W2)` with exponential `W`, when the process has order one.
    pub closed_form: Option<Vec<f64>>,
    pub sup_gap: f64,
    pub checks: Vec<Check>,
}

/// `int_0^inf e^{-w} / (1 + a w) dw`, the mean of `exp(-a W1 W2)` for
/// independent unit exponentials.
pub fn exp_pair_laplace(a: f64) -> f64 {
    // Simpson's rule on [0, 50]; the tail beyond is below e^{-50}.
    let n = 100_000;
    let h = 50.0 / n as f64;
    let f = |w: f64| (-w).exp() / (1.0 + a * w);
    let mut s = f(0.0) + f(50.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Pools first-passage times over runs and probes and compares their
/// survival curve with the double-`W` oracle.
pub fn run_distance(cfg: &ExperimentConfig) -> Result<DistanceReport> {
    cfg.validate()?;
    if cfg.probes == 0 {
        return Err(Error::InvalidConfig("the first-passage experiment needs probes".into()));
    }
    let params = cfg.params()?;
    let xs = cfg.x_grid.points();
    let log_l = cfg.big_lambda.ln();
    let mut opts = SimOptions::new(cfg.profile_time(cfg.x_grid.max));
    opts.n_probes = cfg.probes;
    let taus = run_ensemble(cfg.seed, cfg.runs, 0, |_, rng| {
        let state = simulate(&params, &opts, rng)?;
        Ok(state.first_passage_times().iter().map(|t| cfg.lambda0 * t - log_l).collect::<Vec<f64>>())
    })?;
    let pooled: Vec<f64> = taus.into_iter().flatten().collect();
    let n = pooled.len() as f64;
    let survival: Vec<f64> = xs.iter().map(|x| pooled.iter().filter(|z| **z > *x).count() as f64 / n).collect();

    let products: Vec<f64> = run_ensemble(cfg.seed, cfg.w_pairs, AUX_STREAM, |_, rng| {
        let a = sample_w(&params, cfg.w_budget, DEFAULT_EVENT_CAP, rng)?;
        let b = sample_w(&params, cfg.w_budget, DEFAULT_EVENT_CAP, rng)?;
        Ok(a * b)
    })?;
    let c = cfg.profile_constant();
    let oracle: Vec<f64> = xs
        .iter()
        .map(|x| products.iter().map(|p| (-x.exp() * c * p).exp()).sum::<f64>() / products.len() as f64)
        .collect();
    let closed_form =
        (params.r() == 1).then(|| xs.iter().map(|x| exp_pair_laplace(x.exp() * c)).collect::<Vec<f64>>());
    let sup_gap = survival.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let checks = vec![Check::at_most("sup survival gap", sup_gap, cfg.tolerances.distance_gap)];
    Ok(DistanceReport {
        big_lambda: cfg.big_lambda,
        pooled_probes: pooled.len(),
        w_pairs: cfg.w_pairs,
        x: xs,
        survival,
        oracle,
        closed_form,
        sup_gap,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub big_lambda: f64,
    pub runs: usize,
    /// Probes per run in d >= 2; zero means exact detection.
    pub probes: usize,
    pub times: Vec<f64>,
    /// `lambda0 T - log Lambda` per run.
    pub shifted: Vec<f64>,
    /// Additive budget `2 (72 log Lambda / d!)^{1/d} + C (log Lambda)^{1/(d+1)}`.
    pub budget: f64,
    pub fraction_within_budget: f64,
    /// Fraction of runs with `lambda0 T / log Lambda` in `[1, 2]`.
    pub fraction_ratio_in_range: f64,
    pub median_shifted: f64,
    /// Covering-number constant of the space at the scale `1 / lambda0`.
    pub covering_constant: f64,
    pub checks: Vec<Check>,
}

/// Smallest `c0` with `n(s) <= c0 L / (v(K) s^d)`, where `n(s)` counts a
/// cover of the space by balls of radius `speed * s` built from a cube grid.
pub fn covering_constant(spec: &ManifoldSpec, s: f64) -> f64 {
    let d = spec.d();
    let half = match spec.ball_shape() {
        BallShape::Sup => spec.speed() * s,
        BallShape::Round => spec.speed() * s / (d as f64).sqrt(),
    };
    let n: f64 = spec.sides().iter().map(|l| (l / (2.0 * half)).ceil()).product();
    n * spec.v_k() * s.powi(d as i32) / spec.volume()
}

/// Ensemble of coverage times.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let params = cfg.params()?;
    let spec = params.manifold().clone();
    let mut opts = SimOptions::new(spec.radius_cap());
    opts.stop_at_coverage = true;
    opts.n_probes = if cfg.d == 1 { 0 } else { cfg.probes };
    let times = run_ensemble(cfg.seed, cfg.runs, 0, |_, rng| simulate(&params, &opts, rng)?.coverage_time())?;
    let log_l = cfg.big_lambda.ln();
    let d = cfg.d as f64;
    let d_fact: f64 = (1..=cfg.d).map(|k| k as f64).product();
    let budget = 2.0 * (72.0 * log_l / d_fact).powf(1.0 / d) + cfg.tolerances.coverage_slack * log_l.powf(1.0 / (d + 1.0));
    let shifted: Vec<f64> = times.iter().map(|t| cfg.lambda0 * t - log_l).collect();
    let n = times.len() as f64;
    let fraction_within_budget = shifted.iter().filter(|z| **z >= 0.0 && **z <= budget).count() as f64 / n;
    let fraction_ratio_in_range = shifted
        .iter()
        .map(|z| (z + log_l) / log_l)
        .filter(|r| (1.0..=2.0).contains(r))
        .count() as f64
        / n;
    let tol = &cfg.tolerances;
    let checks = vec![
        Check::at_least("fraction within additive budget", fraction_within_budget, tol.coverage_fraction),
        Check::at_least("fraction with ratio in [1, 2]", fraction_ratio_in_range, tol.coverage_fraction),
    ];
    Ok(CoverageReport {
        big_lambda: cfg.big_lambda,
        runs: cfg.runs,
        probes: opts.n_probes,
        median_shifted: median(&shifted),
        times,
        shifted,
        budget,
        fraction_within_budget,
        fraction_ratio_in_range,
        covering_constant: covering_constant(&spec, 1.0 / cfg.lambda0),
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub islands: usize,
    pub placements: usize,
    pub ages: Vec<f64>,
    pub other_ages: Vec<f64>,
    pub mu: f64,
    pub mean: f64,
    pub se: f64,
    pub dispersion: f64,
    pub d_tv: f64,
    pub d_tv_se: f64,
    pub p_plus: f64,
    /// `4 n p_plus`.
    pub tv_bound: f64,
    pub mu_cross: f64,
    pub mean_cross: f64,
    pub se_cross: f64,
    /// Frequency of each self-intersection count.
    pub histogram: Vec<usize>,
    pub checks: Vec<Check>,
}

/// Monte Carlo over uniform placements of two sets of balls with fixed
/// ages drawn once, uniform up to `1.5 log(Lambda) / lambda0`.
pub fn run_intersections(cfg: &ExperimentConfig) -> Result<IntersectionReport> {
    cfg.validate()?;
    let spec = cfg.manifold()?;
    let ic = &cfg.intersections;
    let n = ic.islands;
    let max_age = 1.5 * cfg.big_lambda.ln() / cfg.lambda0;
    let mut aux = run_rng(cfg.seed, AUX_STREAM - 1);
    let ages: Vec<f64> = (0..n).map(|_| aux.random::<f64>() * max_age).collect();
    let other_ages: Vec<f64> = (0..n).map(|_| aux.random::<f64>() * max_age).collect();
    let counts = run_ensemble(cfg.seed, ic.placements, 0, |_, rng| {
        let a: Vec<Point> = (0..n).map(|_| sample_uniform(&spec, rng)).collect();
        let b: Vec<Point> = (0..n).map(|_| sample_uniform(&spec, rng)).collect();
        Ok((
            count_self_intersections(&spec, &a, &ages),
            count_cross_intersections(&spec, &a, &ages, &b, &other_ages),
        ))
    })?;
    let selfs: Vec<f64> = counts.iter().map(|c| c.0 as f64).collect();
    let cross: Vec<f64> = counts.iter().map(|c| c.1 as f64).collect();
    let (mean, se) = mean_se(&selfs);
    let (mean_cross, se_cross) = mean_se(&cross);
    let mu = self_intersection_mean(&spec, &ages);
    let mu_cross = cross_intersection_mean(&spec, &ages, &other_ages);
    let as_counts = |xs: &[f64]| xs.iter().map(|x| *x as usize).collect::<Vec<usize>>();
    let d_tv = poisson_tv(&as_counts(&selfs), mu);
    let d_tv_se = bootstrap_se(&selfs, |xs| poisson_tv(&as_counts(xs), mu), ic.bootstrap, &mut aux);
    let p_plus = p_lambda_plus(cfg.big_lambda, cfg.d);
    let tv_bound = 4.0 * n as f64 * p_plus;
    let max = counts.iter().map(|c| c.0 as usize).max().unwrap_or(0);
    let mut histogram = vec![0; max + 1];
    for c in &counts {
        histogram[c.0 as usize] += 1;
    }
    let checks = vec![
        Check::at_most("|mean N - mu| / se", (mean - mu).abs() / se, 3.0),
        Check::at_most("d_TV to Poisson(mu)", d_tv, tv_bound + 3.0 * d_tv_se),
        Check::at_most("|mean N' - mu'| / se", (mean_cross - mu_cross).abs() / se_cross, 3.0),
    ];
    Ok(IntersectionReport {
        islands: n,
        placements: ic.placements,
        ages,
        other_ages,
        mu,
        mean,
        se,
        dispersion: variance(&selfs) / mean,
        d_tv,
        d_tv_se,
        p_plus,
        tv_bound,
        mu_cross,
        mean_cross,
        se_cross,
        histogram,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingTail {
    pub level: f64,
    pub r_value: f64,
    /// `c_c R / lambda0`.
    pub threshold: f64,
    pub probability: f64,
    pub se: f64,
    /// `2 K e^{-R}`.
    pub bound: f64,
}

/// Frequency of `tau_K >= c_c R / lambda0` for the branching process.
pub fn hitting_tail(params: &ProcessParams, level: f64, r_value: f64, runs: usize, seed: u64) -> Result<HittingTail> {
    let c_c = GrowthConstants::new(params.r()).c_c;
    let threshold = c_c * r_value / params.lambda0();
    let hits = run_ensemble(seed, runs, 0, |_, rng| Ok(hitting_time(params, level, DEFAULT_EVENT_CAP, rng)? >= threshold))?;
    let probability = hits.iter().filter(|h| **h).count() as f64 / runs as f64;
    Ok(HittingTail {
        level,
        r_value,
        threshold,
        probability,
        se: binomial_se(probability, runs),
        bound: 2.0 * level * (-r_value).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::ProcessKind;
    use crate::geometry::Topology;

    #[test]
    fn closed_form_pair_laplace() {
        assert!((exp_pair_laplace(0.0) - 1.0).abs() < 1e-12);
        // E 1/(1 + W) = e E_1(1).
        assert!((exp_pair_laplace(1.0) - 0.596_347_362_323_194).abs() < 1e-8);
        let mut rng = run_rng(3, 0);
        let a = 2.5;
        let n = 200_000;
        let mc: f64 = (0..n)
            .map(|_| {
                let w1: f64 = rng.sample(rand_distr::Exp1);
                let w2: f64 = rng.sample(rand_distr::Exp1);
                (-a * w1 * w2).exp()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mc - exp_pair_laplace(a)).abs() < 3e-3);
    }

    #[test]
    fn arcs_tile_the_circle() {
        let spec = ManifoldSpec::new(vec![100.0], Topology::Torus, BallShape::Round).unwrap();
        assert!((covering_constant(&spec, 5.0) - 1.0).abs() < 1e-12);
        assert!(covering_constant(&spec, 3.0) >= 1.0);
    }

    #[test]
    fn u_hat_of_a_lone_island() {
        let cfg = ExperimentConfig::default();
        let p = cfg.params().unwrap();
        let s = 1.5;
        // One island of age s: W~ = e^{-s} (1 + s) for r = 2, lambda0 = 1.
        assert!((u_hat(&p, &[0.0, 2.0], s) - ((1.0 + s).ln() - s)).abs() < 1e-12);
    }

    #[test]
    fn small_path_ensemble() {
        let cfg = ExperimentConfig { big_lambda: 300.0, runs: 8, ..Default::default() };
        let rep = run_path_lln(&cfg).unwrap();
        assert_eq!(rep.per_run.len(), 8);
        assert!(rep.per_run.iter().all(|r| r.sup_distance >= 0.0 && r.sup_distance <= 1.0));
        assert_eq!(rep.x.len(), 81);
        let again = run_path_lln(&cfg).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn survival_curves_have_the_right_ends() {
        let cfg = ExperimentConfig {
            big_lambda: 200.0,
            runs: 10,
            probes: 50,
            w_pairs: 500,
            w_budget: 100.0,
            x_grid: super::super::config::XGrid { min: -8.0, max: 5.0, step: 1.0 },
            ..Default::default()
        };
        let rep = run_distance(&cfg).unwrap();
        assert!(rep.survival[0] > 0.95 && rep.oracle[0] > 0.95);
        assert!(*rep.oracle.last().unwrap() < 0.05);
        assert!(rep.survival.windows(2).all(|w| w[0] >= w[1]));
        assert!(rep.closed_form.is_none());

        let sw = ExperimentConfig { kind: ProcessKind::SmallWorld, ..cfg };
        let rep = run_distance(&sw).unwrap();
        let cf = rep.closed_form.unwrap();
        for (a, b) in cf.iter().zip(&rep.oracle) {
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
    }

    #[test]
    fn coverage_after_high_fraction() {
        let cfg = ExperimentConfig { big_lambda: 500.0, runs: 5, ..Default::default() };
        let rep = run_coverage(&cfg).unwrap();
        let params = cfg.params().unwrap();
        let opts = SimOptions::new(params.manifold().radius_cap());
        for (i, t) in rep.times.iter().enumerate() {
            let state = simulate(&params, &SimOptions { stop_at_coverage: true, ..opts.clone() }, &mut run_rng(cfg.seed, i as u64)).unwrap();
            assert_eq!(state.coverage_time().unwrap(), *t);
            let env = state.envelope().unwrap();
            let mut u = 0.0;
            while env.covered_fraction(u) < 0.999 {
                u += 0.01;
            }
            assert!(*t >= u - 0.01);
        }
    }

    #[test]
    fn intersection_report_is_consistent() {
        let cfg = ExperimentConfig {
            intersections: super::super::config::IntersectionConfig { islands: 10, placements: 2000, bootstrap: 50 },
            ..Default::default()
        };
        let rep = run_intersections(&cfg).unwrap();
        assert_eq!(rep.histogram.iter().sum::<usize>(), 2000);
        assert!(rep.ages.iter().all(|a| *a <= 1.5 * 1e4f64.ln()));
        assert!((rep.tv_bound - 40.0 * rep.p_plus).abs() < 1e-15);
    }
}
