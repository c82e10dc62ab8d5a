//! Command line front end: single runs, the profile solver and the
//! ensemble experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gossip_spread::branching::ProcessKind;
use gossip_spread::harness::{
    all_passed, cd_preset, run_coverage, run_distance, run_intersections, run_path_lln, run_rng, u_hat, write_json,
    Check, ExperimentConfig, WriteOutputs,
};
use gossip_spread::limitlaw::{solve_h, GridSpec, DEFAULT_MAX_ITER};
use gossip_spread::spatial::{simulate, SimOptions};
use gossip_spread::Result;

#[derive(Parser, Debug)]
#[command(name = "gossip-spread", version, about = "Gossip and small-world spread simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    probes: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_kind)]
    kind: Option<ProcessKind>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long = "lambda", global = true)]
    big_lambda: Option<f64>,
    /// Exit with a nonzero status if any check fails.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the spread process once and export its event log and probes.
    Simulate {
        /// End time; defaults to the end of the profile window.
        #[arg(long)]
        horizon: Option<f64>,
        /// Stop as soon as the space is covered.
        #[arg(long)]
        until_covered: bool,
    },
    /// Solve for the coverage profile h_m on a grid.
    SolveH {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = -16.0, allow_hyphen_values = true)]
        s_min: f64,
        #[arg(long, default_value_t = 12.0)]
        s_max: f64,
        #[arg(long, default_value_t = 0.005)]
        ds: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Covered fraction against the shifted profile, run by run.
    PathLln,
    /// Pooled first-passage times against the double-W oracle.
    Distance,
    /// Ensemble of coverage times.
    Coverage,
    /// Intersection counts against their Poisson approximation.
    Intersections,
    /// Print the configuration of the N x N torus preset.
    CdPreset {
        #[arg(long)]
        n: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
    },
}

fn parse_kind(s: &str) -> std::result::Result<ProcessKind, String> {
    match s {
        "gossip" => Ok(ProcessKind::Gossip),
        "small-world" => Ok(ProcessKind::SmallWorld),
        _ => Err(format!("unknown process kind {s:?}; expected gossip or small-world")),
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.runs {
        cfg.runs = v;
    }
    if let Some(v) = c.probes {
        cfg.probes = v;
    }
    if let Some(v) = c.kind {
        cfg.kind = v;
    }
    if let Some(v) = c.dim {
        cfg.d = v;
    }
    if let Some(v) = c.big_lambda {
        cfg.big_lambda = v;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<R: WriteOutputs + serde::Serialize>(cfg: &ExperimentConfig, report: &R, checks: &[Check]) -> Result<bool> {
    if let Some(dir) = &cfg.out {
        report.write_outputs(dir)?;
        std::fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    }
    print_checks(checks);
    Ok(all_passed(checks))
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("{mark} {}: {} (threshold {})", c.name, c.value, c.threshold);
    }
}

fn run_simulate(cfg: &ExperimentConfig, horizon: Option<f64>, until_covered: bool) -> Result<bool> {
    let params = cfg.params()?;
    let mut opts = SimOptions::new(horizon.unwrap_or_else(|| cfg.profile_time(cfg.x_grid.max)));
    if until_covered {
        opts.horizon = params.manifold().radius_cap();
        opts.stop_at_coverage = true;
    }
    opts.n_probes = cfg.probes;
    opts.record_events = true;
    let state = simulate(&params, &opts, &mut run_rng(cfg.seed, 0))?;
    let summary = serde_json::json!({
        "t": state.t(),
        "islands": state.islands().len(),
        "candidates": state.candidates(),
        "accepted": state.accepted_times().len(),
        "coverage_time": state.coverage_time().ok(),
        "u_hat": u_hat(&params, &state.births(), cfg.s_lambda()),
        "lambda0": params.lambda0(),
        "rho": params.rho(),
        "volume": params.manifold().volume(),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serialises"));
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
        state.write_event_log(std::io::BufWriter::new(std::fs::File::create(dir.join("events.jsonl"))?))?;
        state.write_probe_csv(std::io::BufWriter::new(std::fs::File::create(dir.join("probes.csv"))?))?;
        write_json(dir, "summary.json", &summary)?;
    }
    Ok(true)
}

fn run_solve_h(out: Option<&Path>, m: usize, grid: GridSpec, tol: f64) -> Result<bool> {
    let law = solve_h(m, grid, tol, DEFAULT_MAX_ITER)?;
    let checks = vec![
        Check::at_most("fixed-point residual", law.residual(), 10.0 * tol),
        Check::at_most("|h(s + 1) / h(s) - e| at the left edge", (law.left_edge_ratio() - std::f64::consts::E).abs(), 1e-3),
    ];
    println!("m = {m}: {} iterations, last change {:e}", law.iterations(), law.last_change());
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        law.write_csv(std::io::BufWriter::new(std::fs::File::create(dir.join(format!("h_{m}.csv")))?))?;
    }
    print_checks(&checks);
    Ok(all_passed(&checks))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SolveH { m, s_min, s_max, ds, tol } => {
            run_solve_h(cli.common.out.as_deref(), m, GridSpec { s_min, s_max, ds }, tol)
        }
        Command::CdPreset { n, alpha } => {
            let mut cfg = cd_preset(n, alpha)?;
            cfg.out = cli.common.out.clone();
            let text = cfg.to_toml()?;
            match &cli.common.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("config.toml"), &text)?;
                }
                None => print!("{text}"),
            }
            Ok(true)
        }
        command => {
            let cfg = load_config(&cli.common)?;
            match command {
                Command::Simulate { horizon, until_covered } => run_simulate(&cfg, horizon, until_covered),
                Command::PathLln => {
                    let r = run_path_lln(&cfg)?;
                    emit(&cfg, &r, &r.checks)
                }
                Command::Distance => {
                    let r = run_distance(&cfg)?;
                    emit(&cfg, &r, &r.checks)
                }
                Command::Coverage => {
                    let r = run_coverage(&cfg)?;
                    emit(&cfg, &r, &r.checks)
                }
                Command::Intersections => {
                    let r = run_intersections(&cfg)?;
                    emit(&cfg, &r, &r.checks)
                }
                Command::SolveH { .. } | Command::CdPreset { .. } => unreachable!("handled above"),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let check = cli.common.check;
    match run(cli) {
        Ok(passed) if passed || !check => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
