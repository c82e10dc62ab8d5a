use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::coverage::{covered_length_merge, Envelope1d};
use super::weights::PowerSumTree;
use crate::branching::{invert_intensity, MomentState, ProcessKind, ProcessParams, DEFAULT_EVENT_CAP};
use crate::error::{Error, Result};
use crate::geometry::{sample_in_ball, sample_on_sphere, sample_uniform, Island, ManifoldSpec, Point};
use crate::index::ConeIndex;
use crate::stats::binomial_se;

/// What happened to a candidate long-range contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    /// Another island owns the contact location.
    RejectedOwner,
    /// The contact location fell outside a rectangle.
    RejectedOutside,
    AcceptedNewIsland,
    /// Accepted, but the new point was already informed.
    AcceptedMarkCovered,
}

impl Disposition {
    pub fn accepted(self) -> bool {
        matches!(self, Disposition::AcceptedNewIsland | Disposition::AcceptedMarkCovered)
    }
}

/// One candidate contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    /// Id of the island the contact came from.
    pub src: u32,
    /// Contact location inside (or on) the source ball.
    pub loc: Point,
    /// Point informed by the contact, for accepted candidates.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mark: Option<Point>,
    pub disposition: Disposition,
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, rows: &[T]) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub horizon: f64,
    pub n_probes: usize,
    /// Stop once the whole space is covered (exactly in d = 1, at probe
    /// resolution otherwise).
    pub stop_at_coverage: bool,
    pub record_events: bool,
    /// Limit on the number of candidate events.
    pub event_cap: usize,
    /// Finest cell size of the spatial index; defaults to `speed / lambda0`.
    pub cell_hint: Option<f64>,
    /// Largest gap between coverage checks; defaults to `0.25 / lambda0`.
    pub check_interval: Option<f64>,
}

impl SimOptions {
    pub fn new(horizon: f64) -> Self {
        SimOptions {
            horizon,
            n_probes: 0,
            stop_at_coverage: false,
            record_events: false,
            event_cap: DEFAULT_EVENT_CAP,
            cell_hint: None,
            check_interval: None,
        }
    }
}

/// A completed run of the spatial process.
#[derive(Debug, Clone)]
pub struct SpatialState {
    params: ProcessParams,
    islands: Vec<Island>,
    t: f64,
    events: Vec<EventRecord>,
    accepted_times: Vec<f64>,
    candidates: usize,
    probes: Vec<Point>,
    probe_times: Vec<f64>,
    coverage_time: Option<f64>,
}

pub(crate) fn check_horizon(spec: &ManifoldSpec, horizon: f64) -> Result<()> {
    if !(horizon >= 0.0) {
        return Err(Error::InvalidParams(format!("horizon {horizon} must be nonnegative")));
    }
    if horizon > spec.radius_cap() {
        return Err(Error::HorizonExceedsCap { horizon, cap: spec.radius_cap() });
    }
    Ok(())
}

pub(crate) fn default_cell_hint(params: &ProcessParams) -> f64 {
    let spec = params.manifold();
    if params.lambda0() > 0.0 {
        spec.speed() / params.lambda0()
    } else {
        spec.min_side()
    }
}

/// Draws the contact location for a candidate from an island of age `age`.
pub(crate) fn contact_location<R: Rng + ?Sized>(
    params: &ProcessParams,
    center: &Point,
    age: f64,
    rng: &mut R,
) -> Point {
    match params.kind() {
        ProcessKind::Gossip => sample_in_ball(params.manifold(), center, age, rng),
        ProcessKind::SmallWorld => sample_on_sphere(params.manifold(), center, age, rng),
    }
}

/// Whether the candidate at `q` from island `src` (born at `src_birth`) is a
/// genuine contact of the union, given the islands in `index`.
pub(crate) fn owns(
    kind: ProcessKind,
    index: &mut ConeIndex,
    q: &Point,
    t: f64,
    src: u32,
    src_birth: f64,
) -> bool {
    match kind {
        // Earliest-born covering island owns the point.
        ProcessKind::Gossip => !index.reaches(q, t, false, src_birth, None),
        // The point must lie on the boundary of the union.
        ProcessKind::SmallWorld => !index.reaches(q, t, true, f64::INFINITY, Some(src)),
    }
}

struct CoverageWatch {
    next_check: f64,
    interval: f64,
    unresolved: Vec<usize>,
}

/// Simulates the spread process exactly by thinning the candidate stream of
/// the branching process built on the current real islands.
///
/// Draw order per candidate: delay, source island, contact location, mark.
pub fn simulate<R: Rng + ?Sized>(params: &ProcessParams, opts: &SimOptions, rng: &mut R) -> Result<SpatialState> {
    let spec = params.manifold().clone();
    check_horizon(&spec, opts.horizon)?;
    if opts.stop_at_coverage && spec.d() > 1 && opts.n_probes == 0 {
        return Err(Error::InvalidParams("coverage detection in d >= 2 needs probes".into()));
    }
    let kind = params.kind();
    let coef = params.intensity_coef();
    let r = params.r();
    let mut moments = MomentState::initial(r);
    let mut weights = PowerSumTree::new(params.rate_power());
    let mut index = ConeIndex::new(&spec, opts.cell_hint.unwrap_or_else(|| default_cell_hint(params)));

    let p0 = sample_uniform(&spec, rng);
    let mut islands = vec![Island { center: p0, birth: 0.0, id: 0 }];
    weights.push(0.0);
    index.insert(p0, 0.0, 0);
    let probes: Vec<Point> = (0..opts.n_probes).map(|_| sample_uniform(&spec, rng)).collect();
    let mut probe_times = vec![f64::INFINITY; probes.len()];

    let mut watch = CoverageWatch {
        next_check: 0.0,
        interval: opts.check_interval.unwrap_or(if params.lambda0() > 0.0 { 0.25 / params.lambda0() } else { f64::INFINITY }),
        unresolved: (0..probes.len()).collect(),
    };
    let mut events = Vec::new();
    let mut accepted_times = Vec::new();
    let mut candidates = 0usize;
    let mut coverage_time = None;
    let end;

    'run: loop {
        let t = moments.t();
        let e: f64 = rng.sample(Exp1);
        let dt = invert_intensity(&moments.intensity_poly(coef), e);
        let t_next = t + dt;
        while opts.stop_at_coverage && watch.next_check < t_next && watch.next_check <= opts.horizon {
            let tc = watch.next_check;
            let cand = if spec.d() == 1 {
                Envelope1d::new(&spec, &islands)?.coverage_time()
            } else {
                let mut worst = 0.0f64;
                watch.unresolved.retain(|&k| {
                    let (a, _) = index.first_arrival(&probes[k]);
                    worst = worst.max(a);
                    if a <= tc {
                        probe_times[k] = a;
                        false
                    } else {
                        true
                    }
                });
                probe_times.iter().filter(|x| x.is_finite()).fold(worst, |m, x| m.max(*x))
            };
            if cand <= tc {
                coverage_time = Some(cand);
                end = tc;
                break 'run;
            }
            watch.next_check = cand.min(tc + watch.interval);
        }
        if t_next > opts.horizon {
            end = opts.horizon;
            break;
        }
        candidates += 1;
        if candidates > opts.event_cap {
            return Err(Error::EventCapExceeded { cap: opts.event_cap, t: t_next });
        }
        moments.advance(dt);
        let t = t_next;
        let u: f64 = rng.random();
        let j = weights.find(t, u * weights.total(t));
        let src = islands[j];
        let q = contact_location(params, &src.center, t - src.birth, rng);
        let mark = sample_uniform(&spec, rng);
        let disposition = if !spec.contains(&q) {
            Disposition::RejectedOutside
        } else if !owns(kind, &mut index, &q, t, src.id, src.birth) {
            Disposition::RejectedOwner
        } else if index.reaches(&mark, t, false, f64::INFINITY, None) {
            Disposition::AcceptedMarkCovered
        } else {
            let id = islands.len() as u32;
            islands.push(Island { center: mark, birth: t, id });
            weights.push(t);
            index.insert(mark, t, id);
            moments.add_birth();
            Disposition::AcceptedNewIsland
        };
        if disposition.accepted() {
            accepted_times.push(t);
        }
        if opts.record_events {
            events.push(EventRecord {
                t,
                src: src.id,
                loc: q,
                mark: disposition.accepted().then_some(mark),
                disposition,
            });
        }
    }

    for (k, p) in probes.iter().enumerate() {
        if probe_times[k].is_infinite() {
            let (a, _) = index.first_arrival(p);
            if a <= end {
                probe_times[k] = a;
            }
        }
    }
    Ok(SpatialState {
        params: params.clone(),
        islands,
        t: end,
        events,
        accepted_times,
        candidates,
        probes,
        probe_times,
        coverage_time,
    })
}

impl SpatialState {
    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn islands(&self) -> &[Island] {
        &self.islands
    }

    /// Time the run ended.
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    /// Times of accepted long-range contacts.
    pub fn accepted_times(&self) -> &[f64] {
        &self.accepted_times
    }

    /// Number of candidate contacts drawn.
    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn probes(&self) -> &[Point] {
        &self.probes
    }

    /// First time each probe was informed; `+inf` if not by the end of the run.
    pub fn first_passage_times(&self) -> &[f64] {
        &self.probe_times
    }

    /// Birth times of the islands, in order.
    pub fn births(&self) -> Vec<f64> {
        self.islands.iter().map(|i| i.birth).collect()
    }

    /// Exact covered fraction at `t`; one-dimensional runs only.
    pub fn covered_fraction_exact(&self, t: f64) -> Result<f64> {
        let spec = self.params.manifold();
        Ok(covered_length_merge(spec, &self.islands, t.min(self.t))? / spec.volume())
    }

    /// First-coverage profile for one-dimensional runs.
    pub fn envelope(&self) -> Result<Envelope1d> {
        Envelope1d::new(self.params.manifold(), &self.islands)
    }

    /// Fraction of probes informed by `t`, with its binomial standard error.
    pub fn covered_fraction_probes(&self, t: f64) -> (f64, f64) {
        let n = self.probe_times.len();
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let f = self.probe_times.iter().filter(|x| **x <= t).count() as f64 / n as f64;
        (f, binomial_se(f, n))
    }

    /// Time the space was covered: exact in d = 1, otherwise the time the
    /// last probe was informed.
    pub fn coverage_time(&self) -> Result<f64> {
        if let Some(t) = self.coverage_time {
            return Ok(t);
        }
        if self.params.d() == 1 {
            let tc = self.envelope()?.coverage_time();
            if tc <= self.t {
                return Ok(tc);
            }
        } else if !self.probe_times.is_empty() && self.probe_times.iter().all(|x| x.is_finite()) {
            return Ok(self.probe_times.iter().cloned().fold(0.0, f64::max));
        }
        Err(Error::HorizonReached { horizon: self.t })
    }

    /// Writes `probe,tau` rows.
    pub fn write_probe_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "probe,tau")?;
        for (k, tau) in self.probe_times.iter().enumerate() {
            writeln!(out, "{k},{tau}")?;
        }
        Ok(())
    }

    pub fn write_event_log<W: Write>(&self, out: W) -> Result<()> {
        write_jsonl(out, &self.events)
    }
}
