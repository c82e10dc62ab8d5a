//! The branching process with every candidate kept, labelled chronologically
//! into real islands and ghosts.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::coverage::covered_length_merge;
use super::sim::{check_horizon, contact_location, default_cell_hint, owns};
use super::weights::PowerSumTree;
use crate::branching::{invert_intensity, MomentState, ProcessParams};
use crate::error::{Error, Result};
use crate::geometry::{sample_uniform, Island, Point};
use crate::index::ConeIndex;

/// Which islands the location and mark tests are run against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GhostRule {
    /// Every previously listed island, ghosts included.
    Literal,
    /// Only islands that are real under the same rule.
    RealOnly,
}

/// Why a candidate was labelled a ghost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhostCause {
    Parent,
    Outside,
    Location,
    Mark,
}

/// One candidate of the branching process; each one becomes an island.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledEvent {
    pub t: f64,
    pub src: u32,
    pub loc: Point,
    pub mark: Point,
    /// Label under [`GhostRule::Literal`]; `None` means real.
    pub ghost: Option<GhostCause>,
    /// Label under [`GhostRule::RealOnly`].
    pub ghost_real_only: Option<GhostCause>,
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    params: ProcessParams,
    horizon: f64,
    islands: Vec<Island>,
    parents: Vec<Option<u32>>,
    ghost: Vec<bool>,
    ghost_real_only: Vec<bool>,
    events: Vec<CoupledEvent>,
}

struct Labeller {
    index: ConeIndex,
    ghost: Vec<bool>,
}

impl Labeller {
    fn label(
        &mut self,
        params: &ProcessParams,
        src: &Island,
        q: &Point,
        mark: &Point,
        t: f64,
    ) -> Option<GhostCause> {
        let spec = params.manifold();
        if self.ghost[src.id as usize] {
            Some(GhostCause::Parent)
        } else if !spec.contains(q) {
            Some(GhostCause::Outside)
        } else if !owns(params.kind(), &mut self.index, q, t, src.id, src.birth) {
            Some(GhostCause::Location)
        } else if self.index.reaches(mark, t, false, f64::INFINITY, None) {
            Some(GhostCause::Mark)
        } else {
            None
        }
    }
}

/// Runs the full branching process to `horizon` and labels every candidate.
///
/// The draw order matches [`simulate`](super::simulate) without probes, so the
/// two runs agree event by event until the first ghost appears.
pub fn coupled_ghost_run<R: Rng + ?Sized>(
    params: &ProcessParams,
    horizon: f64,
    event_cap: usize,
    rng: &mut R,
) -> Result<CoupledRun> {
    let spec = params.manifold().clone();
    check_horizon(&spec, horizon)?;
    let coef = params.intensity_coef();
    let mut moments = MomentState::initial(params.r());
    let mut weights = PowerSumTree::new(params.rate_power());
    let hint = default_cell_hint(params);
    let mut literal = Labeller { index: ConeIndex::new(&spec, hint), ghost: vec![false] };
    let mut real_only = Labeller { index: ConeIndex::new(&spec, hint), ghost: vec![false] };

    let p0 = sample_uniform(&spec, rng);
    let mut islands = vec![Island { center: p0, birth: 0.0, id: 0 }];
    let mut parents = vec![None];
    weights.push(0.0);
    literal.index.insert(p0, 0.0, 0);
    real_only.index.insert(p0, 0.0, 0);
    let mut events = Vec::new();

    loop {
        let e: f64 = rng.sample(Exp1);
        let dt = invert_intensity(&moments.intensity_poly(coef), e);
        let t = moments.t() + dt;
        if t > horizon {
            break;
        }
        if events.len() >= event_cap {
            return Err(Error::EventCapExceeded { cap: event_cap, t });
        }
        moments.advance(dt);
        let u: f64 = rng.random();
        let j = weights.find(t, u * weights.total(t));
        let src = islands[j];
        let q = contact_location(params, &src.center, t - src.birth, rng);
        let mark = sample_uniform(&spec, rng);
        let a = literal.label(params, &src, &q, &mark, t);
        let b = real_only.label(params, &src, &q, &mark, t);

        let id = islands.len() as u32;
        islands.push(Island { center: mark, birth: t, id });
        parents.push(Some(src.id));
        weights.push(t);
        moments.add_birth();
        literal.index.insert(mark, t, id);
        literal.ghost.push(a.is_some());
        if b.is_none() {
            real_only.index.insert(mark, t, id);
        }
        real_only.ghost.push(b.is_some());
        events.push(CoupledEvent { t, src: src.id, loc: q, mark, ghost: a, ghost_real_only: b });
    }
    Ok(CoupledRun {
        params: params.clone(),
        horizon,
        islands,
        parents,
        ghost: literal.ghost,
        ghost_real_only: real_only.ghost,
        events,
    })
}

impl CoupledRun {
    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// All islands of the branching process, in birth order.
    pub fn islands(&self) -> &[Island] {
        &self.islands
    }

    /// Source island of each island; `None` for the initial one.
    pub fn parents(&self) -> &[Option<u32>] {
        &self.parents
    }

    pub fn events(&self) -> &[CoupledEvent] {
        &self.events
    }

    pub fn ghost_labels(&self, rule: GhostRule) -> &[bool] {
        match rule {
            GhostRule::Literal => &self.ghost,
            GhostRule::RealOnly => &self.ghost_real_only,
        }
    }

    /// Islands that are real under `rule`.
    pub fn real_islands(&self, rule: GhostRule) -> Vec<Island> {
        let labels = self.ghost_labels(rule);
        self.islands.iter().filter(|i| !labels[i.id as usize]).copied().collect()
    }

    /// Fraction of the islands born by `t` that are ghosts.
    pub fn ghost_fraction(&self, t: f64, rule: GhostRule) -> f64 {
        let labels = self.ghost_labels(rule);
        let born = self.islands.iter().take_while(|i| i.birth <= t).count();
        labels[..born].iter().filter(|g| **g).count() as f64 / born as f64
    }

    /// Time of the first ghost, if any.
    pub fn first_ghost_time(&self, rule: GhostRule) -> Option<f64> {
        let labels = self.ghost_labels(rule);
        self.islands.iter().find(|i| labels[i.id as usize]).map(|i| i.birth)
    }

    /// Exact covered fraction of `Y` at `t` in one dimension.
    pub fn covered_fraction_exact(&self, t: f64, rule: GhostRule) -> Result<f64> {
        let spec = self.params.manifold();
        Ok(covered_length_merge(spec, &self.real_islands(rule), t)? / spec.volume())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::ProcessKind;
    use crate::geometry::{BallShape, ManifoldSpec, Topology};
    use crate::spatial::{simulate, Disposition, SimOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(kind: ProcessKind, d: usize, big_lambda: f64) -> ProcessParams {
        let spec = ManifoldSpec::cube_torus(d, 1.0, BallShape::Round).unwrap();
        let vk = spec.v_k();
        let spec = ManifoldSpec::cube_torus(d, big_lambda * vk, BallShape::Round).unwrap();
        ProcessParams::with_lambda0(kind, 1.0, spec).unwrap()
    }

    #[test]
    fn descendants_of_ghosts_are_ghosts() {
        let p = params(ProcessKind::Gossip, 1, 50.0);
        let run = coupled_ghost_run(&p, 6.0, 1_000_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for rule in [GhostRule::Literal, GhostRule::RealOnly] {
            let g = run.ghost_labels(rule);
            assert!(g.iter().any(|x| *x));
            for (i, parent) in run.parents().iter().enumerate() {
                if let Some(j) = parent {
                    if g[*j as usize] {
                        assert!(g[i]);
                    }
                }
            }
            assert!(run.real_islands(rule).len() <= run.islands().len());
        }
    }

    #[test]
    fn agrees_with_simulator_until_first_ghost() {
        for kind in [ProcessKind::Gossip, ProcessKind::SmallWorld] {
            for seed in 0..10 {
                let p = params(kind, 2, 200.0);
                let run = coupled_ghost_run(&p, 5.0, 1_000_000, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                let mut opts = SimOptions::new(5.0);
                opts.record_events = true;
                let sim = simulate(&p, &opts, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                assert_eq!(sim.islands()[0], run.islands()[0]);
                for (a, b) in sim.events().iter().zip(run.events()) {
                    assert_eq!(a.t, b.t);
                    assert_eq!(a.src, b.src);
                    assert_eq!(a.loc, b.loc);
                    if b.ghost.is_some() {
                        assert_ne!(a.disposition, Disposition::AcceptedNewIsland);
                        break;
                    }
                    assert_eq!(a.disposition, Disposition::AcceptedNewIsland);
                }
            }
        }
    }

    #[test]
    fn no_ghosts_while_balls_are_disjoint() {
        let p = params(ProcessKind::Gossip, 1, 1e4);
        let run = coupled_ghost_run(&p, 4.0, 1_000_000, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let spec = p.manifold();
        // First time any two balls touch.
        let isl = run.islands();
        let mut first_touch = f64::INFINITY;
        for i in 0..isl.len() {
            for j in i + 1..isl.len() {
                let dist = crate::geometry::distance(spec, &isl[i].center, &isl[j].center);
                let touch = 0.5 * (dist / spec.speed() + isl[i].birth + isl[j].birth);
                first_touch = first_touch.min(touch.max(isl[j].birth));
            }
        }
        let first = run.first_ghost_time(GhostRule::Literal).unwrap_or(f64::INFINITY);
        assert!(first >= first_touch);
    }

    #[test]
    fn rectangle_contacts_outside_are_ghosts() {
        let spec = ManifoldSpec::new(vec![20.0], Topology::Rectangle, BallShape::Round).unwrap();
        let p = ProcessParams::with_lambda0(ProcessKind::Gossip, 1.0, spec).unwrap();
        let run = coupled_ghost_run(&p, 5.0, 1_000_000, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        for e in run.events() {
            if !p.manifold().contains(&e.loc) {
                assert!(matches!(e.ghost, Some(GhostCause::Outside | GhostCause::Parent)));
            }
        }
    }
}
