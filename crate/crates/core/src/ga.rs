//! Wall-clock-bounded NSGA-II over the APF parameters. Both objectives are
//! measured on the executed closed-loop path: the largest body energy and
//! the largest driver point-charge energy.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charge::{system_energy_terms, ChargedBody, RoadCharges, SENTINEL_ENERGY};
use crate::mpc::MpcProblem;
use crate::scenario::{CaseSpec, Scenario};
use crate::sim::{
    run_episode, ApfWeights, ControllerKind, EpisodeResult, Outcome, RunConfig, SimError,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    /// Driver point charge.
    pub q: f64,
    pub obstacle_weight: f64,
    pub road_weight: f64,
}

impl GaParams {
    pub fn with_q(q: f64) -> Self {
        Self {
            q,
            obstacle_weight: 1.0,
            road_weight: 1.0,
        }
    }

    fn genes(&self) -> [f64; 3] {
        [self.q, self.obstacle_weight, self.road_weight]
    }

    fn from_genes(g: [f64; 3]) -> Self {
        Self {
            q: g[0],
            obstacle_weight: g[1],
            road_weight: g[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_sigma: f64,
    pub crossover_rate: f64,
    pub budget: Duration,
    pub max_generations: Option<usize>,
    pub q_bounds: [f64; 2],
    /// Range of the obstacle and road weights; `None` tunes `q` only.
    pub weight_bounds: Option<[f64; 2]>,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 16,
            mutation_rate: 0.5,
            mutation_sigma: 0.15,
            crossover_rate: 0.9,
            budget: Duration::from_secs(60),
            max_generations: None,
            q_bounds: [0.0, 10.0],
            weight_bounds: None,
            seed: 0,
        }
    }
}

impl GaConfig {
    fn gene_bounds(&self) -> [[f64; 2]; 3] {
        let w = self.weight_bounds.unwrap_or([1.0, 1.0]);
        [self.q_bounds, w, w]
    }
}

/// Objectives to minimize. Steps with intersecting charges add one sentinel
/// per singular sub-term to the body objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub body: f64,
    pub driver: f64,
}

impl Objectives {
    pub fn dominates(&self, other: &Objectives) -> bool {
        self.body <= other.body
            && self.driver <= other.driver
            && (self.body < other.body || self.driver < other.driver)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub params: GaParams,
    pub objectives: Objectives,
    pub outcome: Outcome,
    pub collision_at_driver: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub front: Vec<ParetoPoint>,
    pub generations: usize,
    pub evaluations: usize,
    pub elapsed: Duration,
}

/// Run configuration for one individual on top of `base`.
pub fn config_for(params: &GaParams, base: &RunConfig) -> RunConfig {
    RunConfig {
        controller: ControllerKind::ApfMpc,
        protection_q: params.q,
        weights: ApfWeights {
            obstacle: params.obstacle_weight,
            road: params.road_weight,
        },
        ..*base
    }
}

/// Recomputes both objectives from a logged episode with the charges the
/// controller used.
pub fn path_objectives(
    episode: &EpisodeResult,
    scenario: &Scenario,
    cfg: &RunConfig,
) -> Objectives {
    let mut problem = MpcProblem::new(cfg.model).with_protection(cfg.protection_q);
    problem.footprint = scenario.footprint;
    let road = RoadCharges {
        weight: cfg.weights.road,
        ..scenario.road.charges.clone()
    };
    let mut body = f64::NEG_INFINITY;
    let mut driver = f64::NEG_INFINITY;
    for step in &episode.steps {
        let ego = problem.ego_body(step.states[0].pose());
        let obstacles: Vec<ChargedBody> = step.states[1..]
            .iter()
            .map(|s| {
                ChargedBody::rectangle(
                    &scenario.footprint.rect(s.pose()),
                    problem.lambda,
                    cfg.weights.obstacle,
                )
            })
            .collect();
        let terms = system_energy_terms(&ego, &obstacles, &road, problem.field);
        body = body.max(terms.body + SENTINEL_ENERGY * terms.singular as f64);
        driver = driver.max(terms.point);
    }
    Objectives { body, driver }
}

/// Runs one closed-loop episode with `params` and scores its path.
pub fn evaluate_individual(
    params: &GaParams,
    case: &CaseSpec,
    scenario: &Scenario,
    base: &RunConfig,
) -> Result<(Objectives, EpisodeResult), SimError> {
    let cfg = config_for(params, base);
    let episode = run_episode(case, scenario, &cfg, None)?;
    Ok((path_objectives(&episode, scenario, &cfg), episode))
}

/// Front index of every point (0 = non-dominated).
pub fn non_dominated_ranks(points: &[Objectives]) -> Vec<usize> {
    let n = points.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && points[i].dominates(&points[j]) {
                dominates[i].push(j);
                dominated_by[j] += 1;
            }
        }
    }
    let mut rank = vec![usize::MAX; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut level = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = level;
            for &j in &dominates[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        current = next;
        level += 1;
    }
    rank
}

/// Crowding distance of each member of one front.
pub fn crowding_distance(points: &[Objectives], members: &[usize]) -> Vec<f64> {
    let mut dist = vec![0.0; members.len()];
    if members.len() <= 2 {
        return vec![f64::INFINITY; members.len()];
    }
    for pick in [|o: &Objectives| o.body, |o: &Objectives| o.driver] {
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by(|&a, &b| pick(&points[members[a]]).total_cmp(&pick(&points[members[b]])));
        let lo = pick(&points[members[order[0]]]);
        let hi = pick(&points[members[*order.last().unwrap()]]);
        dist[order[0]] = f64::INFINITY;
        dist[*order.last().unwrap()] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 || !span.is_finite() {
            continue;
        }
        for w in 1..order.len() - 1 {
            let before = pick(&points[members[order[w - 1]]]);
            let after = pick(&points[members[order[w + 1]]]);
            dist[order[w]] += (after - before) / span;
        }
    }
    dist
}

#[derive(Debug, Clone)]
struct Member {
    point: ParetoPoint,
    rank: usize,
    crowding: f64,
}

fn better(a: &Member, b: &Member) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

/// Keeps the `keep` best members by front then crowding distance.
fn survive(pool: Vec<ParetoPoint>, keep: usize) -> Vec<Member> {
    let objs: Vec<Objectives> = pool.iter().map(|p| p.objectives).collect();
    let ranks = non_dominated_ranks(&objs);
    let mut members: Vec<Member> = pool
        .into_iter()
        .zip(&ranks)
        .map(|(point, &rank)| Member {
            point,
            rank,
            crowding: 0.0,
        })
        .collect();
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    for r in 0..=max_rank {
        let idx: Vec<usize> = (0..members.len())
            .filter(|&i| members[i].rank == r)
            .collect();
        let cd = crowding_distance(&objs, &idx);
        for (k, &i) in idx.iter().enumerate() {
            members[i].crowding = cd[k];
        }
    }
    members.sort_by(|a, b| {
        a.rank.cmp(&b.rank).then(
            b.crowding
                .partial_cmp(&a.crowding)
                .unwrap_or(Ordering::Equal),
        )
    });
    members.truncate(keep);
    members
}

fn random_params(rng: &mut ChaCha8Rng, bounds: &[[f64; 2]; 3]) -> GaParams {
    let mut g = [0.0; 3];
    for (gi, b) in g.iter_mut().zip(bounds) {
        *gi = if b[1] > b[0] {
            rng.random_range(b[0]..=b[1])
        } else {
            b[0]
        };
    }
    GaParams::from_genes(g)
}

fn tournament<'a>(rng: &mut ChaCha8Rng, pop: &'a [Member]) -> &'a Member {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if better(b, a) {
        b
    } else {
        a
    }
}

fn offspring(
    rng: &mut ChaCha8Rng,
    pop: &[Member],
    cfg: &GaConfig,
    bounds: &[[f64; 2]; 3],
) -> GaParams {
    let p1 = tournament(rng, pop).point.params.genes();
    let p2 = tournament(rng, pop).point.params.genes();
    let mut child = p1;
    if rng.random_bool(cfg.crossover_rate.clamp(0.0, 1.0)) {
        for (c, &other) in child.iter_mut().zip(&p2) {
            if rng.random_bool(0.5) {
                *c = other;
            }
        }
    }
    for (c, b) in child.iter_mut().zip(bounds) {
        let span = b[1] - b[0];
        if span > 0.0 && rng.random_bool(cfg.mutation_rate.clamp(0.0, 1.0)) {
            let n = Normal::new(0.0, cfg.mutation_sigma * span).expect("positive sigma");
            *c = (*c + n.sample(rng)).clamp(b[0], b[1]);
        }
    }
    GaParams::from_genes(child)
}

/// Evaluates `params` in parallel, skipping any that would start after the
/// deadline. The first entry is always evaluated.
fn evaluate_all(
    params: &[GaParams],
    case: &CaseSpec,
    scenario: &Scenario,
    base: &RunConfig,
    deadline: Instant,
) -> Result<Vec<ParetoPoint>, SimError> {
    let results = params
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            if i > 0 && Instant::now() >= deadline {
                return Ok(None);
            }
            let (objectives, ep) = evaluate_individual(p, case, scenario, base)?;
            Ok(Some(ParetoPoint {
                params: *p,
                objectives,
                outcome: ep.outcome,
                collision_at_driver: ep.collision_at_driver,
            }))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    Ok(results.into_iter().flatten().collect())
}

fn final_front(pop: Vec<Member>) -> Vec<ParetoPoint> {
    let objs: Vec<Objectives> = pop.iter().map(|m| m.point.objectives).collect();
    let ranks = non_dominated_ranks(&objs);
    let mut front: Vec<ParetoPoint> = Vec::new();
    for (m, r) in pop.into_iter().zip(ranks) {
        let duplicate = front.iter().any(|f| f.objectives == m.point.objectives);
        if r == 0 && !duplicate {
            front.push(m.point);
        }
    }
    front.sort_by(|a, b| a.objectives.body.total_cmp(&b.objectives.body));
    front
}

/// NSGA-II on one case under a wall-clock budget. A population below four
/// cannot sustain tournaments and falls back to independent random restarts.
pub fn optimize(
    config: &GaConfig,
    case: &CaseSpec,
    scenario: &Scenario,
    base: &RunConfig,
) -> Result<GaResult, SimError> {
    let start = Instant::now();
    let deadline = start + config.budget;
    let bounds = config.gene_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let size = config.population.max(1);
    let gen_limit = config.max_generations.unwrap_or(usize::MAX);

    let initial: Vec<GaParams> = (0..size)
        .map(|_| random_params(&mut rng, &bounds))
        .collect();
    let evaluated = evaluate_all(&initial, case, scenario, base, deadline)?;
    let mut evaluations = evaluated.len();
    let mut pop = survive(evaluated, size);
    let mut generations = 0;

    while generations < gen_limit && Instant::now() < deadline {
        let children: Vec<GaParams> = if size < 4 {
            (0..size)
                .map(|_| random_params(&mut rng, &bounds))
                .collect()
        } else {
            (0..size)
                .map(|_| offspring(&mut rng, &pop, config, &bounds))
                .collect()
        };
        let evaluated = evaluate_all(&children, case, scenario, base, deadline)?;
        evaluations += evaluated.len();
        let mut pool: Vec<ParetoPoint> = pop.into_iter().map(|m| m.point).collect();
        pool.extend(evaluated);
        pop = survive(pool, size);
        generations += 1;
    }

    Ok(GaResult {
        front: final_front(pop),
        generations,
        evaluations,
        elapsed: start.elapsed(),
    })
}

pub fn write_front_csv<W: std::io::Write>(out: W, front: &[ParetoPoint]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "q",
        "obstacle_weight",
        "road_weight",
        "max_body_energy",
        "max_driver_energy",
        "outcome",
        "driver_hit",
    ])?;
    for p in front {
        w.write_record([
            format!("{:.6}", p.params.q),
            format!("{:.6}", p.params.obstacle_weight),
            format!("{:.6}", p.params.road_weight),
            p.objectives.body.to_string(),
            p.objectives.driver.to_string(),
            match p.outcome {
                Outcome::Success => "success".into(),
                Outcome::Collision => "collision".into(),
            },
            p.collision_at_driver.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
