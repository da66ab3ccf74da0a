//! Closed-loop episodes, collision detection, batch statistics and the
//! charge-quantity sweep.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charge::RoadCharges;
use crate::geometry::{
    boundary_distance, clip_convex, convex_interior_depth, edges, point_in_polygon, rect_distance,
    sat_overlap, segments_intersect, OrientedRect, Pose, Vec2,
};
use crate::hj::{hj_control, HjCache, HjError, HjPolicy, HjSettings, SubsystemSpec};
use crate::mpc::{MpcController, MpcProblem, PredictedWorld, SamplerSettings};
use crate::scenario::{CaseSpec, RoadGeometry, Scenario};
use crate::vehicle::{
    step_unicycle, Control, UnicycleInput, UnicycleState, VehicleFootprint, VehicleModel,
    VehicleState,
};

/// Highest speed assumed when checking that one substep cannot skip past a
/// footprint.
const MAX_SPEED_ASSUMED: f64 = 60.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("the reachability controller supports the unicycle model only")]
    HjNeedsUnicycle,
    #[error("no reachability policy for scenario {0}")]
    MissingPolicy(u8),
    #[error("invalid simulation settings: {0}")]
    Settings(String),
    #[error(transparent)]
    Hj(#[from] HjError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    ApfMpc,
    Hj,
    Coop,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::ApfMpc => "apf-mpc",
            ControllerKind::Hj => "hj",
            ControllerKind::Coop => "coop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    /// Controller period (s); also the MPC prediction step.
    pub period: f64,
    pub substeps: usize,
    /// Consecutive non-decreasing distance steps that end an episode.
    pub separation_steps: usize,
    pub t_max: f64,
    /// Radius around the driver point counted as a driver-position hit.
    pub r_driver: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            period: 0.05,
            substeps: 10,
            separation_steps: 10,
            t_max: 5.0,
            r_driver: 0.6,
        }
    }
}

impl SimSettings {
    pub fn validate(&self, footprint: &VehicleFootprint) -> Result<(), SimError> {
        if !(self.period > 0.0) || self.substeps == 0 || !(self.t_max > 0.0) {
            return Err(SimError::Settings(
                "period, substeps and t_max must be positive".into(),
            ));
        }
        let step = MAX_SPEED_ASSUMED * self.period / self.substeps as f64;
        if step >= 0.5 * footprint.width {
            return Err(SimError::Settings(format!(
                "substep displacement {step:.3} m at {MAX_SPEED_ASSUMED} m/s is not below half the vehicle width"
            )));
        }
        Ok(())
    }
}

/// Everything that defines a run besides the cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub controller: ControllerKind,
    pub model: VehicleModel,
    /// Driver point charge; zero means protection off.
    pub protection_q: f64,
    pub seed: u64,
    pub sim: SimSettings,
    pub sampler: SamplerSettings,
    pub hj: HjSettings,
    pub weights: ApfWeights,
}

/// Scales applied to the obstacle and road charges in the MPC cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApfWeights {
    pub obstacle: f64,
    pub road: f64,
}

impl Default for ApfWeights {
    fn default() -> Self {
        Self {
            obstacle: 1.0,
            road: 1.0,
        }
    }
}

impl RunConfig {
    pub fn new(
        controller: ControllerKind,
        model: VehicleModel,
        protection_q: f64,
        seed: u64,
    ) -> Self {
        Self {
            controller,
            model,
            protection_q,
            seed,
            sim: SimSettings::default(),
            sampler: SamplerSettings::default(),
            hj: HjSettings::default(),
            weights: ApfWeights::default(),
        }
    }

    pub fn protection(&self) -> bool {
        self.protection_q > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactTarget {
    /// Index into the episode's vehicle list (0 is the ego).
    Vehicle(usize),
    Road,
}

/// First contact of a controlled vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    /// Vehicle whose body was hit.
    pub vehicle: usize,
    pub other: ContactTarget,
    pub point_world: Vec2,
    /// Deepest penetration point in the hit vehicle's body frame.
    pub point_body: Vec2,
    pub depth: f64,
}

fn average(points: &[Vec2]) -> Vec2 {
    points.iter().fold(Vec2::ZERO, |a, &p| a + p) * (1.0 / points.len() as f64)
}

/// Overlap point between two rectangles: the vertex of their intersection
/// lying deepest inside `other` (ties averaged), with the separating-axis
/// penetration depth.
fn vehicle_contact(ego: &OrientedRect, other: &OrientedRect) -> Option<(Vec2, f64)> {
    let depth = sat_overlap(ego, other)?.depth;
    let oc = other.corners();
    let overlap = clip_convex(&ego.corners(), &oc);
    if overlap.is_empty() {
        // touching along a boundary: nearest ego corner
        let c = ego.corners().into_iter().min_by(|a, b| {
            a.distance(other.pose.position)
                .total_cmp(&b.distance(other.pose.position))
        })?;
        return Some((c, depth));
    }
    let depths: Vec<f64> = overlap
        .iter()
        .map(|&v| convex_interior_depth(v, &oc))
        .collect();
    let deepest = depths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<Vec2> = overlap
        .iter()
        .zip(&depths)
        .filter(|(_, &d)| d >= deepest - 1e-9)
        .map(|(&v, _)| v)
        .collect();
    Some((average(&tied), depth))
}

/// Road violation point: the corner farthest outside the drivable region or
/// the region vertex deepest inside the vehicle.
fn road_contact(ego: &OrientedRect, region: &[Vec2]) -> Option<(Vec2, f64)> {
    fn keep(best: &mut Option<(Vec2, f64)>, p: Vec2, d: f64) {
        if best.is_none_or(|(_, bd)| d > bd) {
            *best = Some((p, d));
        }
    }
    let mut best = None;
    let corners = ego.corners();
    for c in corners {
        if !point_in_polygon(c, region) {
            keep(&mut best, c, boundary_distance(c, region));
        }
    }
    for &v in region {
        if ego.contains(v) {
            keep(&mut best, v, ego.interior_depth(v));
        }
    }
    if best.is_none() {
        let crossing = edges(&corners)
            .find(|&(a0, a1)| edges(region).any(|(b0, b1)| segments_intersect(a0, a1, b0, b1)));
        if let Some((a0, _)) = crossing {
            keep(&mut best, a0, 0.0);
        }
    }
    best
}

/// Contact of `vehicle` (pose `pose`) with any other vehicle or the road edge.
pub fn check_collision(
    vehicle: usize,
    pose: Pose,
    others: &[(usize, Pose)],
    footprint: &VehicleFootprint,
    road: &RoadGeometry,
) -> Option<Contact> {
    let rect = footprint.rect(pose);
    let describe = |other: ContactTarget, (p, depth): (Vec2, f64)| Contact {
        vehicle,
        other,
        point_world: p,
        point_body: pose.to_local(p),
        depth,
    };
    let mut found: Option<Contact> = None;
    for &(j, other) in others {
        if let Some(hit) = vehicle_contact(&rect, &footprint.rect(other)) {
            let c = describe(ContactTarget::Vehicle(j), hit);
            if found.is_none_or(|f| c.depth > f.depth) {
                found = Some(c);
            }
        }
    }
    if found.is_none() {
        found = road_contact(&rect, &road.region).map(|hit| describe(ContactTarget::Road, hit));
    }
    found
}

/// True when the contact lies within `r_driver` of the driver point (closed disc).
pub fn classify_driver_hit(contact: &Contact, footprint: &VehicleFootprint, r_driver: f64) -> bool {
    contact.point_body.distance(footprint.driver_offset) <= r_driver
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every ego–obstacle distance stayed non-decreasing long enough.
    Separation,
    /// Reached the time limit without contact.
    Timeout,
    Collision,
    /// Footprints overlapped or left the road at t = 0.
    InfeasibleStart,
}

/// Logged state after each controller step (and at t = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    /// Ego first, then obstacles in case order.
    pub states: Vec<VehicleState>,
    /// Applied inputs of every controlled vehicle during the following step.
    pub inputs: Vec<Control>,
    /// Footprint distance from the ego to each obstacle.
    pub distances: Vec<f64>,
    pub min_dist: f64,
}

/// Cost bookkeeping of one MPC solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub cost: f64,
    pub warm_cost: Option<f64>,
    pub best_per_iteration: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario: u8,
    pub case_index: usize,
    pub controller: ControllerKind,
    pub outcome: Outcome,
    pub termination: Termination,
    pub collision_at_driver: bool,
    pub collision_time: Option<f64>,
    pub contact: Option<Contact>,
    /// Number of leading vehicles in `states` driven by the controller.
    pub controlled: usize,
    pub steps: Vec<StepRecord>,
    pub solves: Vec<SolveRecord>,
    pub hj_selected: Vec<usize>,
}

impl EpisodeResult {
    pub fn id(&self) -> String {
        format!("s{}_c{:02}", self.scenario, self.case_index)
    }

    pub fn inputs_within(&self, bounds: &crate::vehicle::InputBounds) -> bool {
        self.steps
            .iter()
            .take(self.steps.len().saturating_sub(1))
            .all(|s| {
                s.inputs
                    .iter()
                    .take(self.controlled)
                    .all(|&c| bounds.contains(c))
            })
    }
}

struct Vehicle {
    state: VehicleState,
    controlled: bool,
    policy: Option<crate::scenario::ObstaclePolicy>,
}

fn seed_for(seed: u64, case: &CaseSpec) -> u64 {
    // splitmix64 finalizer over the run seed and case identity
    let mut z = seed ^ ((case.scenario as u64) << 32) ^ case.index as u64;
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unicycle_of(s: &VehicleState) -> UnicycleState {
    let p = s.pose();
    UnicycleState {
        x: p.position.x,
        y: p.position.y,
        psi: p.heading,
        u: s.speed(),
    }
}

/// Poses of an obstacle over the horizon when it keeps its current input.
fn extrapolate(state: &VehicleState, input: Control, steps: usize, dt: f64) -> Vec<Pose> {
    let mut s = unicycle_of(state);
    (0..steps)
        .map(|_| {
            s = step_unicycle(
                &s,
                &UnicycleInput {
                    r: input[0],
                    a: input[1],
                },
                dt,
            );
            Pose::new(s.x, s.y, s.psi)
        })
        .collect()
}

fn road_charges(road: &RoadGeometry, weight: f64) -> RoadCharges {
    RoadCharges {
        weight,
        ..road.charges.clone()
    }
}

/// Runs one closed-loop episode.
pub fn run_episode(
    case: &CaseSpec,
    scenario: &Scenario,
    cfg: &RunConfig,
    hj: Option<&HjPolicy>,
) -> Result<EpisodeResult, SimError> {
    let footprint = scenario.footprint;
    cfg.sim.validate(&footprint)?;
    if cfg.controller == ControllerKind::Hj && cfg.model != VehicleModel::Unicycle {
        return Err(SimError::HjNeedsUnicycle);
    }
    if cfg.controller == ControllerKind::Hj && hj.is_none() {
        return Err(SimError::MissingPolicy(case.scenario));
    }
    let coop = cfg.controller == ControllerKind::Coop;

    // controlled vehicles first, then the scripted obstacles
    let mut vehicles = vec![Vehicle {
        state: cfg.model.initial_state(case.ego_pose, case.ego_speed),
        controlled: true,
        policy: None,
    }];
    let mut order = vec![0usize];
    for (i, o) in case.obstacles.iter().enumerate() {
        if coop && o.controllable {
            vehicles.push(Vehicle {
                state: cfg.model.initial_state(o.pose, o.speed),
                controlled: true,
                policy: None,
            });
            order.push(i + 1);
        }
    }
    let controlled = vehicles.len();
    for (i, o) in case.obstacles.iter().enumerate() {
        if !(coop && o.controllable) {
            vehicles.push(Vehicle {
                state: VehicleModel::Unicycle.initial_state(o.pose, o.speed),
                controlled: false,
                policy: Some(o.policy.clone()),
            });
            order.push(i + 1);
        }
    }
    // maps logged vehicle slots back to case order (ego, obstacle 1, ...)
    let mut slot_of = vec![0usize; vehicles.len()];
    for (slot, &orig) in order.iter().enumerate() {
        slot_of[orig] = slot;
    }

    let mut problem = MpcProblem::new(cfg.model).with_protection(cfg.protection_q);
    problem.horizon = problem.horizon.max(1);
    problem.dt = cfg.sim.period;
    problem.footprint = footprint;
    let mut sampler = cfg.sampler;
    sampler.seed = seed_for(cfg.seed, case);
    let mut mpc = MpcController::new(problem, sampler);
    let road = road_charges(&scenario.road, cfg.weights.road);

    let poses = |vs: &[Vehicle]| -> Vec<Pose> { vs.iter().map(|v| v.state.pose()).collect() };
    let distances = |vs: &[Vehicle]| -> Vec<f64> {
        let ego = footprint.rect(vs[0].state.pose());
        (1..vs.len())
            .map(|orig| rect_distance(&ego, &footprint.rect(vs[slot_of[orig]].state.pose())))
            .collect()
    };
    let find_contact = |vs: &[Vehicle]| -> Option<Contact> {
        let ps = poses(vs);
        (0..controlled).find_map(|i| {
            let others: Vec<(usize, Pose)> = (0..vs.len())
                .filter(|&j| j != i)
                .map(|j| (order[j], ps[j]))
                .collect();
            check_collision(order[i], ps[i], &others, &footprint, &scenario.road)
        })
    };
    let record = |t: f64, vs: &[Vehicle], inputs: Vec<Control>| -> StepRecord {
        let d = distances(vs);
        StepRecord {
            t,
            states: (0..vs.len()).map(|orig| vs[slot_of[orig]].state).collect(),
            inputs,
            min_dist: d.iter().copied().fold(f64::INFINITY, f64::min),
            distances: d,
        }
    };

    let mut result = EpisodeResult {
        scenario: case.scenario,
        case_index: case.index,
        controller: cfg.controller,
        outcome: Outcome::Success,
        termination: Termination::Timeout,
        collision_at_driver: false,
        collision_time: None,
        contact: None,
        controlled,
        steps: Vec::new(),
        solves: Vec::new(),
        hj_selected: Vec::new(),
    };
    let finish_collision =
        |result: &mut EpisodeResult, contact: Contact, t: f64, termination: Termination| {
            result.outcome = Outcome::Collision;
            result.termination = termination;
            result.collision_time = Some(t);
            result.collision_at_driver =
                classify_driver_hit(&contact, &footprint, cfg.sim.r_driver);
            result.contact = Some(contact);
        };

    if let Some(contact) = find_contact(&vehicles) {
        result
            .steps
            .push(record(0.0, &vehicles, vec![[0.0, 0.0]; controlled]));
        let why = if case.feasible {
            Termination::Collision
        } else {
            Termination::InfeasibleStart
        };
        finish_collision(&mut result, contact, 0.0, why);
        return Ok(result);
    }

    let n_steps = (cfg.sim.t_max / cfg.sim.period).round() as usize;
    let dt_sub = cfg.sim.period / cfg.sim.substeps as f64;
    let mut non_decreasing = 0usize;
    let mut prev_dist = distances(&vehicles);

    for step in 0..n_steps {
        let t = step as f64 * cfg.sim.period;
        let inputs: Vec<Control> = match cfg.controller {
            ControllerKind::ApfMpc | ControllerKind::Coop => {
                let predicted: Vec<Vec<Pose>> = vehicles[controlled..]
                    .iter()
                    .map(|v| {
                        let u = v.policy.as_ref().map_or([0.0, 0.0], |p| p.input_at(t));
                        extrapolate(&v.state, u, problem.horizon, problem.dt)
                    })
                    .collect();
                let world = if predicted.is_empty() {
                    PredictedWorld::empty(problem.horizon, road.clone())
                } else {
                    PredictedWorld::from_obstacle_poses(
                        &predicted,
                        &footprint,
                        problem.lambda,
                        cfg.weights.obstacle,
                        road.clone(),
                    )
                };
                let x0s: Vec<VehicleState> =
                    vehicles[..controlled].iter().map(|v| v.state).collect();
                let out = mpc.step(&x0s, &world);
                result.solves.push(SolveRecord {
                    cost: out.solutions[0].cost,
                    warm_cost: out.trace.warm_cost,
                    best_per_iteration: out.trace.best_per_iteration,
                });
                out.applied
            }
            ControllerKind::Hj => {
                let policy = hj.expect("checked above");
                let ego = unicycle_of(&vehicles[0].state);
                let obstacles: Vec<UnicycleState> = vehicles[1..]
                    .iter()
                    .map(|v| unicycle_of(&v.state))
                    .collect();
                let c = hj_control(&ego, &obstacles, policy);
                result.hj_selected.push(c.selected);
                vec![c.input]
            }
        };
        let mut logged_inputs = inputs.clone();
        logged_inputs.resize(controlled, [0.0, 0.0]);
        result.steps.push(record(t, &vehicles, logged_inputs));

        for sub in 0..cfg.sim.substeps {
            let ts = t + sub as f64 * dt_sub;
            for (i, v) in vehicles.iter_mut().enumerate() {
                v.state = if v.controlled {
                    cfg.model.step(&v.state, inputs[i], dt_sub)
                } else {
                    let u = v.policy.as_ref().map_or([0.0, 0.0], |p| p.input_at(ts));
                    VehicleModel::Unicycle.step(&v.state, u, dt_sub)
                };
            }
            if let Some(contact) = find_contact(&vehicles) {
                let tc = ts + dt_sub;
                result
                    .steps
                    .push(record(tc, &vehicles, vec![[0.0, 0.0]; controlled]));
                finish_collision(&mut result, contact, tc, Termination::Collision);
                return Ok(result);
            }
        }

        let d = distances(&vehicles);
        if d.iter().zip(&prev_dist).all(|(now, before)| now >= before) {
            non_decreasing += 1;
        } else {
            non_decreasing = 0;
        }
        prev_dist = d;
        if non_decreasing >= cfg.sim.separation_steps {
            result.termination = Termination::Separation;
            result.steps.push(record(
                t + cfg.sim.period,
                &vehicles,
                vec![[0.0, 0.0]; controlled],
            ));
            return Ok(result);
        }
    }
    result.steps.push(record(
        n_steps as f64 * cfg.sim.period,
        &vehicles,
        vec![[0.0, 0.0]; controlled],
    ));
    Ok(result)
}

/// Reachability policies for each scenario, sharing one relative grid.
#[derive(Debug, Clone, Default)]
pub struct HjPolicies {
    pub by_scenario: BTreeMap<u8, HjPolicy>,
}

impl HjPolicies {
    /// Loads or computes the grids for `scenarios` through `cache`.
    pub fn prepare(
        cache: &HjCache,
        scenarios: &[Scenario],
        settings: &HjSettings,
    ) -> Result<Self, SimError> {
        let bounds = VehicleModel::Unicycle.default_bounds();
        let mut by_scenario = BTreeMap::new();
        let mut relative: Option<Arc<crate::hj::ValueGrid>> = None;
        for s in scenarios {
            let rel = match &relative {
                Some(r) => r.clone(),
                None => {
                    let spec = SubsystemSpec::Relative {
                        ego: bounds,
                        obstacle: bounds,
                        footprint: s.footprint,
                    };
                    let r = Arc::new(cache.load_or_solve(&spec, settings)?);
                    relative = Some(r.clone());
                    r
                }
            };
            let road_spec = SubsystemSpec::Road {
                ego: bounds,
                footprint: s.footprint,
                region: s.road.region.clone(),
                origin: s.road.grid_origin,
            };
            let road = Arc::new(cache.load_or_solve(&road_spec, settings)?);
            by_scenario.insert(
                s.id(),
                HjPolicy {
                    relative: rel,
                    road,
                    road_origin: s.road.grid_origin,
                    ego_bounds: bounds,
                    obstacle_bounds: bounds,
                    input_levels: settings.input_levels,
                },
            );
        }
        Ok(Self { by_scenario })
    }
}

/// Rates of one row of a batch report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Scenario id or "all".
    pub scenario: String,
    pub cases: usize,
    pub successes: usize,
    pub collisions: usize,
    pub driver_hits: usize,
    pub success_rate_pct: f64,
    pub driver_hit_rate_pct: f64,
}

impl ReportRow {
    fn tally<'a>(label: String, episodes: impl Iterator<Item = &'a EpisodeResult>) -> Self {
        let (mut cases, mut successes, mut hits) = (0, 0, 0);
        for e in episodes {
            cases += 1;
            successes += (e.outcome == Outcome::Success) as usize;
            hits += e.collision_at_driver as usize;
        }
        let pct = |n: usize| {
            if cases == 0 {
                0.0
            } else {
                100.0 * n as f64 / cases as f64
            }
        };
        Self {
            scenario: label,
            cases,
            successes,
            collisions: cases - successes,
            driver_hits: hits,
            success_rate_pct: pct(successes),
            driver_hit_rate_pct: pct(hits),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub controller: ControllerKind,
    pub model: String,
    pub protection: bool,
    pub protection_q: f64,
    pub seed: u64,
    pub sim: SimSettings,
    pub rows: Vec<ReportRow>,
}

impl BatchReport {
    pub fn from_episodes(cfg: &RunConfig, episodes: &[EpisodeResult]) -> Self {
        let mut ids: Vec<u8> = episodes.iter().map(|e| e.scenario).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut rows: Vec<ReportRow> = ids
            .iter()
            .map(|&id| {
                ReportRow::tally(id.to_string(), episodes.iter().filter(|e| e.scenario == id))
            })
            .collect();
        rows.push(ReportRow::tally("all".into(), episodes.iter()));
        Self {
            controller: cfg.controller,
            model: cfg.model.name().into(),
            protection: cfg.protection(),
            protection_q: cfg.protection_q,
            seed: cfg.seed,
            sim: cfg.sim,
            rows,
        }
    }

    pub fn overall(&self) -> &ReportRow {
        self.rows
            .last()
            .expect("report always has an aggregate row")
    }

    pub fn row(&self, scenario: u8) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub report: BatchReport,
    pub episodes: Vec<EpisodeResult>,
}

/// Runs every case of every scenario in parallel; results keep case order.
pub fn run_batch(
    scenarios: &[Scenario],
    cases: &[CaseSpec],
    cfg: &RunConfig,
    hj: Option<&HjPolicies>,
) -> Result<Batch, SimError> {
    let by_id: BTreeMap<u8, &Scenario> = scenarios.iter().map(|s| (s.id(), s)).collect();
    let episodes = cases
        .par_iter()
        .map(|case| {
            let scenario = by_id.get(&case.scenario).ok_or_else(|| {
                SimError::Settings(format!("scenario {} not loaded", case.scenario))
            })?;
            let policy = match hj {
                Some(p) => Some(
                    p.by_scenario
                        .get(&case.scenario)
                        .ok_or(SimError::MissingPolicy(case.scenario))?,
                ),
                None => None,
            };
            run_episode(case, scenario, cfg, policy)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Batch {
        report: BatchReport::from_episodes(cfg, &episodes),
        episodes,
    })
}

/// Success and driver-hit rates for one driver charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    pub success_rate_pct: f64,
    pub driver_hit_rate_pct: f64,
}

/// Full-suite batch per driver charge quantity.
pub fn sweep_charge(
    scenarios: &[Scenario],
    cases: &[CaseSpec],
    base: &RunConfig,
    quantities: &[f64],
) -> Result<Vec<(SweepRow, Batch)>, SimError> {
    quantities
        .iter()
        .map(|&q| {
            let cfg = RunConfig {
                protection_q: q,
                ..*base
            };
            let batch = run_batch(scenarios, cases, &cfg, None)?;
            let all = batch.report.overall();
            Ok((
                SweepRow {
                    q,
                    success_rate_pct: all.success_rate_pct,
                    driver_hit_rate_pct: all.driver_hit_rate_pct,
                },
                batch,
            ))
        })
        .collect()
}
