//! Receding-horizon controller whose cost is the summed potential energy of
//! the predicted ego poses. The optimizer is a sampled cross-entropy descent
//! that also scores a fixed set of deterministic candidates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::charge::{
    system_energy_terms, ChargedBody, FieldConstants, PointCharge, RoadCharges, SENTINEL_ENERGY,
};
use crate::geometry::Pose;
use crate::vehicle::{Control, InputBounds, VehicleFootprint, VehicleModel, VehicleState};

/// Driver point-charge quantity when protection mode is on.
pub const PROTECTION_CHARGE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcProblem {
    pub horizon: usize,
    pub dt: f64,
    pub bounds: InputBounds,
    pub model: VehicleModel,
    /// Charge at the driver position; zero disables protection.
    pub protection_q: f64,
    pub footprint: VehicleFootprint,
    pub field: FieldConstants,
    /// Line density of the ego outline.
    pub lambda: f64,
}

impl MpcProblem {
    pub fn new(model: VehicleModel) -> Self {
        Self {
            horizon: 10,
            dt: 0.05,
            bounds: model.default_bounds(),
            model,
            protection_q: 0.0,
            footprint: VehicleFootprint::default(),
            field: FieldConstants::default(),
            lambda: 1.0,
        }
    }

    pub fn with_protection(mut self, q: f64) -> Self {
        self.protection_q = q;
        self
    }

    /// Charged outline of the ego at `pose`, with the driver charge when enabled.
    pub fn ego_body(&self, pose: Pose) -> ChargedBody {
        let body = ChargedBody::rectangle(&self.footprint.rect(pose), self.lambda, 1.0);
        if self.protection_q > 0.0 {
            body.with_point_charge(PointCharge {
                position: self.footprint.driver_point(pose),
                q: self.protection_q,
            })
        } else {
            body
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSettings {
    pub iterations: usize,
    pub samples: usize,
    pub elites: usize,
    /// Initial sampling deviation as a fraction of each channel's range.
    pub initial_spread: f64,
    /// Lower bound on the refit deviation, same units.
    pub min_spread: f64,
    pub seed: u64,
    /// Negates the steering-channel noise; a mirrored world then sees
    /// mirrored samples.
    pub reflect_steer: bool,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            iterations: 3,
            samples: 64,
            elites: 8,
            initial_spread: 0.35,
            min_spread: 0.02,
            seed: 0,
            reflect_steer: false,
        }
    }
}

/// Obstacle bodies for each of the next `N` steps plus static road charges.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedWorld {
    steps: Vec<Vec<ChargedBody>>,
    pub road: RoadCharges,
}

impl PredictedWorld {
    pub fn new(steps: Vec<Vec<ChargedBody>>, road: RoadCharges) -> Self {
        Self { steps, road }
    }

    pub fn empty(horizon: usize, road: RoadCharges) -> Self {
        Self::new(vec![Vec::new(); horizon], road)
    }

    /// `poses[i][k]` is obstacle `i` at step `k + 1`.
    pub fn from_obstacle_poses(
        poses: &[Vec<Pose>],
        footprint: &VehicleFootprint,
        lambda: f64,
        weight: f64,
        road: RoadCharges,
    ) -> Self {
        let horizon = poses.first().map_or(0, Vec::len);
        assert!(
            poses.iter().all(|p| p.len() == horizon),
            "uneven obstacle predictions"
        );
        let steps = (0..horizon)
            .map(|k| {
                poses
                    .iter()
                    .map(|p| ChargedBody::rectangle(&footprint.rect(p[k]), lambda, weight))
                    .collect()
            })
            .collect();
        Self { steps, road }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn obstacles_at(&self, step: usize) -> &[ChargedBody] {
        &self.steps[step]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSolution {
    pub inputs: Vec<Control>,
    /// Predicted states z₁..z_N.
    pub states: Vec<VehicleState>,
    pub cost: f64,
}

impl ControlSolution {
    /// Inputs shifted one step left with the last one repeated.
    pub fn shifted(&self) -> Vec<Control> {
        shift(&self.inputs)
    }
}

fn shift(inputs: &[Control]) -> Vec<Control> {
    let mut out: Vec<Control> = inputs.iter().skip(1).copied().collect();
    if let Some(&last) = inputs.last() {
        out.push(last);
    }
    out
}

/// Diagnostics of one solve.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveTrace {
    /// Best cost found after the deterministic candidates and after each
    /// sampling iteration.
    pub best_per_iteration: Vec<f64>,
    pub zero_cost: f64,
    pub warm_cost: Option<f64>,
    pub evaluations: usize,
}

/// Euler rollout with one step per horizon interval.
pub fn rollout(
    model: &VehicleModel,
    x0: &VehicleState,
    inputs: &[Control],
    dt: f64,
) -> Vec<VehicleState> {
    let mut states = Vec::with_capacity(inputs.len());
    let mut x = *x0;
    for &c in inputs {
        x = model.step(&x, c, dt);
        states.push(x);
    }
    states
}

/// Σₖ E(zₖ) over the rolled-out horizon. The sum stops at the first step
/// with a singular term: that step contributes its finite part and every
/// step from it to the end of the horizon adds one sentinel, so colliding
/// rollouts rank by contact time first and approach energy second.
pub fn horizon_cost(
    x0: &VehicleState,
    inputs: &[Control],
    world: &PredictedWorld,
    prob: &MpcProblem,
) -> f64 {
    let states = rollout(&prob.model, x0, inputs, prob.dt);
    joint_states_cost(std::slice::from_ref(&states), world, prob)
}

/// Joint cost of several controlled vehicles: each against the obstacles and
/// road, plus half the mutual energy of every ordered pair.
fn joint_states_cost(
    trajectories: &[Vec<VehicleState>],
    world: &PredictedWorld,
    prob: &MpcProblem,
) -> f64 {
    let empty = RoadCharges::default();
    let steps = world.horizon();
    let mut total = 0.0;
    for k in 0..steps {
        let bodies: Vec<ChargedBody> = trajectories
            .iter()
            .map(|t| prob.ego_body(t[k].pose()))
            .collect();
        let mut finite = 0.0;
        let mut singular = 0;
        for (i, body) in bodies.iter().enumerate() {
            let own = system_energy_terms(body, world.obstacles_at(k), &world.road, prob.field);
            finite += own.body + own.point;
            singular += own.singular;
            for (j, other) in bodies.iter().enumerate() {
                if i != j {
                    let mutual =
                        system_energy_terms(body, std::slice::from_ref(other), &empty, prob.field);
                    finite += 0.5 * (mutual.body + mutual.point);
                    singular += mutual.singular;
                }
            }
        }
        total += finite;
        if singular > 0 {
            return total + SENTINEL_ENERGY * (steps - k) as f64;
        }
    }
    total
}

/// Joint horizon cost for several controlled vehicles.
pub fn cooperative_cost(
    x0s: &[VehicleState],
    inputs: &[Vec<Control>],
    world: &PredictedWorld,
    prob: &MpcProblem,
) -> f64 {
    let trajectories: Vec<Vec<VehicleState>> = x0s
        .iter()
        .zip(inputs)
        .map(|(x0, u)| rollout(&prob.model, x0, u, prob.dt))
        .collect();
    joint_states_cost(&trajectories, world, prob)
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct Rank {
    sentinel: bool,
    cost: f64,
    effort: f64,
}

struct Scored {
    plan: Vec<Vec<Control>>,
    rank: Rank,
}

struct Descent<'a> {
    x0s: &'a [VehicleState],
    world: &'a PredictedWorld,
    prob: &'a MpcProblem,
    evaluations: usize,
}

impl Descent<'_> {
    fn score(&mut self, plan: Vec<Vec<Control>>) -> Scored {
        self.evaluations += 1;
        let cost = cooperative_cost(self.x0s, &plan, self.world, self.prob);
        let b = &self.prob.bounds;
        let effort = plan
            .iter()
            .map(|u| (u[0][0] / b.span(0)).abs() + (u[0][1] / b.span(1)).abs())
            .sum();
        Scored {
            plan,
            rank: Rank {
                sentinel: cost >= SENTINEL_ENERGY,
                cost,
                effort,
            },
        }
    }
}

fn better(a: &Rank, b: &Rank) -> bool {
    a.partial_cmp(b) == Some(std::cmp::Ordering::Less)
}

/// Stateful receding-horizon controller owning its sampler stream and warm start.
#[derive(Debug, Clone)]
pub struct MpcController {
    pub problem: MpcProblem,
    pub sampler: SamplerSettings,
    rng: ChaCha8Rng,
    warm: Option<Vec<Vec<Control>>>,
}

/// Result of one receding-horizon step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// First input of each controlled vehicle.
    pub applied: Vec<Control>,
    pub solutions: Vec<ControlSolution>,
    pub trace: SolveTrace,
}

impl MpcController {
    pub fn new(problem: MpcProblem, sampler: SamplerSettings) -> Self {
        Self {
            problem,
            sampler,
            rng: ChaCha8Rng::seed_from_u64(sampler.seed),
            warm: None,
        }
    }

    pub fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.sampler.seed);
        self.warm = None;
    }

    /// Single-vehicle solve with an explicit warm start (already shifted).
    pub fn solve(
        &mut self,
        x0: &VehicleState,
        world: &PredictedWorld,
        warm: Option<&[Control]>,
    ) -> (ControlSolution, SolveTrace) {
        let warm = warm.map(|w| vec![w.to_vec()]);
        let (mut sols, trace) = self.solve_joint(std::slice::from_ref(x0), world, warm.as_deref());
        (sols.remove(0), trace)
    }

    /// Joint solve over all controlled vehicles.
    pub fn solve_cooperative(
        &mut self,
        x0s: &[VehicleState],
        world: &PredictedWorld,
        warm: Option<&[Vec<Control>]>,
    ) -> (Vec<ControlSolution>, SolveTrace) {
        self.solve_joint(x0s, world, warm)
    }

    /// Solves, applies the first inputs, and keeps the shifted plan as the
    /// next warm start.
    pub fn step(&mut self, x0s: &[VehicleState], world: &PredictedWorld) -> StepOutput {
        let warm = self.warm.take().filter(|w| w.len() == x0s.len());
        let (solutions, trace) = self.solve_joint(x0s, world, warm.as_deref());
        self.warm = Some(solutions.iter().map(ControlSolution::shifted).collect());
        StepOutput {
            applied: solutions.iter().map(|s| s.inputs[0]).collect(),
            solutions,
            trace,
        }
    }

    fn solve_joint(
        &mut self,
        x0s: &[VehicleState],
        world: &PredictedWorld,
        warm: Option<&[Vec<Control>]>,
    ) -> (Vec<ControlSolution>, SolveTrace) {
        let prob = self.problem;
        let n = prob.horizon;
        assert_eq!(
            world.horizon(),
            n,
            "world horizon differs from the problem horizon"
        );
        let m = x0s.len();
        let bounds = prob.bounds;
        let settings = self.sampler;
        let mut descent = Descent {
            x0s,
            world,
            prob: &prob,
            evaluations: 0,
        };
        let mut trace = SolveTrace::default();

        let zero = vec![vec![bounds.clip([0.0, 0.0]); n]; m];
        let mut best = descent.score(zero);
        trace.zero_cost = best.rank.cost;

        let warm_plan: Option<Vec<Vec<Control>>> = warm.map(|w| {
            w.iter()
                .map(|u| {
                    assert_eq!(u.len(), n, "warm start length differs from the horizon");
                    u.iter().map(|&c| bounds.clip(c)).collect()
                })
                .collect()
        });
        if let Some(plan) = &warm_plan {
            let s = descent.score(plan.clone());
            trace.warm_cost = Some(s.rank.cost);
            if better(&s.rank, &best.rank) {
                best = s;
            }
        }
        for &r in &[
            bounds.lo[0],
            0.0f64.clamp(bounds.lo[0], bounds.hi[0]),
            bounds.hi[0],
        ] {
            for &a in &[
                bounds.lo[1],
                0.0f64.clamp(bounds.lo[1], bounds.hi[1]),
                bounds.hi[1],
            ] {
                let s = descent.score(vec![vec![[r, a]; n]; m]);
                if better(&s.rank, &best.rank) {
                    best = s;
                }
            }
        }
        trace.best_per_iteration.push(best.rank.cost);

        let steer = prob.model.steer_channel();
        let mut mean: Vec<Vec<Control>> = warm_plan.unwrap_or_else(|| best.plan.clone());
        let mut spread: Vec<Vec<Control>> = vec![
            vec![
                [
                    settings.initial_spread * bounds.span(0),
                    settings.initial_spread * bounds.span(1)
                ];
                n
            ];
            m
        ];
        let floor = [
            settings.min_spread * bounds.span(0),
            settings.min_spread * bounds.span(1),
        ];
        let elites = settings.elites.clamp(1, settings.samples.max(1));

        for _ in 0..settings.iterations {
            let mut population: Vec<Scored> = Vec::with_capacity(settings.samples);
            for _ in 0..settings.samples {
                let plan: Vec<Vec<Control>> = (0..m)
                    .map(|i| {
                        (0..n)
                            .map(|k| {
                                let mut c = [0.0; 2];
                                for ch in 0..2 {
                                    let mut eps: f64 = StandardNormal.sample(&mut self.rng);
                                    if settings.reflect_steer && ch == steer {
                                        eps = -eps;
                                    }
                                    c[ch] = mean[i][k][ch] + spread[i][k][ch] * eps;
                                }
                                bounds.clip(c)
                            })
                            .collect()
                    })
                    .collect();
                population.push(descent.score(plan));
            }
            population.sort_by(|a, b| {
                a.rank
                    .partial_cmp(&b.rank)
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let elite = &population[..elites.min(population.len())];
            for i in 0..m {
                for k in 0..n {
                    for ch in 0..2 {
                        let mu = elite.iter().map(|s| s.plan[i][k][ch]).sum::<f64>()
                            / elite.len() as f64;
                        let var = elite
                            .iter()
                            .map(|s| (s.plan[i][k][ch] - mu).powi(2))
                            .sum::<f64>()
                            / elite.len() as f64;
                        mean[i][k][ch] = mu;
                        spread[i][k][ch] = var.sqrt().max(floor[ch]);
                    }
                }
            }
            if let Some(top) = population.into_iter().next() {
                if better(&top.rank, &best.rank) {
                    best = top;
                }
            }
            trace.best_per_iteration.push(best.rank.cost);
        }
        trace.evaluations = descent.evaluations;

        let solutions = best
            .plan
            .into_iter()
            .zip(x0s)
            .map(|(inputs, x0)| ControlSolution {
                states: rollout(&prob.model, x0, &inputs, prob.dt),
                inputs,
                cost: best.rank.cost,
            })
            .collect();
        (solutions, trace)
    }
}
