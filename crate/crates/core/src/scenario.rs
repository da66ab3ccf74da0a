//! The eight evaluation scenarios: road layouts as charges and drivable
//! regions, obstacle input schedules, and the initial-condition grids.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charge::{FiniteLineCharge, InfiniteLineCharge, RoadCharges};
use crate::geometry::{point_in_polygon, sat_overlap, Pose, Vec2};
use crate::hj::road_signed_distance;
use crate::vehicle::{Control, InputBounds, VehicleFootprint, VehicleModel};

pub const MPH_TO_MPS: f64 = 0.44704;
pub const SCENARIO_IDS: std::ops::RangeInclusive<u8> = 1..=8;
pub const CASES_PER_SCENARIO: usize = 24;

/// Straight-road scenarios are simulated for X in this range; walls and
/// the drivable region extend [`WALL_MARGIN`] beyond it.
const HIGHWAY_DOMAIN: (f64, f64) = (-50.0, 250.0);
/// Intersection and turn scenarios: half extent of the domain around the crossing.
const LOCAL_DOMAIN: f64 = 50.0;
const WALL_MARGIN: f64 = 200.0;
const VELOCITY_LEVELS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("unknown scenario id {0}")]
    UnknownId(u8),
    #[error("invalid scenario configuration: {0}")]
    Config(String),
}

/// One piece of an open-loop input schedule; the last phase holds forever.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyPhase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until_s: Option<f64>,
    pub r: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObstaclePolicy {
    pub phases: Vec<PolicyPhase>,
}

impl ObstaclePolicy {
    pub fn constant(r: f64, a: f64) -> Self {
        Self {
            phases: vec![PolicyPhase {
                until_s: None,
                r,
                a,
            }],
        }
    }

    pub fn input_at(&self, t: f64) -> Control {
        self.phases
            .iter()
            .find(|p| p.until_s.is_none_or(|u| t < u))
            .or(self.phases.last())
            .map_or([0.0, 0.0], |p| [p.r, p.a])
    }

    pub fn within(&self, bounds: &InputBounds) -> bool {
        self.phases.iter().all(|p| bounds.contains([p.r, p.a]))
    }
}

/// Fixed value or closed interval from the case table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Extent {
    Fixed(f64),
    Range([f64; 2]),
}

impl Extent {
    fn is_range(&self) -> bool {
        matches!(self, Extent::Range(r) if r[0] != r[1])
    }

    fn samples(&self, n: usize) -> Vec<f64> {
        match *self {
            Extent::Fixed(v) => vec![v; n.max(1)],
            Extent::Range([lo, hi]) => {
                if n <= 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..n)
                        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                        .collect()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioId {
    pub id: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadConfig {
    pub lanes: usize,
    pub lane_width_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativePosition {
    pub x: Extent,
    pub y: Extent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CasesConfig {
    pub velocity_mph: [f64; 2],
    pub rel_pos_m: RelativePosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleConfig {
    pub policy: ObstaclePolicy,
}

/// Declarative scenario description, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub road: RoadConfig,
    pub cases: CasesConfig,
    pub obstacles: Vec<ObstacleConfig>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Road structure shared by the charge field, collision checks and the
/// reachability road grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGeometry {
    pub charges: RoadCharges,
    /// Simple counter-clockwise polygon of the drivable surface.
    pub region: Vec<Vec2>,
    pub lane_centers: Vec<Vec<Vec2>>,
    /// Global position of the road reachability grid's origin.
    pub grid_origin: Vec2,
}

impl RoadGeometry {
    pub fn contains(&self, p: Vec2) -> bool {
        point_in_polygon(p, &self.region)
    }
}

/// How the table's relative position maps to the obstacle's global offset
/// from the ego: `offset = base + m · (x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TableMap {
    m: [[f64; 2]; 2],
}

const FORWARD_LATERAL: TableMap = TableMap {
    m: [[0.0, 1.0], [1.0, 0.0]],
};
const FORWARD_NEG_LATERAL: TableMap = TableMap {
    m: [[0.0, 1.0], [-1.0, 0.0]],
};
const XY_NEG_Y: TableMap = TableMap {
    m: [[1.0, 0.0], [0.0, -1.0]],
};
const XY: TableMap = TableMap {
    m: [[1.0, 0.0], [0.0, 1.0]],
};
const NEG_FORWARD_LATERAL: TableMap = TableMap {
    m: [[0.0, -1.0], [1.0, 0.0]],
};

#[derive(Debug, Clone, PartialEq)]
struct ObstacleTemplate {
    base: Vec2,
    table: Option<TableMap>,
    heading: f64,
    speed_ratio: f64,
    policy: ObstaclePolicy,
    controllable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleInit {
    pub pose: Pose,
    pub speed: f64,
    pub policy: ObstaclePolicy,
    /// Can be driven by the cooperative controller.
    pub controllable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub scenario: u8,
    pub index: usize,
    pub velocity_mph: f64,
    pub ego_pose: Pose,
    /// m/s.
    pub ego_speed: f64,
    /// Table relative position (x, y) this case was drawn from.
    pub rel_pos: [f64; 2],
    pub obstacles: Vec<ObstacleInit>,
    /// False when the initial footprints overlap or leave the road.
    pub feasible: bool,
}

impl CaseSpec {
    pub fn id(&self) -> String {
        format!("s{}_c{:02}", self.scenario, self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub road: RoadGeometry,
    pub footprint: VehicleFootprint,
    ego_pose: Pose,
    obstacles: Vec<ObstacleTemplate>,
}

fn infinite_wall(y: f64, d0: f64) -> InfiniteLineCharge {
    InfiniteLineCharge::new(Vec2::new(0.0, y), Vec2::new(1.0, 0.0), 1.0, d0)
}

fn wall(a: Vec2, b: Vec2) -> FiniteLineCharge {
    FiniteLineCharge {
        p0: a,
        p1: b,
        lambda: 1.0,
    }
}

fn straight_road(lanes: usize, w: f64) -> RoadGeometry {
    let top = lanes as f64 * w;
    let (x0, x1) = (
        HIGHWAY_DOMAIN.0 - WALL_MARGIN,
        HIGHWAY_DOMAIN.1 + WALL_MARGIN,
    );
    RoadGeometry {
        charges: RoadCharges {
            infinite: vec![infinite_wall(0.0, w), infinite_wall(top, w)],
            finite: Vec::new(),
            weight: 1.0,
        },
        region: vec![
            Vec2::new(x0, 0.0),
            Vec2::new(x1, 0.0),
            Vec2::new(x1, top),
            Vec2::new(x0, top),
        ],
        lane_centers: (0..lanes)
            .map(|i| {
                let y = (i as f64 + 0.5) * w;
                vec![
                    Vec2::new(HIGHWAY_DOMAIN.0, y),
                    Vec2::new(HIGHWAY_DOMAIN.1, y),
                ]
            })
            .collect(),
        grid_origin: Vec2::ZERO,
    }
}

/// Main carriageway plus an acceleration lane on the right that tapers into
/// it between `MERGE_END` and `TAPER_END`.
fn merge_road(lanes: usize, w: f64) -> RoadGeometry {
    const MERGE_END: f64 = 60.0;
    const TAPER_END: f64 = 90.0;
    let top = lanes as f64 * w;
    let ramp = -(4.0 / 3.0) * w;
    let (x0, x1) = (
        HIGHWAY_DOMAIN.0 - WALL_MARGIN,
        HIGHWAY_DOMAIN.1 + WALL_MARGIN,
    );
    let region = vec![
        Vec2::new(x0, ramp),
        Vec2::new(MERGE_END, ramp),
        Vec2::new(TAPER_END, 0.0),
        Vec2::new(x1, 0.0),
        Vec2::new(x1, top),
        Vec2::new(x0, top),
    ];
    let mut lane_centers: Vec<Vec<Vec2>> = (0..lanes)
        .map(|i| {
            let y = (i as f64 + 0.5) * w;
            vec![
                Vec2::new(HIGHWAY_DOMAIN.0, y),
                Vec2::new(HIGHWAY_DOMAIN.1, y),
            ]
        })
        .collect();
    lane_centers.push(vec![
        Vec2::new(HIGHWAY_DOMAIN.0, 0.5 * ramp),
        Vec2::new(MERGE_END, 0.5 * ramp),
    ]);
    RoadGeometry {
        charges: RoadCharges {
            infinite: vec![infinite_wall(top, w)],
            finite: vec![
                wall(region[0], region[1]),
                wall(region[1], region[2]),
                wall(region[2], region[3]),
            ],
            weight: 1.0,
        },
        region,
        lane_centers,
        grid_origin: Vec2::ZERO,
    }
}

/// Four-way crossing of two roads of half-width `h` centred at `c`; each of
/// the four corners carries a pair of long walls.
fn intersection(c: Vec2, h: f64, w: f64) -> RoadGeometry {
    let far = LOCAL_DOMAIN + WALL_MARGIN;
    let p = |x: f64, y: f64| c + Vec2::new(x, y);
    let region = vec![
        p(h, -far),
        p(h, -h),
        p(far, -h),
        p(far, h),
        p(h, h),
        p(h, far),
        p(-h, far),
        p(-h, h),
        p(-far, h),
        p(-far, -h),
        p(-h, -h),
        p(-h, -far),
    ];
    let mut finite = Vec::new();
    for corner in [1, 4, 7, 10] {
        finite.push(wall(region[corner - 1], region[corner]));
        finite.push(wall(region[corner], region[corner + 1]));
    }
    let offsets = [-0.5 * w, 0.5 * w, -1.5 * w, 1.5 * w];
    let mut lane_centers = Vec::new();
    for o in offsets.into_iter().filter(|o| o.abs() < h) {
        lane_centers.push(vec![p(o, -LOCAL_DOMAIN), p(o, LOCAL_DOMAIN)]);
        lane_centers.push(vec![p(-LOCAL_DOMAIN, o), p(LOCAL_DOMAIN, o)]);
    }
    RoadGeometry {
        charges: RoadCharges {
            infinite: Vec::new(),
            finite,
            weight: 1.0,
        },
        region,
        lane_centers,
        grid_origin: Vec2::ZERO,
    }
}

/// Road arriving from the south that turns 90° to the west. `corner` is the
/// inner corner; the arm width is `width`.
fn left_turn(corner: Vec2, width: f64, w: f64) -> RoadGeometry {
    let far = LOCAL_DOMAIN + WALL_MARGIN;
    let outer = corner + Vec2::new(width, width);
    let region = vec![
        Vec2::new(corner.x, corner.y - far),
        Vec2::new(outer.x, corner.y - far),
        outer,
        Vec2::new(corner.x - far, outer.y),
        Vec2::new(corner.x - far, corner.y),
        corner,
    ];
    let finite = vec![
        wall(region[1], region[2]),
        wall(region[2], region[3]),
        wall(region[4], region[5]),
        wall(region[5], region[0]),
    ];
    let mut lane_centers = Vec::new();
    let mut o = 0.5 * w;
    while o < width {
        lane_centers.push(vec![
            Vec2::new(corner.x + o, corner.y - LOCAL_DOMAIN),
            Vec2::new(corner.x + o, corner.y + o),
            Vec2::new(corner.x - LOCAL_DOMAIN, corner.y + o),
        ]);
        o += w;
    }
    RoadGeometry {
        charges: RoadCharges {
            infinite: Vec::new(),
            finite,
            weight: 1.0,
        },
        region,
        lane_centers,
        grid_origin: Vec2::ZERO,
    }
}

fn obstacle(
    table: Option<TableMap>,
    base: Vec2,
    heading: f64,
    speed_ratio: f64,
    policy: ObstaclePolicy,
) -> ObstacleTemplate {
    ObstacleTemplate {
        base,
        table,
        heading,
        speed_ratio,
        policy,
        controllable: false,
    }
}

/// Built-in configuration of scenario `id`.
pub fn default_config(id: u8) -> Result<ScenarioConfig, ScenarioError> {
    use Extent::{Fixed, Range};
    let (lanes, velocity, x, y, policies): (usize, [f64; 2], Extent, Extent, Vec<ObstaclePolicy>) =
        match id {
            1 => (
                3,
                [45.0, 80.0],
                Fixed(3.6),
                Range([-2.0, 4.0]),
                vec![ObstaclePolicy::constant(-FRAC_PI_2, 3.0)],
            ),
            2 => (
                2,
                [45.0, 80.0],
                Fixed(4.8),
                Range([-4.0, 2.0]),
                vec![ObstaclePolicy {
                    phases: vec![
                        PolicyPhase {
                            until_s: Some(1.0),
                            r: FRAC_PI_4,
                            a: 2.0,
                        },
                        PolicyPhase {
                            until_s: None,
                            r: 0.0,
                            a: 2.0,
                        },
                    ],
                }],
            ),
            3 => (
                2,
                [45.0, 80.0],
                Fixed(3.6),
                Range([-5.0, 3.0]),
                vec![
                    ObstaclePolicy::constant(0.0, 0.0),
                    ObstaclePolicy::constant(0.0, 0.0),
                ],
            ),
            4 => (
                3,
                [45.0, 80.0],
                Fixed(7.2),
                Range([-1.0, 3.0]),
                vec![
                    ObstaclePolicy::constant(0.0, 0.0),
                    ObstaclePolicy {
                        phases: vec![
                            PolicyPhase {
                                until_s: Some(0.6),
                                r: 0.5,
                                a: 0.0,
                            },
                            PolicyPhase {
                                until_s: Some(1.2),
                                r: -0.5,
                                a: 0.0,
                            },
                            PolicyPhase {
                                until_s: None,
                                r: 0.0,
                                a: 0.0,
                            },
                        ],
                    },
                ],
            ),
            5 => (
                4,
                [20.0, 45.0],
                Range([-6.0, -5.0]),
                Range([-5.0, -3.0]),
                vec![ObstaclePolicy::constant(0.0, 0.0)],
            ),
            6 => (
                4,
                [20.0, 45.0],
                Range([-3.0, -1.0]),
                Range([-5.0, -2.0]),
                vec![ObstaclePolicy::constant(FRAC_PI_2, 0.0)],
            ),
            7 => (
                2,
                [20.0, 55.0],
                Range([-8.0, -5.0]),
                Range([-1.0, 1.0]),
                vec![ObstaclePolicy::constant(0.0, 0.0)],
            ),
            8 => (
                2,
                [30.0, 70.0],
                Fixed(4.0),
                Range([-18.0, -10.0]),
                vec![ObstaclePolicy::constant(FRAC_PI_4, 0.0)],
            ),
            other => return Err(ScenarioError::UnknownId(other)),
        };
    Ok(ScenarioConfig {
        scenario: ScenarioId { id },
        road: RoadConfig {
            lanes,
            lane_width_m: 3.6,
        },
        cases: CasesConfig {
            velocity_mph: velocity,
            rel_pos_m: RelativePosition { x, y },
        },
        obstacles: policies
            .into_iter()
            .map(|policy| ObstacleConfig { policy })
            .collect(),
    })
}

/// Scenario `id` with its built-in configuration.
pub fn build_scenario(id: u8) -> Result<Scenario, ScenarioError> {
    Scenario::from_config(&default_config(id)?)
}

impl Scenario {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let w = cfg.road.lane_width_m;
        let lanes = cfg.road.lanes;
        if !(w > 0.0) || lanes == 0 {
            return Err(ScenarioError::Config(
                "lanes and lane width must be positive".into(),
            ));
        }
        let [vlo, vhi] = cfg.cases.velocity_mph;
        if !(vlo > 0.0 && vhi >= vlo) {
            return Err(ScenarioError::Config(format!(
                "velocity range {vlo}..{vhi} mph"
            )));
        }
        let lane = |i: usize| (i as f64 + 0.5) * w;
        let top_lane = lane(lanes - 1);
        let policy = |i: usize| {
            cfg.obstacles
                .get(i)
                .map(|o| o.policy.clone())
                .unwrap_or_default()
        };
        let id = cfg.scenario.id;
        let (road, ego_pose, obstacles) = match id {
            1 => (
                straight_road(lanes, w),
                Pose::new(7.0, lane(1.min(lanes - 1)), 0.0),
                vec![obstacle(
                    Some(FORWARD_LATERAL),
                    Vec2::ZERO,
                    0.0,
                    1.0,
                    policy(0),
                )],
            ),
            2 => (
                merge_road(lanes, w),
                Pose::new(0.0, lane(0), 0.0),
                vec![obstacle(
                    Some(FORWARD_NEG_LATERAL),
                    Vec2::ZERO,
                    0.0,
                    1.1,
                    policy(0),
                )],
            ),
            3 => {
                let mut two = obstacle(Some(FORWARD_NEG_LATERAL), Vec2::ZERO, 0.0, 1.0, policy(1));
                two.controllable = true;
                (
                    straight_road(lanes, w),
                    Pose::new(0.0, top_lane, 0.0),
                    vec![
                        obstacle(None, Vec2::new(15.5, 0.0), 0.0, 0.0, policy(0)),
                        two,
                    ],
                )
            }
            4 => {
                let mut two = obstacle(Some(FORWARD_NEG_LATERAL), Vec2::ZERO, 0.0, 1.0, policy(1));
                two.controllable = true;
                (
                    straight_road(lanes, w),
                    Pose::new(0.0, top_lane, -0.1),
                    vec![
                        obstacle(None, Vec2::new(10.0, -w), 0.0, 0.8, policy(0)),
                        two,
                    ],
                )
            }
            5 | 6 => {
                let c = Vec2::new(10.0, 12.0);
                let road = intersection(c, 0.5 * lanes as f64 * w, w);
                let (ego, heading, ratio) = if id == 5 {
                    (Pose::new(c.x + 0.5 * w, c.y - 8.0, FRAC_PI_2), 0.0, 1.0)
                } else {
                    (Pose::new(c.x + 3.0, c.y - 1.0, 0.75 * PI), PI, 2.0 / 3.0)
                };
                (
                    road,
                    ego,
                    vec![obstacle(
                        Some(XY_NEG_Y),
                        Vec2::ZERO,
                        heading,
                        ratio,
                        policy(0),
                    )],
                )
            }
            7 => {
                let corner = Vec2::new(10.0, 10.0);
                let width = lanes as f64 * w;
                (
                    left_turn(corner, width, w),
                    Pose::new(corner.x + 4.0, corner.y + width - 0.5 * w, PI),
                    vec![obstacle(Some(XY), Vec2::ZERO, PI, 0.0, policy(0))],
                )
            }
            8 => (
                straight_road(lanes, w),
                Pose::new(0.0, lane(0), 0.0),
                vec![obstacle(
                    Some(NEG_FORWARD_LATERAL),
                    Vec2::ZERO,
                    PI,
                    1.0,
                    policy(0),
                )],
            ),
            other => return Err(ScenarioError::UnknownId(other)),
        };
        if obstacles.len() != cfg.obstacles.len() {
            return Err(ScenarioError::Config(format!(
                "scenario {id} has {} obstacles, configuration lists {}",
                obstacles.len(),
                cfg.obstacles.len()
            )));
        }
        let bounds = VehicleModel::Unicycle.default_bounds();
        if let Some(o) = obstacles.iter().find(|o| !o.policy.within(&bounds)) {
            return Err(ScenarioError::Config(format!(
                "obstacle policy {:?} exceeds input bounds",
                o.policy
            )));
        }
        Ok(Self {
            config: cfg.clone(),
            road,
            footprint: VehicleFootprint::default(),
            ego_pose,
            obstacles,
        })
    }

    pub fn id(&self) -> u8 {
        self.config.scenario.id
    }

    pub fn obstacle_count(&self) -> usize {
        self.obstacles.len()
    }

    /// Initial states for one table entry.
    pub fn case_at(&self, index: usize, velocity_mph: f64, rel: [f64; 2]) -> CaseSpec {
        let speed = velocity_mph * MPH_TO_MPS;
        let obstacles = self
            .obstacles
            .iter()
            .map(|o| {
                let mut offset = o.base;
                if let Some(t) = o.table {
                    offset += Vec2::new(
                        t.m[0][0] * rel[0] + t.m[0][1] * rel[1],
                        t.m[1][0] * rel[0] + t.m[1][1] * rel[1],
                    );
                }
                let p = self.ego_pose.position + offset;
                ObstacleInit {
                    pose: Pose::new(p.x, p.y, o.heading),
                    speed: speed * o.speed_ratio,
                    policy: o.policy.clone(),
                    controllable: o.controllable,
                }
            })
            .collect();
        self.finish_case(index, velocity_mph, rel, self.ego_pose, speed, obstacles)
    }

    /// Case with explicit initial states, using this scenario's road and
    /// obstacle schedules.
    pub fn custom_case(&self, ego: Pose, ego_speed: f64, obstacles: &[(Pose, f64)]) -> CaseSpec {
        let inits = self
            .obstacles
            .iter()
            .zip(obstacles)
            .map(|(o, &(pose, speed))| ObstacleInit {
                pose,
                speed,
                policy: o.policy.clone(),
                controllable: o.controllable,
            })
            .collect();
        self.finish_case(0, ego_speed / MPH_TO_MPS, [0.0, 0.0], ego, ego_speed, inits)
    }

    fn finish_case(
        &self,
        index: usize,
        velocity_mph: f64,
        rel: [f64; 2],
        ego_pose: Pose,
        ego_speed: f64,
        obstacles: Vec<ObstacleInit>,
    ) -> CaseSpec {
        let ego_rect = self.footprint.rect(ego_pose);
        let on_road = road_signed_distance(&ego_rect, &self.road.region) > 0.0;
        let clear = obstacles
            .iter()
            .all(|o| sat_overlap(&ego_rect, &self.footprint.rect(o.pose)).is_none())
            && obstacles.iter().enumerate().all(|(i, a)| {
                obstacles[i + 1..].iter().all(|b| {
                    sat_overlap(&self.footprint.rect(a.pose), &self.footprint.rect(b.pose))
                        .is_none()
                })
            });
        CaseSpec {
            scenario: self.id(),
            index,
            velocity_mph,
            ego_pose,
            ego_speed,
            rel_pos: rel,
            obstacles,
            feasible: on_road && clear,
        }
    }

    /// Deterministic velocity × position grid of `n_cases` entries.
    pub fn enumerate_cases(&self, n_cases: usize) -> Result<Vec<CaseSpec>, ScenarioError> {
        if n_cases == 0 || n_cases % VELOCITY_LEVELS != 0 {
            return Err(ScenarioError::Config(format!(
                "{n_cases} cases do not factor into {VELOCITY_LEVELS} velocities"
            )));
        }
        let n_pos = n_cases / VELOCITY_LEVELS;
        let rel = self.config.cases.rel_pos_m;
        let (nx, ny) = match (rel.x.is_range(), rel.y.is_range()) {
            (true, true) => {
                let nx = (1..=n_pos)
                    .filter(|d| n_pos % d == 0 && d * d <= n_pos)
                    .max()
                    .unwrap_or(1);
                (nx, n_pos / nx)
            }
            (true, false) => (n_pos, 1),
            _ => (1, n_pos),
        };
        let xs = rel.x.samples(nx);
        let ys = rel.y.samples(ny);
        let [vlo, vhi] = self.config.cases.velocity_mph;
        let velocities = Extent::Range([vlo, vhi]).samples(VELOCITY_LEVELS);
        let mut cases = Vec::with_capacity(n_cases);
        for &v in &velocities {
            for &x in &xs[..nx] {
                for &y in &ys[..ny] {
                    cases.push(self.case_at(cases.len(), v, [x, y]));
                }
            }
        }
        Ok(cases)
    }
}

/// All built-in cases of all scenarios.
pub fn full_suite() -> Vec<CaseSpec> {
    SCENARIO_IDS
        .flat_map(|id| {
            build_scenario(id)
                .and_then(|s| s.enumerate_cases(CASES_PER_SCENARIO))
                .expect("built-in scenarios are valid")
        })
        .collect()
}
