use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use apfmpc::ga::{self, GaConfig};
use apfmpc::hj::{HjCache, HjSettings};
use apfmpc::mpc::{MpcProblem, PROTECTION_CHARGE};
use apfmpc::report::{self, RunMeta};
use apfmpc::scenario::{
    default_config, Scenario, ScenarioConfig, CASES_PER_SCENARIO, SCENARIO_IDS,
};
use apfmpc::sim::{self, ControllerKind, EpisodeResult, HjPolicies, RunConfig};
use apfmpc::vehicle::{BicycleParams, VehicleModel};

#[derive(Parser)]
#[command(
    name = "apfmpc",
    version,
    about = "Potential-field MPC and HJ baseline on the emergency scenario suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Controller {
    ApfMpc,
    Hj,
    Coop,
}

impl From<Controller> for ControllerKind {
    fn from(c: Controller) -> Self {
        match c {
            Controller::ApfMpc => ControllerKind::ApfMpc,
            Controller::Hj => ControllerKind::Hj,
            Controller::Coop => ControllerKind::Coop,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Unicycle,
    Bicycle,
}

impl From<Model> for VehicleModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Unicycle => VehicleModel::Unicycle,
            Model::Bicycle => VehicleModel::Bicycle(BicycleParams::default()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Dump {
    None,
    Collisions,
    All,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario id 1-8 or "all".
    #[arg(long, default_value = "all")]
    scenario: String,
    /// JSON scenario definitions overriding the built-in ones (matched by id).
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Vec<Scenario>> {
        let ids: Vec<u8> = if self.scenario == "all" {
            SCENARIO_IDS.collect()
        } else {
            let id: u8 = self
                .scenario
                .parse()
                .context("scenario must be 1-8 or all")?;
            if !SCENARIO_IDS.contains(&id) {
                bail!("scenario {id} is not in 1-8");
            }
            vec![id]
        };
        let mut overrides = Vec::new();
        for path in &self.configs {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            overrides.push(ScenarioConfig::from_json(&text)?);
        }
        ids.into_iter()
            .map(|id| {
                let cfg = match overrides.iter().find(|c| c.scenario.id == id) {
                    Some(c) => c.clone(),
                    None => default_config(id)?,
                };
                Ok(Scenario::from_config(&cfg)?)
            })
            .collect()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the case grid of one or all scenarios and write the report.
    Run {
        #[command(flatten)]
        scenarios: ScenarioArgs,
        #[arg(long, value_enum, default_value = "apf-mpc")]
        controller: Controller,
        #[arg(long, value_enum, default_value = "unicycle")]
        model: Model,
        #[arg(long, value_enum, default_value = "off")]
        protection: Toggle,
        /// Driver charge used when protection is on.
        #[arg(long, default_value_t = PROTECTION_CHARGE)]
        q: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "hj-cache")]
        hj_cache: PathBuf,
        /// Which episodes get CSV/JSON/SVG files.
        #[arg(long, value_enum, default_value = "all")]
        episodes: Dump,
    },
    /// Solve and cache the reachability value grids.
    PrecomputeHj {
        #[command(flatten)]
        scenarios: ScenarioArgs,
        #[arg(long, default_value = "hj-cache")]
        hj_cache: PathBuf,
    },
    /// Full-suite batch per driver charge quantity.
    SweepCharge {
        #[command(flatten)]
        scenarios: ScenarioArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,7")]
        quantities: Vec<f64>,
        #[arg(long, value_enum, default_value = "unicycle")]
        model: Model,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-render the SVG plots of a saved episode JSON.
    Plot {
        #[arg(long)]
        episode: PathBuf,
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        /// Defaults to the episode's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-objective GA over the APF parameters on one case.
    Tune {
        #[arg(long)]
        scenario: u8,
        #[arg(long)]
        case: usize,
        #[arg(long, default_value_t = 60.0)]
        budget_s: f64,
        #[arg(long, default_value_t = 16)]
        population: usize,
        /// Also tune the obstacle and road weights within [lo, hi].
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "front.csv")]
        out: PathBuf,
    },
    /// Print the built-in JSON definition of a scenario.
    ScenarioConfig {
        #[arg(long)]
        scenario: u8,
    },
}

fn run_config(
    controller: ControllerKind,
    model: VehicleModel,
    protection: Toggle,
    q: f64,
    seed: u64,
) -> RunConfig {
    let q = match protection {
        Toggle::On => q,
        Toggle::Off => 0.0,
    };
    RunConfig::new(controller, model, q, seed)
}

fn write_meta(out: &Path, cfg: &RunConfig) -> Result<()> {
    let mut problem = MpcProblem::new(cfg.model);
    problem.dt = cfg.sim.period;
    report::save_json(
        &out.join("run_meta.json"),
        &RunMeta::new(&cfg.sim, cfg.seed, &problem, &cfg.sampler),
    )?;
    Ok(())
}

fn dump_episodes(
    out: &Path,
    scenarios: &[Scenario],
    episodes: &[EpisodeResult],
    cfg: &RunConfig,
    which: Dump,
) -> Result<()> {
    let bounds = cfg.model.default_bounds();
    for ep in episodes {
        let keep = match which {
            Dump::None => false,
            Dump::Collisions => ep.outcome == sim::Outcome::Collision,
            Dump::All => true,
        };
        if !keep {
            continue;
        }
        let s = scenarios
            .iter()
            .find(|s| s.id() == ep.scenario)
            .expect("episode scenario loaded");
        report::save_episode(out, ep, &s.road.region, &s.footprint, &bounds)?;
    }
    Ok(())
}

fn print_rows(report: &sim::BatchReport) {
    for row in &report.rows {
        println!(
            "scenario {:>3}  cases {:>3}  success {:>7.2}%  driver hits {:>6.2}%",
            row.scenario, row.cases, row.success_rate_pct, row.driver_hit_rate_pct
        );
    }
}

fn cases_of(scenarios: &[Scenario]) -> Result<Vec<apfmpc::scenario::CaseSpec>> {
    let mut cases = Vec::new();
    for s in scenarios {
        cases.extend(s.enumerate_cases(CASES_PER_SCENARIO)?);
    }
    Ok(cases)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenarios,
            controller,
            model,
            protection,
            q,
            seed,
            out,
            hj_cache,
            episodes,
        } => {
            let scenarios = scenarios.load()?;
            let cfg = run_config(controller.into(), model.into(), protection, q, seed);
            let policies = if cfg.controller == ControllerKind::Hj {
                Some(HjPolicies::prepare(
                    &HjCache::new(hj_cache),
                    &scenarios,
                    &cfg.hj,
                )?)
            } else {
                None
            };
            let cases = cases_of(&scenarios)?;
            let batch = sim::run_batch(&scenarios, &cases, &cfg, policies.as_ref())?;
            fs::create_dir_all(&out)?;
            report::save_report_csv(&out.join("report.csv"), std::slice::from_ref(&batch.report))?;
            write_meta(&out, &cfg)?;
            dump_episodes(&out, &scenarios, &batch.episodes, &cfg, episodes)?;
            print_rows(&batch.report);
        }
        Command::PrecomputeHj {
            scenarios,
            hj_cache,
        } => {
            let scenarios = scenarios.load()?;
            let started = std::time::Instant::now();
            HjPolicies::prepare(&HjCache::new(&hj_cache), &scenarios, &HjSettings::default())?;
            println!(
                "value grids ready in {} ({:.1} s)",
                hj_cache.display(),
                started.elapsed().as_secs_f64()
            );
        }
        Command::SweepCharge {
            scenarios,
            quantities,
            model,
            seed,
            out,
        } => {
            let scenarios = scenarios.load()?;
            let cases = cases_of(&scenarios)?;
            let base = RunConfig::new(ControllerKind::ApfMpc, model.into(), 0.0, seed);
            let results = sim::sweep_charge(&scenarios, &cases, &base, &quantities)?;
            fs::create_dir_all(&out)?;
            let rows: Vec<_> = results.iter().map(|(r, _)| *r).collect();
            report::write_sweep_csv(fs::File::create(out.join("sweep.csv"))?, &rows)?;
            let reports: Vec<_> = results.iter().map(|(_, b)| b.report.clone()).collect();
            report::save_report_csv(&out.join("report.csv"), &reports)?;
            write_meta(&out, &base)?;
            for r in rows {
                println!(
                    "q {:>5.2}  success {:>7.2}%  driver hits {:>6.2}%",
                    r.q, r.success_rate_pct, r.driver_hit_rate_pct
                );
            }
        }
        Command::Plot {
            episode,
            configs,
            out,
        } => {
            let text = fs::read_to_string(&episode)
                .with_context(|| format!("reading {}", episode.display()))?;
            let ep: EpisodeResult = serde_json::from_str(&text).context("parsing episode JSON")?;
            let scenario = ScenarioArgs {
                scenario: ep.scenario.to_string(),
                configs,
            }
            .load()?
            .remove(0);
            let out =
                out.unwrap_or_else(|| episode.parent().map(Path::to_path_buf).unwrap_or_default());
            fs::create_dir_all(&out)?;
            let id = ep.id();
            let model = if matches!(
                ep.steps.first().map(|s| s.states[0]),
                Some(apfmpc::vehicle::VehicleState::Bicycle(_))
            ) {
                VehicleModel::Bicycle(BicycleParams::default())
            } else {
                VehicleModel::Unicycle
            };
            fs::write(
                out.join(format!("episode_{id}.svg")),
                report::trajectory_svg(&ep, &scenario.road.region, &scenario.footprint),
            )?;
            fs::write(
                out.join(format!("inputs_{id}.svg")),
                report::inputs_svg(&ep, &model.default_bounds()),
            )?;
            println!(
                "wrote episode_{id}.svg and inputs_{id}.svg to {}",
                out.display()
            );
        }
        Command::Tune {
            scenario,
            case,
            budget_s,
            population,
            weights,
            seed,
            out,
        } => {
            if !(budget_s > 0.0) {
                bail!("budget must be positive");
            }
            let s = ScenarioArgs {
                scenario: scenario.to_string(),
                configs: Vec::new(),
            }
            .load()?
            .remove(0);
            let cases = s.enumerate_cases(CASES_PER_SCENARIO)?;
            let spec = cases
                .get(case)
                .with_context(|| format!("case index must be below {}", cases.len()))?;
            let config = GaConfig {
                population,
                budget: Duration::from_secs_f64(budget_s),
                weight_bounds: weights.map(|w| [w[0], w[1]]),
                seed,
                ..GaConfig::default()
            };
            let base = RunConfig::new(ControllerKind::ApfMpc, VehicleModel::Unicycle, 0.0, seed);
            let result = ga::optimize(&config, spec, &s, &base)?;
            ga::write_front_csv(fs::File::create(&out)?, &result.front)?;
            println!(
                "{} generations, {} evaluations in {:.1} s; {} front points written to {}",
                result.generations,
                result.evaluations,
                result.elapsed.as_secs_f64(),
                result.front.len(),
                out.display()
            );
        }
        Command::ScenarioConfig { scenario } => {
            println!("{}", default_config(scenario)?.to_json());
        }
    }
    Ok(())
}
