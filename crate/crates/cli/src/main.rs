use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dlm_attack::attack::{AttackOutcome, Objective};
use dlm_attack::model::TimeSeries;
use dlm_attack::monitor::run_monitor;
use dlm_attack::scenario::{self, create_dir, Prepared, ScenarioConfig};

const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "dlm-attack",
    version,
    about = "Poisson dynamic models, Bayes-factor monitoring and decision-flipping attacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate (or load) the scenario series and write series.csv.
    Simulate(Common),
    /// Filter to alpha and write forecast.csv.
    Forecast(Common),
    /// Write the clean monitor trace, and optionally one for another series.
    Monitor {
        #[command(flatten)]
        common: Common,
        /// Series to monitor with the same model and seeds (t,y CSV).
        #[arg(long)]
        attacked: Option<PathBuf>,
    },
    /// Write the clean expected-utility table to decision.csv.
    Decide(Common),
    /// Synthesize one attack.
    Attack {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Bayes)]
        objective: ObjectiveArg,
    },
    /// Run the Bayes-factor and the L2 attack and compare them.
    Compare(Common),
    /// Full pipeline with the Bayes-factor attack and report.json.
    RunScenario(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario config (TOML, or JSON with a .json extension).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: ad_company or inventory.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    /// Maximise the minimum cumulative Bayes factor.
    Bayes,
    /// Minimise the L2 norm of the perturbation.
    Norm,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            (None, Some(name)) => match ScenarioConfig::preset(name) {
                Some(cfg) => cfg,
                None => bail!("unknown preset {name:?}"),
            },
            (None, None) => bail!("pass --config <path> or --preset <name>"),
        };
        if let Some(seed) = self.seed {
            cfg = cfg.with_master_seed(seed);
        }
        Ok(cfg)
    }

    fn prepare(&self) -> Result<Prepared> {
        let prepared = Prepared::new(self.load()?)?;
        create_dir(&self.out)?;
        Ok(prepared)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(c) => {
            c.prepare()?.write_series(&c.out)?;
        }
        Command::Forecast(c) => {
            let p = c.prepare()?;
            p.write_series(&c.out)?;
            p.write_forecast(&c.out)?;
        }
        Command::Monitor {
            common: c,
            attacked,
        } => {
            let p = c.prepare()?;
            p.write_clean_monitor(&c.out)?;
            if let Some(path) = attacked {
                monitor_series(&p, &path, &c.out.join("monitor_attacked.csv"))?;
            }
        }
        Command::Decide(c) => {
            let p = c.prepare()?;
            p.write_decision(&c.out)?;
            println!("{}", p.clean().decision);
        }
        Command::Attack {
            common: c,
            objective,
        } => {
            let p = c.prepare()?;
            let objective = match objective {
                ObjectiveArg::Bayes => Objective::MinBayesFactor,
                ObjectiveArg::Norm => Objective::NegativeL2,
            };
            match scenario::run_attack(&p, objective, &c.out)? {
                AttackOutcome::Found(r) => println!(
                    "goal satisfied: {}, S* = {:e}",
                    r.goal_satisfied, r.objective_s_star
                ),
                AttackOutcome::Infeasible(r) => {
                    eprintln!("no feasible attack: {}", r.reason);
                    return Ok(ExitCode::from(EXIT_INFEASIBLE));
                }
            }
        }
        Command::Compare(c) => {
            let report = scenario::compare_attacks(&c.load()?, &c.out)?;
            print!("{}", scenario::to_json(&report)?);
            if report.is_infeasible() {
                return Ok(ExitCode::from(EXIT_INFEASIBLE));
            }
        }
        Command::RunScenario(c) => {
            let report = scenario::run_scenario(&c.load()?, &c.out)?;
            print!("{}", scenario::to_json(&report)?);
            if report.is_infeasible() {
                return Ok(ExitCode::from(EXIT_INFEASIBLE));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn monitor_series(p: &Prepared, series: &Path, out: &Path) -> Result<()> {
    let series = TimeSeries::load(series)?;
    let cfg = &p.config;
    let trace = run_monitor(
        &series,
        &cfg.model,
        &cfg.monitor,
        cfg.n_particles,
        p.seeds.filter,
    )?;
    let file = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    trace.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}
