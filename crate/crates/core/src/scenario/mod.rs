//! End-to-end scenarios: build or load a series, fit the defender's model,
//! forecast, decide, attack and write every artifact to an output directory.
//!
//! All randomness is derived from `master_seed`, so a scenario run is
//! byte-for-byte reproducible.

mod config;
mod presets;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    AttackConfig, DecisionConfig, GoalConfig, ScenarioConfig, ScenarioName, SeedSearch,
    SeriesSource,
};

use crate::attack::{
    l2_norm, synthesize, AttackContext, AttackGoal, AttackOutcome, AttackResult, AttackWindow,
    DefenderSetup, Evaluation, InfeasibilityReport, Objective,
};
use crate::decision::Decision;
use crate::error::{Error, Result, StageContext};
use crate::model::{simulate, TimeSeries};
use crate::monitor::MonitorTrace;
use crate::rng::derive_seed;

/// Minimum ratio `min Ṽ / min V` over the window at which the attacked
/// window's Bayes factors count as not substantially different from the
/// clean ones.
pub const SIMILARITY_RATIO: f64 = 0.5;

/// Sub-seeds derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedPlan {
    pub master: u64,
    pub simulate: u64,
    pub filter: u64,
    pub forecast: u64,
    pub anneal: u64,
}

impl SeedPlan {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            simulate: derive_seed(master, "simulate"),
            filter: derive_seed(master, "filter"),
            forecast: derive_seed(master, "forecast"),
            anneal: derive_seed(master, "anneal"),
        }
    }
}

/// A scenario with its series fixed and the defender's clean pass done.
pub struct Prepared {
    pub config: ScenarioConfig,
    pub seeds: SeedPlan,
    /// Seed the series was simulated with, if it was simulated.
    pub series_seed: Option<u64>,
    pub context: AttackContext<f64>,
}

impl Prepared {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let seeds = SeedPlan::new(config.master_seed);
        let window = AttackWindow {
            alpha: config.alpha,
            h: config.attack.h,
        };
        let setup = |config: &ScenarioConfig| DefenderSetup {
            spec: config.model.clone(),
            monitor: config.monitor,
            problem: config.problem(),
            n_particles: config.n_particles,
            n_paths: config.n_forecast_paths,
            filter_seed: seeds.filter,
            forecast_seed: seeds.forecast,
        };
        let (series_seed, context) = match &config.series {
            SeriesSource::Csv { path } => {
                let series = TimeSeries::load(path).stage("load series")?;
                let ctx = AttackContext::new(series, window, setup(&config)).stage("clean pass")?;
                (None, ctx)
            }
            SeriesSource::Simulate {
                length,
                seed,
                truth,
                search,
            } => {
                let truth = truth.as_ref().unwrap_or(&config.model);
                let base = seed.unwrap_or(seeds.simulate);
                let attempts = search.as_ref().map_or(1, |s| s.attempts.max(1));
                let mut found = None;
                for i in 0..attempts {
                    let s = if i == 0 {
                        base
                    } else {
                        derive_seed(base, &format!("retry{i}"))
                    };
                    let (series, _) = simulate(truth, *length, s).stage("simulate")?;
                    let ctx =
                        AttackContext::new(series, window, setup(&config)).stage("clean pass")?;
                    if search.as_ref().is_none_or(|c| accepts(c, &config, &ctx)) {
                        found = Some((Some(s), ctx));
                        break;
                    }
                }
                found.ok_or_else(|| {
                    Error::config(format!(
                        "no simulated series met the seed-search conditions in {attempts} attempts"
                    ))
                })?
            }
        };
        Ok(Self {
            config,
            seeds,
            series_seed,
            context,
        })
    }

    pub fn series(&self) -> &TimeSeries {
        &self.context.series
    }

    pub fn clean(&self) -> &Evaluation<f64> {
        self.context.clean_evaluation()
    }

    /// Attack goal, resolving fractions against the clean decision.
    pub fn goal(&self) -> Result<AttackGoal> {
        self.config.attack.goal.resolve(self.clean().decision)
    }

    pub fn attack(&self, objective: Objective) -> Result<AttackOutcome<f64>> {
        let mut sa = match objective {
            Objective::MinBayesFactor => self.config.attack.sa,
            Objective::NegativeL2 => self.config.attack.norm_sa.unwrap_or(self.config.attack.sa),
        };
        sa.seed = self.seeds.anneal;
        synthesize(
            &self.context,
            objective,
            &self.goal()?,
            &self.config.attack.region,
            &sa,
        )
        .stage("attack")
    }

    fn window_bounds(&self) -> (i64, i64) {
        (self.context.window.start(), self.config.alpha)
    }

    pub fn write_series(&self, dir: &Path) -> Result<()> {
        self.series().save(dir.join("series.csv"))
    }

    pub fn write_forecast(&self, dir: &Path) -> Result<()> {
        write_with(&dir.join("forecast.csv"), |w| {
            self.clean().forecast.write_csv(w)
        })
    }

    pub fn write_clean_monitor(&self, dir: &Path) -> Result<()> {
        write_with(&dir.join("monitor_clean.csv"), |w| {
            self.context.clean_trace().write_csv(w)
        })
    }

    pub fn write_decision(&self, dir: &Path) -> Result<()> {
        write_with(&dir.join("decision.csv"), |w| {
            self.clean().table.write_csv(w)
        })
    }

    /// Writes the attacked series, its monitor trace, forecast, decision table,
    /// the attack result and its annealing trace, with `suffix` appended to each
    /// file stem.
    fn write_attack(
        &self,
        dir: &Path,
        result: &AttackResult<f64>,
        suffix: &str,
    ) -> Result<AttackSummary> {
        let window = &result.attacked_window;
        let attacked = self.context.attacked_series(window)?;
        attacked.save(dir.join(format!("attacked{suffix}.csv")))?;
        let trace = self.context.trace_with(window)?;
        write_with(&dir.join(format!("monitor_attacked{suffix}.csv")), |w| {
            trace.write_csv(w)
        })?;
        let eval = self.context.evaluate(window)?;
        write_with(&dir.join(format!("forecast_attacked{suffix}.csv")), |w| {
            eval.forecast.write_csv(w)
        })?;
        write_with(&dir.join(format!("decision_attacked{suffix}.csv")), |w| {
            eval.table.write_csv(w)
        })?;
        write_json(&dir.join(format!("attack{suffix}.json")), result)?;
        write_with(&dir.join(format!("trace{suffix}.csv")), |w| {
            result.write_trace_csv(w)
        })?;
        Ok(self.summarize(result, &trace, &eval))
    }

    fn summarize(
        &self,
        result: &AttackResult<f64>,
        trace: &MonitorTrace<f64>,
        eval: &Evaluation<f64>,
    ) -> AttackSummary {
        let (from, to) = self.window_bounds();
        let clean_min_v = self.clean().min_v;
        let min_v = trace.min_v_between(from, to).unwrap_or(f64::NAN);
        let alarms = trace.alarms_between(from, to);
        let ratio = min_v / clean_min_v;
        AttackSummary {
            decision: eval.decision,
            goal_satisfied: result.goal_satisfied,
            objective_s_star: result.objective_s_star,
            l2_norm: l2_norm(self.context.clean_window(), &result.attacked_window),
            min_v_window: min_v,
            min_v_ratio: ratio,
            alarms_window: alarms,
            alarm_fired: alarms > 0,
            similar_to_clean: alarms == 0 && ratio >= SIMILARITY_RATIO,
            target_mean: self.config.target_mean(&eval.forecast),
            evaluations: result.evaluations,
        }
    }

    fn clean_summary(&self) -> CleanSummary {
        let (from, to) = self.window_bounds();
        let trace = self.context.clean_trace();
        let alarms = trace.alarms_between(from, to);
        CleanSummary {
            decision: self.clean().decision,
            min_v_window: self.clean().min_v,
            alarms_window: alarms,
            alarm_fired: alarms > 0,
            target_mean: self.config.target_mean(&self.clean().forecast),
        }
    }

    fn header(&self) -> Result<ReportHeader> {
        Ok(ReportHeader {
            scenario: self.config.name,
            seeds: self.seeds,
            series_seed: self.series_seed,
            alpha: self.config.alpha,
            window_start: self.context.window.start(),
            alarm_threshold: self.config.monitor.alarm_threshold,
            goal: self.goal()?,
            similarity_rule: format!(
                "no alarm in the window and min V ratio >= {SIMILARITY_RATIO} (operational reading of \
                 'not substantially different')"
            ),
            clean: self.clean_summary(),
        })
    }
}

fn accepts(search: &SeedSearch, config: &ScenarioConfig, ctx: &AttackContext<f64>) -> bool {
    let clean = ctx.clean_evaluation();
    if search.quiet_window {
        let trace = ctx.clean_trace();
        if trace.alarms_between(ctx.window.start(), ctx.window.alpha) > 0 {
            return false;
        }
    }
    if search.goal_unmet {
        match config.attack.goal.resolve(clean.decision) {
            Ok(goal) if !goal.contains(clean.decision) => {}
            _ => return false,
        }
    }
    if let Some([lo, hi]) = search.target_mean_band {
        match (
            config.target_mean(&clean.forecast),
            config.decision.threshold(),
        ) {
            (Some(m), Some(thr)) if m >= lo * thr && m <= hi * thr => {}
            _ => return false,
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportHeader {
    pub scenario: ScenarioName,
    pub seeds: SeedPlan,
    pub series_seed: Option<u64>,
    pub alpha: i64,
    pub window_start: i64,
    pub alarm_threshold: f64,
    pub goal: AttackGoal,
    pub similarity_rule: String,
    pub clean: CleanSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanSummary {
    pub decision: Decision,
    pub min_v_window: f64,
    pub alarms_window: usize,
    pub alarm_fired: bool,
    /// Predictive mean at the decision's target step (ad placement only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackSummary {
    pub decision: Decision,
    pub goal_satisfied: bool,
    #[serde(rename = "S_star")]
    pub objective_s_star: f64,
    pub l2_norm: f64,
    pub min_v_window: f64,
    pub min_v_ratio: f64,
    pub alarms_window: usize,
    pub alarm_fired: bool,
    pub similar_to_clean: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_mean: Option<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    /// Whether the attack moved the decision into the goal set.
    pub flipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infeasible: Option<InfeasibilityReport>,
}

impl ScenarioReport {
    pub fn is_infeasible(&self) -> bool {
        self.infeasible.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    #[serde(flatten)]
    pub header: ReportHeader,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bayes: Option<AttackSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<AttackSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub infeasible: Vec<InfeasibilityReport>,
}

impl ComparisonReport {
    pub fn is_infeasible(&self) -> bool {
        !self.infeasible.is_empty()
    }
}

/// Clean pass plus the Bayes-factor attack. Writes every artifact into `out`.
pub fn run_scenario(config: &ScenarioConfig, out: &Path) -> Result<ScenarioReport> {
    let prepared = Prepared::new(config.clone())?;
    create_dir(out)?;
    write_clean_artifacts(&prepared, out)?;
    let header = prepared.header()?;
    let report = match prepared.attack(Objective::MinBayesFactor)? {
        AttackOutcome::Found(result) => {
            let summary = prepared.write_attack(out, &result, "")?;
            ScenarioReport {
                header,
                flipped: result.goal_satisfied,
                attack: Some(summary),
                infeasible: None,
            }
        }
        AttackOutcome::Infeasible(report) => {
            write_json(&out.join("attack.json"), &report)?;
            ScenarioReport {
                header,
                flipped: false,
                attack: None,
                infeasible: Some(report),
            }
        }
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

/// Runs both attacks on the same clean pass. The Bayes-factor attack's
/// artifacts use the plain names; the norm attack's carry a `_norm` suffix.
pub fn compare_attacks(config: &ScenarioConfig, out: &Path) -> Result<ComparisonReport> {
    let prepared = Prepared::new(config.clone())?;
    create_dir(out)?;
    write_clean_artifacts(&prepared, out)?;
    let mut report = ComparisonReport {
        header: prepared.header()?,
        bayes: None,
        norm: None,
        infeasible: vec![],
    };
    for (objective, suffix) in [
        (Objective::MinBayesFactor, ""),
        (Objective::NegativeL2, "_norm"),
    ] {
        match prepared.attack(objective)? {
            AttackOutcome::Found(result) => {
                let summary = prepared.write_attack(out, &result, suffix)?;
                match objective {
                    Objective::MinBayesFactor => report.bayes = Some(summary),
                    Objective::NegativeL2 => report.norm = Some(summary),
                }
            }
            AttackOutcome::Infeasible(r) => {
                write_json(&out.join(format!("attack{suffix}.json")), &r)?;
                report.infeasible.push(r);
            }
        }
    }
    write_json(&out.join("comparison.json"), &report)?;
    Ok(report)
}

/// Runs a single attack with `objective` and writes its artifacts.
pub fn run_attack(
    prepared: &Prepared,
    objective: Objective,
    out: &Path,
) -> Result<AttackOutcome<f64>> {
    create_dir(out)?;
    let outcome = prepared.attack(objective)?;
    match &outcome {
        AttackOutcome::Found(result) => {
            prepared.write_attack(out, result, "")?;
        }
        AttackOutcome::Infeasible(report) => write_json(&out.join("attack.json"), report)?,
    }
    Ok(outcome)
}

fn write_clean_artifacts(prepared: &Prepared, out: &Path) -> Result<()> {
    prepared.write_series(out)?;
    prepared.write_forecast(out)?;
    prepared.write_clean_monitor(out)?;
    prepared.write_decision(out)
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_with(path: &Path, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    f(BufWriter::new(file))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    fs::write(path, to_json(value)?).map_err(|e| Error::io(PathBuf::from(path), e))
}
