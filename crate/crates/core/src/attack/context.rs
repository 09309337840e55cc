use crate::attack::goal::{AttackGoal, ShiftDirection};
use crate::attack::region::{AttackWindow, FeasibleRegion};
use crate::decision::{Decision, DecisionProblem, ExpectedUtilityTable};
use crate::error::{Error, Result};
use crate::model::{forecast, FilterState, ForecastSamples, ModelSpec, TimeSeries};
use crate::monitor::{MonitorConfig, MonitorRecord, MonitorState, MonitorTrace};
use crate::real::Real;

/// Everything the defender does with the data, fixed for one attack run.
#[derive(Debug, Clone)]
pub struct DefenderSetup<T> {
    pub spec: ModelSpec<T>,
    pub monitor: MonitorConfig<T>,
    pub problem: DecisionProblem<T>,
    pub n_particles: usize,
    pub n_paths: usize,
    pub filter_seed: u64,
    pub forecast_seed: u64,
}

/// Defender's view of one candidate window.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    /// Monitor records over the attack window.
    pub records: Vec<MonitorRecord<T>>,
    /// `min Ṽ_t` over the window.
    pub min_v: T,
    pub forecast: ForecastSamples,
    pub table: ExpectedUtilityTable<T>,
    pub decision: Decision,
}

impl<T: Real> Evaluation<T> {
    pub fn alarms(&self) -> usize {
        self.records.iter().filter(|r| r.alarm).count()
    }
}

/// Clean data plus a filter checkpoint just before the attack window. Every
/// candidate is evaluated by resuming the filter from the checkpoint with the
/// same seeds, so equal windows give bit-identical results.
#[derive(Debug, Clone)]
pub struct AttackContext<T> {
    pub series: TimeSeries,
    pub window: AttackWindow,
    pub setup: DefenderSetup<T>,
    checkpoint: MonitorState<T>,
    clean_window: Vec<u64>,
    clean_trace: MonitorTrace<T>,
    clean: Evaluation<T>,
}

/// Result of the greedy uniform-shift search for a goal-satisfying start.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialAttack {
    Found {
        window: Vec<u64>,
        shift: u64,
        evaluations: usize,
    },
    Infeasible(InfeasibilityReport),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InfeasibilityReport {
    /// Decision reached by the largest shift tried.
    pub closest_decision: Decision,
    pub largest_shift: u64,
    pub evaluations: usize,
    pub reason: String,
}

impl<T: Real> AttackContext<T> {
    pub fn new(series: TimeSeries, window: AttackWindow, setup: DefenderSetup<T>) -> Result<Self> {
        setup.spec.validate()?;
        setup.monitor.validate()?;
        setup.problem.validate()?;
        window.validate(&series)?;
        if setup.n_paths == 0 {
            return Err(Error::config("n_forecast_paths must be >= 1"));
        }
        let filter = FilterState::init(
            setup.spec.clone(),
            setup.n_particles,
            setup.filter_seed,
            series.start,
        )?;
        let head = &series.counts[..series.position(window.start()).unwrap_or(0)];
        let (checkpoint, head_records) = MonitorState::new(filter).run(head, &setup.monitor)?;
        let clean_window = window.slice(&series)?.to_vec();

        let mut ctx = Self {
            series,
            window,
            setup,
            checkpoint,
            clean_window,
            clean_trace: MonitorTrace::default(),
            clean: Evaluation {
                records: vec![],
                min_v: T::zero(),
                forecast: ForecastSamples::from_paths(0, 1, &[vec![0]])?,
                table: ExpectedUtilityTable::new(vec![], vec![])?,
                decision: Decision::Skip,
            },
        };
        let clean = ctx.evaluate(&ctx.clean_window.clone())?;
        let mut records = head_records;
        records.extend_from_slice(&clean.records);
        ctx.clean_trace = MonitorTrace::from_records(&records);
        ctx.clean = clean;
        Ok(ctx)
    }

    pub fn clean_window(&self) -> &[u64] {
        &self.clean_window
    }

    /// Monitor trace of the clean series through `alpha`.
    pub fn clean_trace(&self) -> &MonitorTrace<T> {
        &self.clean_trace
    }

    pub fn clean_evaluation(&self) -> &Evaluation<T> {
        &self.clean
    }

    /// Full series with `window` spliced in.
    pub fn attacked_series(&self, window: &[u64]) -> Result<TimeSeries> {
        self.series.spliced(self.window.start(), window)
    }

    /// Monitor trace through `alpha` when `window` replaces the clean window.
    pub fn trace_with(&self, window: &[u64]) -> Result<MonitorTrace<T>> {
        let eval = self.evaluate(window)?;
        let mut trace = self.clean_trace.clone();
        let keep = trace.len() - self.window.len();
        trace.times.truncate(keep);
        trace.h.truncate(keep);
        trace.v.truncate(keep);
        trace.alarms.truncate(keep);
        let tail = MonitorTrace::from_records(&eval.records);
        trace.times.extend(tail.times);
        trace.h.extend(tail.h);
        trace.v.extend(tail.v);
        trace.alarms.extend(tail.alarms);
        Ok(trace)
    }

    fn check_len(&self, window: &[u64]) -> Result<()> {
        if window.len() != self.window.len() {
            return Err(Error::input(format!(
                "candidate window has length {}, expected {}",
                window.len(),
                self.window.len()
            )));
        }
        Ok(())
    }

    fn monitor_window(&self, window: &[u64]) -> Result<(MonitorState<T>, Vec<MonitorRecord<T>>)> {
        self.check_len(window)?;
        self.checkpoint.run(window, &self.setup.monitor)
    }

    /// Re-filters the window from the checkpoint, forecasts and decides.
    pub fn evaluate(&self, window: &[u64]) -> Result<Evaluation<T>> {
        let (state, records) = self.monitor_window(window)?;
        let min_v = records.iter().map(|r| r.v).fold(T::infinity(), T::min);
        let forecast = forecast(
            &state.filter,
            self.setup.problem.horizon(),
            self.setup.n_paths,
            self.setup.forecast_seed,
        )?;
        let table = self.setup.problem.expected_utilities(&forecast)?;
        let decision = crate::decision::optimal_decision(&table)?;
        Ok(Evaluation {
            records,
            min_v,
            forecast,
            table,
            decision,
        })
    }

    /// `min Ṽ_t` over the window with `window` spliced in.
    pub fn objective_bayes(&self, window: &[u64]) -> Result<T> {
        let (_, records) = self.monitor_window(window)?;
        Ok(records.iter().map(|r| r.v).fold(T::infinity(), T::min))
    }

    /// Whether the defender's optimal decision under `window` lies in the goal.
    pub fn goal_satisfied(&self, window: &[u64], goal: &AttackGoal) -> Result<bool> {
        Ok(goal.contains(self.evaluate(window)?.decision))
    }

    /// Greedy start: shift every step of the clean window by the same amount,
    /// one unit at a time toward the goal, until the goal holds or the region
    /// stops the shift from changing anything.
    pub fn initial_feasible_attack(
        &self,
        goal: &AttackGoal,
        region: &FeasibleRegion,
        max_shift: Option<u64>,
    ) -> Result<InitialAttack> {
        let clean = &self.clean_window;
        if goal.contains(self.clean.decision) {
            return Ok(InitialAttack::Found {
                window: clean.clone(),
                shift: 0,
                evaluations: 0,
            });
        }
        let max_shift =
            max_shift.unwrap_or_else(|| 2 * clean.iter().copied().max().unwrap_or(0) + 100);
        let mut evaluations = 0;
        let mut closest = self.clean.decision;
        let mut largest_shift = 0;
        for direction in goal.directions_from(self.clean.decision) {
            let mut previous = clean.clone();
            for shift in 1..=max_shift {
                let candidate: Vec<u64> = clean
                    .iter()
                    .map(|&y| {
                        let (lo, hi) = region.bounds(y);
                        let moved = match direction {
                            ShiftDirection::Up => y.saturating_add(shift),
                            ShiftDirection::Down => y.saturating_sub(shift),
                        };
                        moved.clamp(lo, hi)
                    })
                    .collect();
                if candidate == previous || !region.contains(clean, &candidate) {
                    break;
                }
                let eval = self.evaluate(&candidate)?;
                evaluations += 1;
                closest = eval.decision;
                largest_shift = largest_shift.max(shift);
                if goal.contains(eval.decision) {
                    return Ok(InitialAttack::Found {
                        window: candidate,
                        shift,
                        evaluations,
                    });
                }
                previous = candidate;
            }
        }
        Ok(InitialAttack::Infeasible(InfeasibilityReport {
            closest_decision: closest,
            largest_shift,
            evaluations,
            reason: "uniform shifts within the feasible region never reach the goal".into(),
        }))
    }
}
