//! Sequential model monitoring with local and minimum cumulative Bayes factors.
//!
//! The model's one-step predictive is compared against a mean-matched,
//! overdispersed negative-binomial alternative. `H_t` is the ratio of the two
//! predictive densities at `y_t`; `V_t = H_t · min(1, V_{t−1})` tracks the most
//! discrepant run of recent consecutive observations. An alarm fires when
//! `V_t` drops below the threshold.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dist::{negative_binomial_pmf, poisson_pmf};
use crate::error::{Error, Result};
use crate::model::{FilterState, ModelSpec, PredictiveSummary, TimeSeries, LIKELIHOOD_FLOOR};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig<T> {
    /// Variance multiplier `k > 1` of the alternative predictive.
    pub variance_inflation: T,
    /// Alarm when `V_t < alarm_threshold`.
    pub alarm_threshold: T,
    pub likelihood_floor: T,
}

impl<T: Real> Default for MonitorConfig<T> {
    fn default() -> Self {
        Self {
            variance_inflation: T::lit(2.0),
            alarm_threshold: T::lit(0.1),
            likelihood_floor: T::positive_floor(LIKELIHOOD_FLOOR),
        }
    }
}

impl<T: Real> MonitorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance_inflation > T::one()) {
            return Err(Error::config(format!(
                "variance_inflation must be > 1, got {}",
                self.variance_inflation
            )));
        }
        if !(self.alarm_threshold > T::zero() && self.alarm_threshold <= T::one()) {
            return Err(Error::config(format!(
                "alarm_threshold must lie in (0, 1], got {}",
                self.alarm_threshold
            )));
        }
        if !(self.likelihood_floor > T::zero()) {
            return Err(Error::config("likelihood_floor must be positive"));
        }
        Ok(())
    }
}

/// Alternative predictive pmf at `y`: negative binomial with the model's
/// predictive mean and `k` times its variance. Falls back to a Poisson with the
/// same mean when `k · variance <= mean`.
pub fn alternative_pmf<T: Real>(predictive: &PredictiveSummary<T>, k: T, y: u64) -> Result<T> {
    if !(k > T::one()) {
        return Err(Error::config(format!(
            "variance inflation must be > 1, got {k}"
        )));
    }
    let mean = predictive.mean;
    let inflated = k * predictive.variance;
    if !mean.is_finite() || !inflated.is_finite() {
        return Ok(T::zero());
    }
    if inflated <= mean || mean <= T::zero() {
        return Ok(poisson_pmf(y, mean.max(T::zero())));
    }
    Ok(negative_binomial_pmf(y, mean, inflated))
}

/// `H_t = max(p_model, floor) / max(p_alt, floor)`.
#[inline]
pub fn local_bayes_factor<T: Real>(p_model: T, p_alt: T, floor: T) -> T {
    p_model.max(floor) / p_alt.max(floor)
}

/// `V_t = H_t · min(1, V_{t−1})`; use `v_prev = 1` at the first monitored step.
#[inline]
pub fn cumulative_min_update<T: Real>(v_prev: T, h: T) -> T {
    h * v_prev.min(T::one())
}

/// Bayes factors and alarm flag at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRecord<T> {
    pub t: i64,
    pub h: T,
    pub v: T,
    pub alarm: bool,
    pub predictive: PredictiveSummary<T>,
}

/// Filter state bundled with the running cumulative Bayes factor.
#[derive(Debug, Clone)]
pub struct MonitorState<T> {
    pub filter: FilterState<T>,
    pub v_prev: T,
}

impl<T: Real> MonitorState<T> {
    pub fn new(filter: FilterState<T>) -> Self {
        Self {
            filter,
            v_prev: T::one(),
        }
    }

    pub fn step(
        &self,
        y: u64,
        cfg: &MonitorConfig<T>,
    ) -> Result<(MonitorState<T>, MonitorRecord<T>)> {
        let (filter, predictive) = self.filter.step(y);
        let p_alt = alternative_pmf(&predictive, cfg.variance_inflation, y)?;
        let h = local_bayes_factor(predictive.likelihood, p_alt, cfg.likelihood_floor);
        let v = cumulative_min_update(self.v_prev, h);
        let record = MonitorRecord {
            t: filter.time_index(),
            h,
            v,
            alarm: v < cfg.alarm_threshold,
            predictive,
        };
        Ok((MonitorState { filter, v_prev: v }, record))
    }

    /// Steps through `ys`, returning the final state and the per-step records.
    pub fn run(
        &self,
        ys: &[u64],
        cfg: &MonitorConfig<T>,
    ) -> Result<(MonitorState<T>, Vec<MonitorRecord<T>>)> {
        let mut state = self.clone();
        let mut records = Vec::with_capacity(ys.len());
        for &y in ys {
            let (next, rec) = state.step(y, cfg)?;
            state = next;
            records.push(rec);
        }
        Ok((state, records))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonitorTrace<T> {
    pub times: Vec<i64>,
    pub h: Vec<T>,
    pub v: Vec<T>,
    pub alarms: Vec<bool>,
}

impl<T: Real> MonitorTrace<T> {
    pub fn from_records(records: &[MonitorRecord<T>]) -> Self {
        Self {
            times: records.iter().map(|r| r.t).collect(),
            h: records.iter().map(|r| r.h).collect(),
            v: records.iter().map(|r| r.v).collect(),
            alarms: records.iter().map(|r| r.alarm).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Minimum `V_t` over `from ..= to`; `None` when no step falls in range.
    pub fn min_v_between(&self, from: i64, to: i64) -> Option<T> {
        self.times
            .iter()
            .zip(&self.v)
            .filter(|(t, _)| (from..=to).contains(*t))
            .map(|(_, v)| *v)
            .reduce(T::min)
    }

    pub fn alarms_between(&self, from: i64, to: i64) -> usize {
        self.times
            .iter()
            .zip(&self.alarms)
            .filter(|(t, a)| (from..=to).contains(*t) && **a)
            .count()
    }

    /// Recomputes alarm flags against another threshold.
    pub fn alarms_at(&self, threshold: T) -> Vec<bool> {
        self.v.iter().map(|v| *v < threshold).collect()
    }

    /// Writes `t,H,V,alarm` rows; alarm is `1` or `0`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "H", "V", "alarm"])?;
        for i in 0..self.len() {
            w.write_record([
                self.times[i].to_string(),
                format!("{:e}", self.h[i]),
                format!("{:e}", self.v[i]),
                u8::from(self.alarms[i]).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t: i64,
            #[serde(rename = "H")]
            h: f64,
            #[serde(rename = "V")]
            v: f64,
            alarm: u8,
        }
        let mut trace = Self::default();
        for row in csv::Reader::from_reader(reader).deserialize::<Row>() {
            let row = row?;
            trace.times.push(row.t);
            trace.h.push(T::lit(row.h));
            trace.v.push(T::lit(row.v));
            trace.alarms.push(row.alarm != 0);
        }
        Ok(trace)
    }
}

/// Filters `series` from its first observation and records `H_t`, `V_t` and
/// alarms at every step.
pub fn run_monitor<T: Real>(
    series: &TimeSeries,
    spec: &ModelSpec<T>,
    cfg: &MonitorConfig<T>,
    n_particles: usize,
    seed: u64,
) -> Result<MonitorTrace<T>> {
    cfg.validate()?;
    if series.is_empty() {
        return Err(Error::input("cannot monitor an empty series"));
    }
    let filter = FilterState::init(spec.clone(), n_particles, seed, series.start)?;
    let (_, records) = MonitorState::new(filter).run(&series.counts, cfg)?;
    Ok(MonitorTrace::from_records(&records))
}
