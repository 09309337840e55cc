//! Simulated annealing over integer windows with an increasing inverse
//! temperature and constraint handling by rejection.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::attack::region::{propose, FeasibleRegion};
use crate::dist::uniform01;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaConfig<T> {
    /// Initial inverse temperature.
    pub gamma_min: T,
    /// The schedule stops once the inverse temperature reaches this value.
    pub gamma_max: T,
    /// Geometric growth factor of the inverse temperature.
    pub delta: T,
    pub iters_per_temperature: usize,
    /// Mean of the geometric step size used by proposals.
    pub proposal_step_mean: T,
    pub seed: u64,
}

impl<T: Real> Default for SaConfig<T> {
    fn default() -> Self {
        Self {
            gamma_min: T::lit(0.1),
            gamma_max: T::lit(1e4),
            delta: T::lit(1.05),
            iters_per_temperature: 25,
            proposal_step_mean: T::lit(2.0),
            seed: 0,
        }
    }
}

impl<T: Real> SaConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_min > T::zero() && self.gamma_max > self.gamma_min) {
            return Err(Error::config("annealing needs 0 < gamma_min < gamma_max"));
        }
        if !(self.delta > T::one()) {
            return Err(Error::config("annealing rate delta must be > 1"));
        }
        if self.iters_per_temperature == 0 {
            return Err(Error::config("iters_per_temperature must be >= 1"));
        }
        if !(self.proposal_step_mean > T::zero()) {
            return Err(Error::config("proposal_step_mean must be positive"));
        }
        Ok(())
    }

    /// Number of temperature levels in the schedule.
    pub fn levels(&self) -> usize {
        let mut gamma = self.gamma_min;
        let mut n = 0;
        while gamma < self.gamma_max {
            n += 1;
            gamma = gamma * self.delta;
        }
        n
    }
}

/// Objective value of a candidate and whether it meets the attacker's goal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored<T> {
    pub objective: T,
    pub goal_met: bool,
}

/// Scores candidate windows; larger objectives are better.
pub trait CandidateEvaluator<T> {
    fn score(&mut self, window: &[u64]) -> Result<Scored<T>>;
}

impl<T, F> CandidateEvaluator<T> for F
where
    F: FnMut(&[u64]) -> Result<Scored<T>>,
{
    fn score(&mut self, window: &[u64]) -> Result<Scored<T>> {
        self(window)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackResult<T> {
    pub attacked_window: Vec<u64>,
    #[serde(rename = "S_star")]
    pub objective_s_star: T,
    pub initial_objective: T,
    #[serde(skip)]
    pub best_trace: Vec<(usize, T)>,
    pub goal_satisfied: bool,
    pub feasible: bool,
    /// Distinct windows scored.
    pub evaluations: usize,
    pub proposals: usize,
    pub accepted: usize,
}

impl<T: Real> AttackResult<T> {
    /// Writes the best-so-far trace as `iter,best_S`.
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iter", "best_S"])?;
        for (it, s) in &self.best_trace {
            w.write_record([it.to_string(), format!("{s:e}")])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Metropolis acceptance probability `min(1, exp(−γ (S − S′)))` for moving
/// from objective `current` to `proposed` under maximisation.
pub fn acceptance_probability<T: Real>(gamma: T, current: T, proposed: T) -> T {
    if proposed >= current {
        T::one()
    } else {
        (-gamma * (current - proposed)).exp()
    }
}

/// Maximises the evaluator's objective over the feasible region, starting from
/// `initial`, which must be feasible and meet the goal. Candidates that miss
/// the goal are rejected without entering the chain.
pub fn anneal<T: Real, E: CandidateEvaluator<T>>(
    initial: &[u64],
    clean: &[u64],
    region: &FeasibleRegion,
    cfg: &SaConfig<T>,
    evaluator: &mut E,
) -> Result<AttackResult<T>> {
    cfg.validate()?;
    if !region.contains(clean, initial) {
        return Err(Error::input(
            "initial window lies outside the feasible region",
        ));
    }
    let mut cache: HashMap<Vec<u64>, Scored<T>> = HashMap::new();
    let start = evaluator.score(initial)?;
    cache.insert(initial.to_vec(), start);
    if !start.goal_met {
        return Err(Error::input(
            "initial window does not satisfy the attack goal",
        ));
    }

    let mut rng = stream_rng(cfg.seed, Stream::Anneal, 0);
    let mut current = initial.to_vec();
    let mut current_s = start.objective;
    let mut best = current.clone();
    let mut best_s = current_s;
    let mut trace = vec![(0, best_s)];
    let (mut proposals, mut accepted) = (0usize, 0usize);

    let mut gamma = cfg.gamma_min;
    while gamma < cfg.gamma_max {
        for _ in 0..cfg.iters_per_temperature {
            proposals += 1;
            let candidate = propose(&current, clean, region, cfg.proposal_step_mean, &mut rng);
            debug_assert!(region.contains(clean, &candidate));
            let scored = match cache.get(&candidate) {
                Some(s) => *s,
                None => {
                    let s = evaluator.score(&candidate)?;
                    cache.insert(candidate.clone(), s);
                    s
                }
            };
            let u: T = uniform01(&mut rng);
            if !scored.goal_met || scored.objective.is_nan() {
                continue;
            }
            if scored.objective > best_s {
                best_s = scored.objective;
                best.clone_from(&candidate);
                trace.push((proposals, best_s));
            }
            if u < acceptance_probability(gamma, current_s, scored.objective) {
                current = candidate;
                current_s = scored.objective;
                accepted += 1;
            }
        }
        gamma = gamma * cfg.delta;
    }

    Ok(AttackResult {
        feasible: region.contains(clean, &best),
        attacked_window: best,
        objective_s_star: best_s,
        initial_objective: start.objective,
        best_trace: trace,
        goal_satisfied: true,
        evaluations: cache.len(),
        proposals,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(target: Vec<i64>) -> impl FnMut(&[u64]) -> Result<Scored<f64>> {
        move |w: &[u64]| {
            let s = w
                .iter()
                .zip(&target)
                .map(|(y, t)| ((*y as i64 - t) as f64).powi(2))
                .sum::<f64>();
            Ok(Scored {
                objective: -s,
                goal_met: true,
            })
        }
    }

    #[test]
    fn acceptance_rule() {
        assert_eq!(acceptance_probability(5.0, 1.0, 1.0), 1.0);
        assert_eq!(acceptance_probability(5.0, 1.0, 2.0), 1.0);
        assert!((acceptance_probability(2.0, 1.0, 0.5) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn frozen_chain_rejects_worse_moves() {
        let mut rng = stream_rng(4, Stream::Anneal, 1);
        let accepted = (0..10_000)
            .filter(|_| uniform01::<f64, _>(&mut rng) < acceptance_probability(1e6, 1.0, 0.99))
            .count();
        assert_eq!(accepted, 0);
    }

    #[test]
    fn schedule_levels() {
        let cfg = SaConfig::<f64>::default();
        assert_eq!(cfg.levels(), 236);
        let cfg = SaConfig {
            gamma_min: 1.0,
            gamma_max: 8.0,
            delta: 2.0,
            ..cfg
        };
        assert_eq!(cfg.levels(), 3);
    }

    #[test]
    fn config_validation() {
        let d = SaConfig::<f64>::default();
        assert!(d.validate().is_ok());
        assert!(SaConfig {
            gamma_max: 0.05,
            ..d
        }
        .validate()
        .is_err());
        assert!(SaConfig { delta: 1.0, ..d }.validate().is_err());
        assert!(SaConfig {
            iters_per_temperature: 0,
            ..d
        }
        .validate()
        .is_err());
    }

    #[test]
    fn singleton_region_returns_initial() {
        let clean = [4, 4, 4];
        let region = FeasibleRegion::free().with_cap(0);
        let mut eval = quadratic(vec![0, 0, 0]);
        let r = anneal(&clean, &clean, &region, &SaConfig::default(), &mut eval).unwrap();
        assert_eq!(r.attacked_window, clean.to_vec());
        assert_eq!(r.objective_s_star, -48.0);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn best_trace_is_monotone() {
        let clean = [5, 5, 5];
        let region = FeasibleRegion::free().with_cap(2);
        let mut eval = quadratic(vec![7, 3, 6]);
        let r = anneal(
            &clean,
            &clean,
            &region,
            &SaConfig {
                seed: 3,
                ..SaConfig::default()
            },
            &mut eval,
        )
        .unwrap();
        assert!(r
            .best_trace
            .windows(2)
            .all(|w| w[1].1 >= w[0].1 && w[1].0 > w[0].0));
        assert!(r.objective_s_star >= r.initial_objective);
        assert_eq!(r.attacked_window, vec![7, 3, 6]);
        assert!(r.feasible && r.goal_satisfied);
    }

    #[test]
    fn rejects_bad_start() {
        let clean = [5, 5];
        let mut eval = |_: &[u64]| {
            Ok(Scored {
                objective: 0.0,
                goal_met: false,
            })
        };
        assert!(anneal(
            &clean,
            &clean,
            &FeasibleRegion::free(),
            &SaConfig::default(),
            &mut eval
        )
        .is_err());
        let mut eval = quadratic(vec![0, 0]);
        assert!(anneal(
            &[4, 5],
            &clean,
            &FeasibleRegion::additive(),
            &SaConfig::default(),
            &mut eval
        )
        .is_err());
    }

    #[test]
    fn trace_csv() {
        let r = AttackResult {
            attacked_window: vec![1],
            objective_s_star: 2.0,
            initial_objective: 1.0,
            best_trace: vec![(0, 1.0), (4, 2.0)],
            goal_satisfied: true,
            feasible: true,
            evaluations: 2,
            proposals: 4,
            accepted: 1,
        };
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,best_S\n0,1e0\n4,2e0\n"
        );
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["S_star"], 2.0);
        assert!(json.get("best_trace").is_none());
    }
}
