//! Data-poisoning attacks that flip the defender's decision.
//!
//! Two synthesizers share the annealing machinery:
//!
//! * [`bayes_attack`] maximises the smallest minimum cumulative Bayes factor
//!   over the attack window, so the poisoned data stays consistent with the
//!   defender's own predictive and does not trip the monitor;
//! * [`norm_attack`] minimises the Euclidean size of the perturbation.
//!
//! Both only accept windows under which the defender's optimal decision lies
//! in the attacker's goal.

mod anneal;
mod context;
mod goal;
mod region;

use serde::Serialize;

pub use anneal::{
    acceptance_probability, anneal, AttackResult, CandidateEvaluator, SaConfig, Scored,
};
pub use context::{AttackContext, DefenderSetup, Evaluation, InfeasibilityReport, InitialAttack};
pub use goal::{AttackGoal, ShiftDirection};
pub use region::{deviation, l2_norm, propose, AttackWindow, FeasibleRegion, RegionMode};

use crate::error::{Error, Result};
use crate::real::Real;

/// Attack objective being maximised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `min Ṽ` over the window. The chain runs on `ln(min Ṽ)`, which has the
    /// same maximiser; reported objectives are mapped back.
    MinBayesFactor,
    /// `−‖ỹ − y‖₂`.
    NegativeL2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackOutcome<T> {
    Found(AttackResult<T>),
    Infeasible(InfeasibilityReport),
}

impl<T> AttackOutcome<T> {
    pub fn found(&self) -> Option<&AttackResult<T>> {
        match self {
            AttackOutcome::Found(r) => Some(r),
            AttackOutcome::Infeasible(_) => None,
        }
    }
}

/// Runs annealing on `ctx` for the given objective, starting from the greedy
/// uniform-shift window. When the clean data already meets the goal the clean
/// window is returned as is.
pub fn synthesize<T: Real>(
    ctx: &AttackContext<T>,
    objective: Objective,
    goal: &AttackGoal,
    region: &FeasibleRegion,
    sa: &SaConfig<T>,
) -> Result<AttackOutcome<T>> {
    if goal.is_empty() {
        return Err(Error::config("attack goal has no target decisions"));
    }
    sa.validate()?;
    let initial = match ctx.initial_feasible_attack(goal, region, None)? {
        InitialAttack::Found {
            window, shift: 0, ..
        } => return Ok(AttackOutcome::Found(unmodified(ctx, objective, window)?)),
        InitialAttack::Found { window, .. } => window,
        InitialAttack::Infeasible(report) => return Ok(AttackOutcome::Infeasible(report)),
    };
    let clean = ctx.clean_window().to_vec();
    let mut evaluator = |w: &[u64]| -> Result<Scored<T>> {
        match objective {
            Objective::MinBayesFactor => {
                let eval = ctx.evaluate(w)?;
                Ok(Scored {
                    objective: eval.min_v.max(T::min_positive_value()).ln(),
                    goal_met: goal.contains(eval.decision),
                })
            }
            Objective::NegativeL2 => Ok(Scored {
                objective: -l2_norm::<T>(&clean, w),
                goal_met: ctx.goal_satisfied(w, goal)?,
            }),
        }
    };
    let mut result = anneal(&initial, &clean, region, sa, &mut evaluator)?;
    if objective == Objective::MinBayesFactor {
        result.objective_s_star = ctx.objective_bayes(&result.attacked_window)?;
        result.initial_objective = ctx.objective_bayes(&initial)?;
        for (_, s) in result.best_trace.iter_mut() {
            *s = s.exp();
        }
    }
    result.goal_satisfied = ctx.goal_satisfied(&result.attacked_window, goal)?;
    Ok(AttackOutcome::Found(result))
}

/// Result for a goal the clean data already meets: nothing is poisoned.
fn unmodified<T: Real>(
    ctx: &AttackContext<T>,
    objective: Objective,
    window: Vec<u64>,
) -> Result<AttackResult<T>> {
    let s = match objective {
        Objective::MinBayesFactor => ctx.objective_bayes(&window)?,
        Objective::NegativeL2 => T::zero(),
    };
    Ok(AttackResult {
        attacked_window: window,
        objective_s_star: s,
        initial_objective: s,
        best_trace: vec![(0, s)],
        goal_satisfied: true,
        feasible: true,
        evaluations: 1,
        proposals: 0,
        accepted: 0,
    })
}

/// Attack maximising the minimum cumulative Bayes factor over the window.
pub fn bayes_attack<T: Real>(
    ctx: &AttackContext<T>,
    goal: &AttackGoal,
    region: &FeasibleRegion,
    sa: &SaConfig<T>,
) -> Result<AttackOutcome<T>> {
    synthesize(ctx, Objective::MinBayesFactor, goal, region, sa)
}

/// Attack minimising the L2 norm of the perturbation.
pub fn norm_attack<T: Real>(
    ctx: &AttackContext<T>,
    goal: &AttackGoal,
    region: &FeasibleRegion,
    sa: &SaConfig<T>,
) -> Result<AttackOutcome<T>> {
    synthesize(ctx, Objective::NegativeL2, goal, region, sa)
}
