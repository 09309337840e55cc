use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TimeSeries;
use crate::real::Real;

/// Observations `alpha − h ..= alpha` handed to the defender in attacked form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackWindow {
    pub alpha: i64,
    pub h: usize,
}

impl AttackWindow {
    pub fn start(&self) -> i64 {
        self.alpha - self.h as i64
    }

    pub fn len(&self) -> usize {
        self.h + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn validate(&self, series: &TimeSeries) -> Result<()> {
        if series.position(self.start()).is_none() || series.position(self.alpha).is_none() {
            return Err(Error::config(format!(
                "attack window {}..={} lies outside the series {}..={}",
                self.start(),
                self.alpha,
                series.start,
                series.end()
            )));
        }
        Ok(())
    }

    /// Clean observations inside the window.
    pub fn slice<'a>(&self, series: &'a TimeSeries) -> Result<&'a [u64]> {
        self.validate(series)?;
        let i = series.position(self.start()).unwrap_or(0);
        Ok(&series.counts[i..i + self.len()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMode {
    /// Counts may only be increased.
    AdditiveOnly,
    /// Any non-negative count.
    FreeNonnegative,
}

/// Admissible attacked windows relative to the clean window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibleRegion {
    pub mode: RegionMode,
    /// Bound on `|ỹ_t − y_t|` at every step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_step_cap: Option<u64>,
    /// Bound on `Σ |ỹ_t − y_t|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_budget: Option<u64>,
}

impl FeasibleRegion {
    pub fn additive() -> Self {
        Self {
            mode: RegionMode::AdditiveOnly,
            per_step_cap: None,
            total_budget: None,
        }
    }

    pub fn free() -> Self {
        Self {
            mode: RegionMode::FreeNonnegative,
            per_step_cap: None,
            total_budget: None,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.per_step_cap = Some(cap);
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.total_budget = Some(budget);
        self
    }

    /// Inclusive range of admissible values at a step whose clean count is `clean`.
    pub fn bounds(&self, clean: u64) -> (u64, u64) {
        let mut lo = match self.mode {
            RegionMode::AdditiveOnly => clean,
            RegionMode::FreeNonnegative => 0,
        };
        let mut hi = u64::MAX;
        if let Some(cap) = self.per_step_cap {
            lo = lo.max(clean.saturating_sub(cap));
            hi = clean.saturating_add(cap);
        }
        (lo, hi)
    }

    pub fn contains(&self, clean: &[u64], candidate: &[u64]) -> bool {
        if clean.len() != candidate.len() {
            return false;
        }
        let in_bounds = clean.iter().zip(candidate).all(|(&c, &y)| {
            let (lo, hi) = self.bounds(c);
            (lo..=hi).contains(&y)
        });
        in_bounds
            && self
                .total_budget
                .is_none_or(|b| deviation(clean, candidate) <= b)
    }
}

/// `Σ |ỹ_t − y_t|`.
pub fn deviation(clean: &[u64], candidate: &[u64]) -> u64 {
    clean
        .iter()
        .zip(candidate)
        .map(|(a, b)| a.abs_diff(*b))
        .sum()
}

/// Euclidean norm of the perturbation.
pub fn l2_norm<T: Real>(clean: &[u64], candidate: &[u64]) -> T {
    clean
        .iter()
        .zip(candidate)
        .map(|(a, b)| {
            let d = T::from_count(a.abs_diff(*b));
            d * d
        })
        .sum::<T>()
        .sqrt()
}

/// Moves one uniformly chosen step by `±δ`, `δ ~ 1 + Geometric(1 / step_mean)`,
/// then clamps into the region. A feasible `current` yields a feasible proposal.
pub fn propose<T: Real, R: Rng + ?Sized>(
    current: &[u64],
    clean: &[u64],
    region: &FeasibleRegion,
    step_mean: T,
    rng: &mut R,
) -> Vec<u64> {
    let mut next = current.to_vec();
    if current.is_empty() {
        return next;
    }
    let i = rng.random_range(0..current.len());
    let p = (1.0 / step_mean.to_f64_lossy()).clamp(f64::MIN_POSITIVE, 1.0);
    let step = 1 + Geometric::new(p).map(|g| g.sample(rng)).unwrap_or(0);
    let up = rng.random::<bool>();

    let (mut lo, mut hi) = region.bounds(clean[i]);
    if let Some(budget) = region.total_budget {
        let others = deviation(clean, current) - clean[i].abs_diff(current[i]);
        let room = budget.saturating_sub(others);
        lo = lo.max(clean[i].saturating_sub(room));
        hi = hi.min(clean[i].saturating_add(room));
    }
    let moved = if up {
        current[i].saturating_add(step)
    } else {
        current[i].saturating_sub(step)
    };
    next[i] = moved.clamp(lo, hi);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn window_geometry() {
        let w = AttackWindow { alpha: 10, h: 3 };
        assert_eq!(w.start(), 7);
        assert_eq!(w.len(), 4);
        let s = TimeSeries::new(5, (0..6).collect());
        assert_eq!(w.slice(&s).unwrap(), &[2, 3, 4, 5]);
        assert!(AttackWindow { alpha: 11, h: 3 }.validate(&s).is_err());
        assert!(AttackWindow { alpha: 7, h: 3 }.validate(&s).is_err());
    }

    #[test]
    fn region_membership() {
        let clean = [5, 5, 5];
        assert!(FeasibleRegion::additive().contains(&clean, &[5, 9, 6]));
        assert!(!FeasibleRegion::additive().contains(&clean, &[4, 5, 5]));
        assert!(FeasibleRegion::free().contains(&clean, &[0, 5, 100]));
        assert!(!FeasibleRegion::free()
            .with_cap(2)
            .contains(&clean, &[2, 5, 5]));
        assert!(!FeasibleRegion::free()
            .with_budget(3)
            .contains(&clean, &[3, 7, 5]));
        assert!(FeasibleRegion::free()
            .with_budget(4)
            .contains(&clean, &[3, 7, 5]));
        assert!(!FeasibleRegion::free().contains(&clean, &[5, 5]));
    }

    #[test]
    fn norms() {
        assert_eq!(deviation(&[1, 5], &[4, 1]), 7);
        assert_eq!(l2_norm::<f64>(&[1, 5], &[4, 1]), 5.0);
    }

    #[test]
    fn zero_cap_pins_the_window() {
        let mut rng = stream_rng(1, Stream::Anneal, 0);
        let clean = [3, 4, 5];
        let region = FeasibleRegion::free().with_cap(0);
        for _ in 0..100 {
            assert_eq!(
                propose(&clean, &clean, &region, 2.0, &mut rng),
                clean.to_vec()
            );
        }
    }

    #[test]
    fn additive_lower_bound_clamps_at_clean() {
        let mut rng = stream_rng(2, Stream::Anneal, 0);
        let clean = [3];
        let region = FeasibleRegion::additive();
        let mut saw_down = false;
        for _ in 0..200 {
            let p = propose(&clean, &clean, &region, 2.0, &mut rng);
            assert!(p[0] >= 3);
            saw_down |= p[0] == 3;
        }
        assert!(saw_down);
    }

    #[test]
    fn proposals_stay_feasible_and_explore() {
        let mut rng = stream_rng(3, Stream::Anneal, 0);
        let clean = [10, 0, 7, 3, 8];
        let region = FeasibleRegion::free().with_cap(4).with_budget(9);
        let current = vec![12, 3, 7, 1, 8];
        assert!(region.contains(&clean, &current));
        let (mut up, mut down) = (false, false);
        let mut touched = std::collections::BTreeSet::new();
        for _ in 0..10_000 {
            let p = propose(&current, &clean, &region, 2.0, &mut rng);
            assert!(region.contains(&clean, &p), "{p:?}");
            for i in 0..p.len() {
                if p[i] != current[i] {
                    touched.insert(i);
                    up |= p[i] > current[i];
                    down |= p[i] < current[i];
                }
            }
        }
        assert!(up && down);
        assert!(touched.len() >= 3);
    }
}
