use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Structure of a conditionally Poisson dynamic model with a log link.
///
/// The latent state is laid out as `[level, slope?, s_1, …, s_{p−1}]`:
///
/// * `level_t = level_{t−1} + slope_{t−1} + e_level`
/// * `slope_t = slope_{t−1} + e_slope` (only when `trend_order == 2`)
/// * `s_1,t = −(s_1 + … + s_{p−1})_{t−1} + e_seasonal`, the older effects shift
///   down one slot
/// * `y_t ~ Poisson(exp(level_t + s_1,t))`
///
/// `state_noise_variances` holds one variance per component group in the order
/// level, slope, seasonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec<T> {
    pub trend_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seasonal_period: Option<usize>,
    pub state_noise_variances: Vec<T>,
    pub prior_mean: Vec<T>,
    pub prior_variances: Vec<T>,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(
        trend_order: usize,
        seasonal_period: Option<usize>,
        state_noise_variances: Vec<T>,
        prior_mean: Vec<T>,
        prior_variances: Vec<T>,
    ) -> Result<Self> {
        let spec = Self {
            trend_order,
            seasonal_period,
            state_noise_variances,
            prior_mean,
            prior_variances,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// One-dimensional local level model.
    pub fn local_level(noise_variance: T, prior_mean: T, prior_variance: T) -> Result<Self> {
        Self::new(
            1,
            None,
            vec![noise_variance],
            vec![prior_mean],
            vec![prior_variance],
        )
    }

    /// Builds a spec with data-scaled default priors: level mean
    /// `ln(mean of the first 10 counts + 1)` with variance 1, slope and seasonal
    /// means 0 with variance 0.1.
    pub fn with_default_priors(
        trend_order: usize,
        seasonal_period: Option<usize>,
        state_noise_variances: Vec<T>,
        counts: &[u64],
    ) -> Result<Self> {
        let head = &counts[..counts.len().min(10)];
        let level = if head.is_empty() {
            T::zero()
        } else {
            let mean = head.iter().map(|&y| y as f64).sum::<f64>() / head.len() as f64;
            T::lit((mean + 1.0).ln())
        };
        let dim = latent_dim(trend_order, seasonal_period);
        let mut prior_mean = vec![T::zero(); dim];
        let mut prior_variances = vec![T::lit(0.1); dim];
        prior_mean[0] = level;
        prior_variances[0] = T::one();
        Self::new(
            trend_order,
            seasonal_period,
            state_noise_variances,
            prior_mean,
            prior_variances,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.trend_order, 1 | 2) {
            return Err(Error::config(format!(
                "trend_order must be 1 or 2, got {}",
                self.trend_order
            )));
        }
        if let Some(p) = self.seasonal_period {
            if p < 2 {
                return Err(Error::config(format!(
                    "seasonal_period must be >= 2, got {p}"
                )));
            }
        }
        if self.state_noise_variances.len() != self.noise_groups() {
            return Err(Error::config(format!(
                "expected {} state noise variances, got {}",
                self.noise_groups(),
                self.state_noise_variances.len()
            )));
        }
        if let Some(v) = self
            .state_noise_variances
            .iter()
            .find(|v| !(v.is_finite() && **v >= T::zero()))
        {
            return Err(Error::config(format!(
                "state noise variance must be finite and >= 0, got {v}"
            )));
        }
        let dim = self.latent_dim();
        if self.prior_mean.len() != dim || self.prior_variances.len() != dim {
            return Err(Error::config(format!(
                "prior vectors must have length {dim} (got mean {}, variances {})",
                self.prior_mean.len(),
                self.prior_variances.len()
            )));
        }
        if self.prior_mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::config("prior mean must be finite"));
        }
        if let Some(v) = self
            .prior_variances
            .iter()
            .find(|v| !(v.is_finite() && **v > T::zero()))
        {
            return Err(Error::config(format!(
                "prior variance must be finite and > 0, got {v}"
            )));
        }
        Ok(())
    }

    pub fn latent_dim(&self) -> usize {
        latent_dim(self.trend_order, self.seasonal_period)
    }

    pub fn noise_groups(&self) -> usize {
        self.trend_order + usize::from(self.seasonal_period.is_some())
    }

    pub(crate) fn noise_sds(&self) -> Vec<T> {
        self.state_noise_variances
            .iter()
            .map(|v| v.sqrt())
            .collect()
    }

    pub(crate) fn prior_sds(&self) -> Vec<T> {
        self.prior_variances.iter().map(|v| v.sqrt()).collect()
    }

    /// Log rate of the observation given a latent state.
    #[inline]
    pub fn log_rate(&self, state: &[T]) -> T {
        match self.seasonal_period {
            Some(_) => state[0] + state[self.trend_order],
            None => state[0],
        }
    }

    /// Advances `state` one step in place; `noise` holds one standard normal
    /// per component group.
    #[inline]
    pub(crate) fn evolve(&self, state: &mut [T], noise_sds: &[T], noise: &[T]) {
        let level = state[0];
        if self.trend_order == 2 {
            state[0] = level + state[1] + noise_sds[0] * noise[0];
            state[1] = state[1] + noise_sds[1] * noise[1];
        } else {
            state[0] = level + noise_sds[0] * noise[0];
        }
        if let Some(p) = self.seasonal_period {
            let k = self.trend_order;
            let seasonal = &mut state[k..k + p - 1];
            let fresh = -seasonal.iter().copied().sum::<T>() + noise_sds[k] * noise[k];
            seasonal.rotate_right(1);
            seasonal[0] = fresh;
        }
    }
}

fn latent_dim(trend_order: usize, seasonal_period: Option<usize>) -> usize {
    trend_order + seasonal_period.map_or(0, |p| p - 1)
}
