//! Bootstrap particle filter with systematic resampling at every step.

use std::sync::Arc;

use statrs::function::factorial::ln_factorial;

use crate::dist::{standard_normal, uniform01};
use crate::error::{Error, Result};
use crate::model::spec::ModelSpec;
use crate::real::Real;
use crate::rng::{stream_rng, Stream, StreamRng};

/// Floor applied to one-step predictive likelihoods.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

/// Particle approximation of the posterior over the latent state given all
/// observations up to `time_index`.
#[derive(Debug, Clone)]
pub struct FilterState<T> {
    spec: Arc<ModelSpec<T>>,
    time_index: i64,
    dim: usize,
    /// Row-major `n_particles × dim`.
    particles: Vec<T>,
    weights: Vec<T>,
    seed: u64,
    steps_taken: u64,
}

/// One-step predictive distribution summary at the observed count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveSummary<T> {
    /// `p̂(y | D_{t−1})`, floored at [`LIKELIHOOD_FLOOR`].
    pub likelihood: T,
    /// Monte-Carlo standard error of the likelihood estimate.
    pub std_error: T,
    /// Predictive mean of the count.
    pub mean: T,
    /// Predictive variance of the count (Poisson mixture).
    pub variance: T,
}

#[inline]
fn poisson_ln_pmf_at_log_rate<T: Real>(y: u64, log_rate: T, ln_fact: T) -> T {
    let rate = log_rate.exp();
    if rate.is_infinite() {
        return T::neg_infinity();
    }
    T::from_count(y) * log_rate - rate - ln_fact
}

impl<T: Real> FilterState<T> {
    /// Draws `n_particles` from the prior. The state sits at `start − 1`, just
    /// before the first observation.
    pub fn init(spec: ModelSpec<T>, n_particles: usize, seed: u64, start: i64) -> Result<Self> {
        spec.validate()?;
        if n_particles == 0 {
            return Err(Error::config("n_particles must be >= 1"));
        }
        let dim = spec.latent_dim();
        let sds = spec.prior_sds();
        let mut rng = stream_rng(seed, Stream::FilterInit, 0);
        let mut particles = Vec::with_capacity(n_particles * dim);
        for _ in 0..n_particles {
            for (m, sd) in spec.prior_mean.iter().zip(&sds) {
                particles.push(*m + *sd * standard_normal::<T, _>(&mut rng));
            }
        }
        let w = T::one() / T::from_count(n_particles as u64);
        Ok(Self {
            spec: Arc::new(spec),
            time_index: start - 1,
            dim,
            particles,
            weights: vec![w; n_particles],
            seed,
            steps_taken: 0,
        })
    }

    pub fn spec(&self) -> &ModelSpec<T> {
        &self.spec
    }

    pub fn time_index(&self) -> i64 {
        self.time_index
    }

    pub fn n_particles(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn particle(&self, i: usize) -> &[T] {
        &self.particles[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of filter steps consumed from the seed's step stream.
    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    /// Weighted mean of the latent state.
    pub fn mean_state(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (i, w) in self.weights.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.particle(i)) {
                *o = *o + *w * *x;
            }
        }
        out
    }

    /// Propagates every particle to `time_index + 1`. The generator is keyed on
    /// that time, so any two states at the same time consume identical variates.
    fn propagate(&self) -> (Vec<T>, StreamRng) {
        let mut rng = stream_rng(self.seed, Stream::FilterStep, (self.time_index + 1) as u64);
        let sds = self.spec.noise_sds();
        let mut noise = vec![T::zero(); self.spec.noise_groups()];
        let mut next = self.particles.clone();
        for row in next.chunks_exact_mut(self.dim) {
            for z in noise.iter_mut() {
                *z = standard_normal(&mut rng);
            }
            self.spec.evolve(row, &sds, &noise);
        }
        (next, rng)
    }

    /// Log rates of the propagated particles.
    fn log_rates(&self, propagated: &[T]) -> Vec<T> {
        propagated
            .chunks_exact(self.dim)
            .map(|x| self.spec.log_rate(x))
            .collect()
    }

    /// One-step predictive pmf `p̂(y | D_t)` using the same propagation as [`step`](Self::step).
    pub fn predictive_pmf(&self, y: u64) -> T {
        let (propagated, _) = self.propagate();
        let ln_fact = T::lit(ln_factorial(y));
        self.log_rates(&propagated)
            .into_iter()
            .zip(&self.weights)
            .map(|(lr, w)| *w * poisson_ln_pmf_at_log_rate(y, lr, ln_fact).exp())
            .sum()
    }

    /// Assimilates the observation at `time_index + 1`: propagate, weight by
    /// the Poisson likelihood, then resample systematically.
    pub fn step(&self, y: u64) -> (FilterState<T>, PredictiveSummary<T>) {
        let (propagated, mut rng) = self.propagate();
        let log_rates = self.log_rates(&propagated);
        let ln_fact = T::lit(ln_factorial(y));
        let log_lik: Vec<T> = log_rates
            .iter()
            .map(|lr| poisson_ln_pmf_at_log_rate(y, *lr, ln_fact))
            .collect();
        let max_ll = log_lik.iter().copied().fold(T::neg_infinity(), T::max);

        let mut mean = T::zero();
        let mut second = T::zero();
        for (lr, w) in log_rates.iter().zip(&self.weights) {
            let rate = lr.exp();
            mean = mean + *w * rate;
            second = second + *w * rate * rate;
        }
        let variance = (mean + second - mean * mean).max(mean);

        let (likelihood, std_error, posterior) = if max_ll.is_finite() {
            let scaled: Vec<T> = log_lik.iter().map(|l| (*l - max_ll).exp()).collect();
            let scale = max_ll.exp();
            let pmf_sum: T = scaled.iter().zip(&self.weights).map(|(s, w)| *s * *w).sum();
            let estimate = scale * pmf_sum;
            let spread: T = scaled
                .iter()
                .zip(&self.weights)
                .map(|(s, w)| {
                    let d = *s * scale - estimate;
                    *w * *w * d * d
                })
                .sum();
            let unnormalised: Vec<T> = scaled
                .iter()
                .zip(&self.weights)
                .map(|(s, w)| *s * *w)
                .collect();
            let total: T = unnormalised.iter().copied().sum();
            let posterior = unnormalised
                .into_iter()
                .map(|u| u / total)
                .collect::<Vec<_>>();
            (estimate, spread.sqrt(), posterior)
        } else {
            // no particle can explain y: keep the prior weights
            (T::zero(), T::zero(), self.weights.clone())
        };

        let indices = systematic_resample(&posterior, uniform01::<T, _>(&mut rng));
        let mut particles = Vec::with_capacity(propagated.len());
        for i in indices {
            particles.extend_from_slice(&propagated[i * self.dim..(i + 1) * self.dim]);
        }
        let n = self.weights.len();
        let w = T::one() / T::from_count(n as u64);
        let next = FilterState {
            spec: Arc::clone(&self.spec),
            time_index: self.time_index + 1,
            dim: self.dim,
            particles,
            weights: vec![w; n],
            seed: self.seed,
            steps_taken: self.steps_taken + 1,
        };
        let summary = PredictiveSummary {
            likelihood: likelihood.max(T::positive_floor(LIKELIHOOD_FLOOR)),
            std_error,
            mean,
            variance,
        };
        (next, summary)
    }

    /// Runs [`step`](Self::step) over consecutive observations.
    pub fn run(&self, ys: &[u64]) -> (FilterState<T>, Vec<PredictiveSummary<T>>) {
        let mut state = self.clone();
        let mut out = Vec::with_capacity(ys.len());
        for &y in ys {
            let (next, s) = state.step(y);
            state = next;
            out.push(s);
        }
        (state, out)
    }
}

/// Systematic resampling with a single uniform offset `u ∈ [0, 1)`.
pub(crate) fn systematic_resample<T: Real>(weights: &[T], u: T) -> Vec<usize> {
    let n = weights.len();
    let nf = T::from_count(n as u64);
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut j = 0;
    for i in 0..n {
        let target = (T::from_count(i as u64) + u) / nf;
        while target > cumulative && j + 1 < n {
            j += 1;
            cumulative = cumulative + weights[j];
        }
        out.push(j);
    }
    out
}
