use std::io::Write;

use crate::dist::{poisson_draw, standard_normal, uniform01};
use crate::error::{Error, Result};
use crate::model::filter::FilterState;
use crate::real::Real;
use crate::rng::{stream_rng, Stream};

/// Sample paths from the posterior predictive distribution of the next
/// `horizon` counts after `origin`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForecastSamples {
    pub origin: i64,
    pub horizon: usize,
    /// Row-major `n_paths × horizon`.
    draws: Vec<u64>,
}

impl ForecastSamples {
    pub fn from_paths(origin: i64, horizon: usize, paths: &[Vec<u64>]) -> Result<Self> {
        if horizon == 0 || paths.is_empty() {
            return Err(Error::input(
                "forecast needs horizon >= 1 and at least one path",
            ));
        }
        if let Some(p) = paths.iter().find(|p| p.len() != horizon) {
            return Err(Error::input(format!(
                "path of length {} does not match horizon {horizon}",
                p.len()
            )));
        }
        Ok(Self {
            origin,
            horizon,
            draws: paths.concat(),
        })
    }

    pub fn n_paths(&self) -> usize {
        self.draws.len() / self.horizon
    }

    pub fn path(&self, i: usize) -> &[u64] {
        &self.draws[i * self.horizon..(i + 1) * self.horizon]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[u64]> {
        self.draws.chunks_exact(self.horizon)
    }

    fn check_step(&self, step: usize) -> Result<()> {
        if step == 0 || step > self.horizon {
            return Err(Error::input(format!(
                "step {step} outside forecast horizon 1..={}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Draws at forecast step `step` (1-based).
    pub fn column(&self, step: usize) -> Result<impl Iterator<Item = u64> + '_> {
        self.check_step(step)?;
        Ok(self.paths().map(move |p| p[step - 1]))
    }

    /// Sample mean of the draws at `step` (1-based).
    pub fn predictive_mean<T: Real>(&self, step: usize) -> Result<T> {
        let total: u64 = self.column(step)?.sum();
        Ok(T::from_count(total) / T::from_count(self.n_paths() as u64))
    }

    /// Per-path sums over the given 1-based steps.
    pub fn summed(&self, steps: &[usize]) -> Result<Vec<u64>> {
        for &s in steps {
            self.check_step(s)?;
        }
        Ok(self
            .paths()
            .map(|p| steps.iter().map(|&s| p[s - 1]).sum())
            .collect())
    }

    /// Writes `path_id,step,y` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["path_id", "step", "y"])?;
        for (i, path) in self.paths().enumerate() {
            for (k, y) in path.iter().enumerate() {
                w.write_record([i.to_string(), (k + 1).to_string(), y.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Samples `n_paths` future trajectories: pick a particle by weight, then
/// alternately evolve the latent state and draw a Poisson count.
pub fn forecast<T: Real>(
    state: &FilterState<T>,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ForecastSamples> {
    if horizon == 0 || n_paths == 0 {
        return Err(Error::input("forecast needs horizon >= 1 and n_paths >= 1"));
    }
    let spec = state.spec();
    let sds = spec.noise_sds();
    let mut noise = vec![T::zero(); spec.noise_groups()];
    let mut rng = stream_rng(seed, Stream::Forecast, 0);

    let mut cumulative = Vec::with_capacity(state.n_particles());
    let mut acc = T::zero();
    for w in state.weights() {
        acc = acc + *w;
        cumulative.push(acc);
    }
    let last = state.n_particles() - 1;

    let mut draws = Vec::with_capacity(horizon * n_paths);
    let mut x = vec![T::zero(); state.dim()];
    for _ in 0..n_paths {
        let u = uniform01::<T, _>(&mut rng) * acc;
        let idx = cumulative.partition_point(|c| *c <= u).min(last);
        x.copy_from_slice(state.particle(idx));
        for _ in 0..horizon {
            for z in noise.iter_mut() {
                *z = standard_normal(&mut rng);
            }
            spec.evolve(&mut x, &sds, &noise);
            draws.push(poisson_draw(&mut rng, spec.log_rate(&x).exp()));
        }
    }
    Ok(ForecastSamples {
        origin: state.time_index(),
        horizon,
        draws,
    })
}
