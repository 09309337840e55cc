use crate::dist::{poisson_draw, standard_normal};
use crate::error::{Error, Result};
use crate::model::series::TimeSeries;
use crate::model::spec::ModelSpec;
use crate::real::Real;
use crate::rng::{stream_rng, Stream};

/// Draws `horizon` counts from the generative model, starting at time 0.
///
/// The initial state is drawn from the prior at time −1 and evolved once before
/// the first observation, matching the filter's timing. Returns the series and
/// the latent state at each observed time.
pub fn simulate<T: Real>(
    spec: &ModelSpec<T>,
    horizon: usize,
    seed: u64,
) -> Result<(TimeSeries, Vec<Vec<T>>)> {
    spec.validate()?;
    if horizon == 0 {
        return Err(Error::input("simulation horizon must be >= 1"));
    }
    let mut rng = stream_rng(seed, Stream::Simulate, 0);
    let mut state: Vec<T> = spec
        .prior_mean
        .iter()
        .zip(spec.prior_sds())
        .map(|(m, sd)| *m + sd * standard_normal::<T, _>(&mut rng))
        .collect();
    let sds = spec.noise_sds();
    let mut noise = vec![T::zero(); spec.noise_groups()];
    let mut counts = Vec::with_capacity(horizon);
    let mut latent = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        for z in noise.iter_mut() {
            *z = standard_normal(&mut rng);
        }
        spec.evolve(&mut state, &sds, &noise);
        counts.push(poisson_draw(&mut rng, spec.log_rate(&state).exp()));
        latent.push(state.clone());
    }
    Ok((TimeSeries::new(0, counts), latent))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_level_is_constant() {
        let spec = ModelSpec::local_level(0.0, 5f64.ln(), 1e-18).unwrap();
        let (series, latent) = simulate(&spec, 3, 42).unwrap();
        assert_eq!(series.len(), 3);
        for x in &latent {
            assert!((x[0] - 5f64.ln()).abs() < 1e-8);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = ModelSpec::local_level(0.01, 3.0, 0.5).unwrap();
        assert_eq!(
            simulate(&spec, 50, 9).unwrap(),
            simulate(&spec, 50, 9).unwrap()
        );
        assert_ne!(
            simulate(&spec, 50, 9).unwrap().0,
            simulate(&spec, 50, 10).unwrap().0
        );
    }

    #[test]
    fn zero_noise_slope_adds_linearly() {
        let spec =
            ModelSpec::<f64>::new(2, None, vec![0.0, 0.0], vec![1.0, 0.01], vec![1e-18, 1e-18])
                .unwrap();
        let (_, latent) = simulate(&spec, 40, 1).unwrap();
        // hand-rolled recursion: level_t = level_{t-1} + slope, starting from the prior at t = -1
        let mut level: f64 = 1.0;
        for x in &latent {
            level += 0.01;
            assert!((x[0] - level).abs() < 1e-6, "{} vs {level}", x[0]);
            assert!((x[1] - 0.01).abs() < 1e-8);
        }
        for pair in latent.windows(2) {
            assert!((pair[1][0] - pair[0][0] - 0.01).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = ModelSpec::local_level(0.01, 3.0, 0.5).unwrap();
        assert!(simulate(&spec, 0, 1).is_err());
        let mut bad = spec.clone();
        bad.state_noise_variances[0] = -1.0;
        assert!(matches!(simulate(&bad, 3, 1), Err(Error::Config(_))));
    }
}
