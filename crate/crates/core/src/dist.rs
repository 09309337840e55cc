//! Count distributions used by the filter and the monitor.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::real::Real;

/// Largest rate handed to the Poisson sampler.
const MAX_SAMPLED_RATE: f64 = 1e15;

/// Log Poisson pmf evaluated through the log-gamma function.
pub fn poisson_ln_pmf<T: Real>(y: u64, rate: T) -> T {
    if rate <= T::zero() {
        return if y == 0 { T::zero() } else { T::neg_infinity() };
    }
    if rate.is_infinite() {
        return T::neg_infinity();
    }
    T::from_count(y) * rate.ln() - rate - T::lit(ln_factorial(y))
}

pub fn poisson_pmf<T: Real>(y: u64, rate: T) -> T {
    poisson_ln_pmf(y, rate).exp()
}

/// Negative-binomial pmf parameterised by its mean and variance.
///
/// Requires `variance > mean > 0`; the size is `r = mean² / (variance − mean)`
/// and the success probability `r / (r + mean)`.
pub fn negative_binomial_pmf<T: Real>(y: u64, mean: T, variance: T) -> T {
    let m = mean.to_f64_lossy();
    let v = variance.to_f64_lossy();
    debug_assert!(v > m && m > 0.0);
    let size = m * m / (v - m);
    let prob = size / (size + m);
    let yf = y as f64;
    let ln_pmf = ln_gamma(yf + size) - ln_gamma(size) - ln_factorial(y)
        + size * prob.ln()
        + yf * (m / (size + m)).ln();
    T::lit(ln_pmf.exp())
}

pub(crate) fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

pub(crate) fn uniform01<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

/// Draws a Poisson count; non-positive or non-finite rates are clamped.
pub(crate) fn poisson_draw<T: Real, R: Rng + ?Sized>(rng: &mut R, rate: T) -> u64 {
    let rate = rate.to_f64_lossy();
    let rate = if rate.is_nan() {
        0.0
    } else {
        rate.min(MAX_SAMPLED_RATE)
    };
    if rate <= 0.0 {
        return 0;
    }
    match Poisson::new(rate) {
        Ok(p) => {
            let draw: f64 = p.sample(rng);
            draw as u64
        }
        Err(_) => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nb_by_product(y: u64, size: u64, prob: f64) -> f64 {
        // C(y + r − 1, y) p^r (1 − p)^y with integer size
        let mut binom = 1.0;
        for i in 0..y {
            binom *= (size + i) as f64 / (i + 1) as f64;
        }
        binom * prob.powi(size as i32) * (1.0 - prob).powi(y as i32)
    }

    #[test]
    fn poisson_closed_forms() {
        let p5: f64 = poisson_pmf(5, 5.0);
        assert!((p5 - 0.175_467_369_767_850_7).abs() < 1e-12);
        let p0: f64 = poisson_pmf(0, 5.0);
        assert!((p0 - (-5.0f64).exp()).abs() < 1e-15);
        assert_eq!(poisson_pmf::<f64>(0, 0.0), 1.0);
        assert_eq!(poisson_pmf::<f64>(3, 0.0), 0.0);
    }

    #[test]
    fn negative_binomial_matches_product_formula() {
        // mean 5, variance 10 -> size 5, prob 1/2
        for y in 0..30 {
            let got: f64 = negative_binomial_pmf(y, 5.0, 10.0);
            let want = nb_by_product(y, 5, 0.5);
            assert!(
                (got - want).abs() < 1e-12 * want.max(1e-300),
                "y={y}: {got} vs {want}"
            );
        }
        let at5: f64 = negative_binomial_pmf(5, 5.0, 10.0);
        assert!((at5 - 0.123_046_875).abs() < 1e-12);
    }

    #[test]
    fn negative_binomial_sums_to_one() {
        let total: f64 = (0..2000)
            .map(|y| negative_binomial_pmf::<f64>(y, 40.0, 170.0))
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn poisson_draw_clamps() {
        let mut rng = crate::rng::stream_rng(1, crate::rng::Stream::Simulate, 0);
        assert_eq!(poisson_draw(&mut rng, -1.0f64), 0);
        assert_eq!(poisson_draw(&mut rng, f64::NAN), 0);
        assert!(poisson_draw(&mut rng, f64::INFINITY) > 0);
    }
}
