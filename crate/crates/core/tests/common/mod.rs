//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

/// `V_t = min over k of the product of the k most recent H values`, by brute force.
pub fn brute_force_min_cumulative(h: &[f64]) -> Vec<f64> {
    (0..h.len())
        .map(|t| {
            (0..=t)
                .map(|k| h[t - k..=t].iter().product::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Poisson pmf from `y ln λ − λ − Σ ln k`.
pub fn poisson_pmf(y: u64, rate: f64) -> f64 {
    let ln_fact: f64 = (1..=y).map(|k| (k as f64).ln()).sum();
    (y as f64 * rate.ln() - rate - ln_fact).exp()
}

/// Deterministic filter for a 1-D local-level Poisson model on a fixed grid
/// of log-rates. Returns `p(y_t | y_{1..t-1})` for every observation.
pub fn grid_predictive_likelihoods(
    prior_mean: f64,
    prior_var: f64,
    noise_var: f64,
    ys: &[u64],
    nodes: usize,
) -> Vec<f64> {
    let sd = prior_var.sqrt();
    let (lo, hi) = (prior_mean - 6.0 * sd, prior_mean + 6.0 * sd);
    let dx = (hi - lo) / (nodes - 1) as f64;
    let x: Vec<f64> = (0..nodes).map(|i| lo + i as f64 * dx).collect();
    let normal =
        |z: f64, var: f64| (-0.5 * z * z / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt();

    let mut density: Vec<f64> = x
        .iter()
        .map(|&xi| normal(xi - prior_mean, prior_var))
        .collect();
    let kernel_half = ((8.0 * noise_var.sqrt()) / dx).ceil() as isize;
    let kernel: Vec<f64> = (-kernel_half..=kernel_half)
        .map(|k| normal(k as f64 * dx, noise_var) * dx)
        .collect();

    let mut out = Vec::with_capacity(ys.len());
    for &y in ys {
        let mut predicted = vec![0.0; nodes];
        for (i, p) in predicted.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let j = i as isize + k as isize - kernel_half;
                if j >= 0 && (j as usize) < nodes {
                    acc += density[j as usize] * w;
                }
            }
            *p = acc;
        }
        let joint: Vec<f64> = predicted
            .iter()
            .zip(&x)
            .map(|(p, xi)| p * poisson_pmf(y, xi.exp()))
            .collect();
        let likelihood: f64 = joint.iter().sum::<f64>() * dx;
        out.push(likelihood);
        density = joint.into_iter().map(|j| j / likelihood).collect();
    }
    out
}

/// Newsvendor utility with the sales term written as `min(y, d)`.
pub fn newsvendor_utility(price: f64, cost: f64, resale: f64, d: u64, y: u64) -> f64 {
    let sold = y.min(d) as f64;
    let left = d.saturating_sub(y) as f64;
    (price - cost) * sold + (resale - cost) * left
}

/// Every integer window with `lo[i] <= w[i] <= hi[i]`.
pub fn all_windows(lo: &[u64], hi: &[u64]) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for (&l, &h) in lo.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (l..=h).map(move |v| {
                    let mut w = prefix.clone();
                    w.push(v);
                    w
                })
            })
            .collect();
    }
    out
}

/// Compensated (Neumaier) summation.
pub fn exact_sum(xs: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = sum + x;
        c += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + c
}
