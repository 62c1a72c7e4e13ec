//! Monte Carlo validation of the finite-statistics bounds.
//!
//! The production pipeline is deterministic (expected-value tallies); this
//! module exists solely to check, by sampling, that the Chernoff and
//! random-sampling corrections cover the truth at their stated failure
//! probabilities. Each runner returns the number of violations observed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};

use crate::keyrate_finite::{
    multiphoton_upper, rescaled_count_bounds, sampling_correction_gamma, SecurityParams,
};

/// Sample n ~ Binomial(pulses, p_click) and count how often the true
/// rescaled mean e^k * pulses * p_click / p_k escapes [n-, n+].
pub fn chernoff_rescale_violations(
    trials: usize,
    pulses: u64,
    p_click: f64,
    intensity: f64,
    p_k: f64,
    eps_pe: f64,
    seed: u64,
) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let binom = Binomial::new(pulses, p_click).expect("valid binomial");
    let truth = intensity.exp() * pulses as f64 * p_click / p_k;
    let mut violations = 0;
    for _ in 0..trials {
        let n = binom.sample(&mut rng) as f64;
        let (plus, minus) = rescaled_count_bounds(n, intensity, p_k, eps_pe);
        if truth < minus || truth > plus {
            violations += 1;
        }
    }
    violations
}

/// Sample the realized multi-photon count and check it stays below the
/// Chernoff upper bound built from its expectation.
pub fn multiphoton_upper_violations(
    trials: usize,
    pulses: u64,
    p_multi: f64,
    sec: &SecurityParams,
    seed: u64,
) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let binom = Binomial::new(pulses, p_multi).expect("valid binomial");
    let bound = multiphoton_upper(pulses as f64 * p_multi, sec);
    let mut violations = 0;
    for _ in 0..trials {
        if binom.sample(&mut rng) as f64 > bound {
            violations += 1;
        }
    }
    violations
}

/// Split a population with `error_rate` errors into X and Z samples without
/// replacement and check the X rate stays below the Z rate plus gamma.
pub fn gamma_violations(
    trials: usize,
    n_x: u64,
    n_z: u64,
    error_rate: f64,
    eps: f64,
    seed: u64,
) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n_x + n_z;
    let errors = (error_rate * total as f64).round() as u64;
    let hyper = Hypergeometric::new(total, errors, n_x).expect("valid hypergeometric");
    let mut violations = 0;
    for _ in 0..trials {
        let k_x = hyper.sample(&mut rng);
        let k_z = errors - k_x;
        let rate_x = k_x as f64 / n_x as f64;
        let rate_z = k_z as f64 / n_z as f64;
        let gamma = sampling_correction_gamma(n_x as f64, n_z as f64, rate_z.min(0.5), eps);
        if rate_x > rate_z + gamma {
            violations += 1;
        }
    }
    violations
}
