//! Yields, gains, QBER and asymptotic secret fractions.
//!
//! A threshold detector sees an n-photon state with probability
//! 1 - (1 - eta)^n; background clicks add on top and land on the wrong
//! detector half of the time. Gains and error rates then follow from the
//! photon-number statistics of the source. Secret fractions:
//!
//! * sources emitting only signal states (single-photon emitters, plain
//!   weak coherent pulses) are charged for their multi-photon emissions
//!   through the untagged fraction (GLLP accounting);
//! * a two-decoy source instead bounds the single-photon yield and error
//!   from the decoy statistics (vacuum + weak decoy estimates).
//!
//! Weak-coherent gains have exact closed forms; everything else runs on the
//! three-bucket photon-number model with the multi bucket counted as a
//! two-photon state.

use crate::error::{Error, Result};
use crate::sources::{poisson_distribution, PhotonNumberDistribution, SourceModel};

/// Per-slot detection parameters shared by all key-rate formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionStats {
    /// Background yield Y0 (= background click probability).
    pub y0: f64,
    /// Total single-photon detection efficiency of the link.
    pub eta: f64,
    /// Intrinsic error rate of the optical system.
    pub e_int: f64,
    /// Error rate of background clicks (uncorrelated: 1/2).
    pub e0: f64,
    /// Error-correction inefficiency f(E) >= 1.
    pub f_ec: f64,
    /// Sifting ratio.
    pub q: f64,
}

impl DetectionStats {
    pub fn new(y0: f64, eta: f64) -> Self {
        Self { y0, eta, e_int: 0.03, e0: 0.5, f_ec: 1.22, q: 0.5 }
    }
}

/// Total gain and error decomposition for one source and channel setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainError {
    /// Total gain Q_mu.
    pub q_mu: f64,
    /// Total QBER E_mu.
    pub e_mu: f64,
    /// Single-photon gain Q_1.
    pub q1: f64,
    /// Single-photon error rate e_1.
    pub e1: f64,
    /// Untagged (non-multi-photon) fraction of detections.
    pub omega: f64,
}

/// Detection probability of an n-photon Fock state on a threshold detector.
pub fn fock_detection_prob(n: u32, eta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&eta));
    1.0 - (1.0 - eta).powi(n as i32)
}

/// Yield of the n-photon state, background included (exact form).
pub fn yield_n(n: u32, stats: &DetectionStats) -> f64 {
    let eta_n = fock_detection_prob(n, stats.eta);
    stats.y0 + eta_n - stats.y0 * eta_n
}

/// Error rate of the n-photon state.
///
/// Uses the additive yield approximation Y_n ~ Y0 + eta_n in the ratio,
/// consistent with how the error sum is assembled. Returns e0 when the
/// state can produce no clicks at all.
pub fn error_n(n: u32, stats: &DetectionStats) -> f64 {
    let eta_n = fock_detection_prob(n, stats.eta);
    let denom = stats.y0 + eta_n;
    if denom <= 0.0 {
        return stats.e0;
    }
    ((stats.e0 * stats.y0 + stats.e_int * eta_n) / denom).clamp(0.0, 0.5)
}

/// Gain, QBER and untagged fraction on the three-bucket photon model,
/// with the multi bucket treated as a two-photon state.
pub fn total_gain_qber(dist: &PhotonNumberDistribution, stats: &DetectionStats) -> GainError {
    let buckets = [(0u32, dist.p0), (1, dist.p1), (2, dist.p_multi)];
    let mut q_mu = 0.0;
    let mut eq = 0.0;
    for (n, p) in buckets {
        let y = yield_n(n, stats);
        let eta_n = fock_detection_prob(n, stats.eta);
        q_mu += y * p;
        eq += (stats.e0 * stats.y0 + stats.e_int * eta_n) * p;
    }
    finish_gain(q_mu, eq, dist.p_multi, stats, yield_n(1, stats) * dist.p1)
}

/// Gain and QBER of a weak coherent source of intensity `mu`, using the
/// exact Poisson closed forms. Must agree with the truncated photon-number
/// series; see the series oracle test.
pub fn wcs_total_gain_qber(mu: f64, stats: &DetectionStats) -> GainError {
    let dist = poisson_distribution(mu);
    let x = 1.0 - (-stats.eta * mu).exp();
    let q_mu = stats.y0 + (1.0 - stats.y0) * x;
    let eq = stats.e0 * stats.y0 + stats.e_int * x;
    finish_gain(q_mu, eq, dist.p_multi, stats, yield_n(1, stats) * dist.p1)
}

fn finish_gain(
    q_mu: f64,
    eq: f64,
    p_multi: f64,
    stats: &DetectionStats,
    q1: f64,
) -> GainError {
    let e_mu = if q_mu > 0.0 { (eq / q_mu).clamp(0.0, 0.5) } else { 0.5 };
    let omega = if q_mu > 0.0 { (1.0 - p_multi / q_mu).clamp(0.0, 1.0) } else { 0.0 };
    GainError { q_mu, e_mu, q1, e1: error_n(1, stats), omega }
}

/// Binary Shannon entropy in bits, continuous at the endpoints.
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&p), "entropy argument {p}");
    let p = p.clamp(0.0, 1.0);
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Secret fraction of a signal-state-only source under untagged-photon
/// (GLLP) accounting, bits per sent signal.
pub fn secret_fraction_gllp(dist: &PhotonNumberDistribution, stats: &DetectionStats) -> f64 {
    secret_fraction_gllp_gain(&total_gain_qber(dist, stats), stats)
}

/// GLLP secret fraction from precomputed gains (shared by the bucket and
/// closed-form paths).
pub fn secret_fraction_gllp_gain(gain: &GainError, stats: &DetectionStats) -> f64 {
    let omega = gain.omega.clamp(0.0, 1.0);
    let privacy = if omega > 0.0 {
        let phase = gain.e_mu / omega;
        if phase < 0.5 {
            omega * (1.0 - binary_entropy(phase))
        } else {
            0.0
        }
    } else {
        0.0
    };
    let s = -stats.f_ec * binary_entropy(gain.e_mu) + privacy;
    stats.q * gain.q_mu * s.max(0.0)
}

/// Secret fraction from explicit single-photon contributions,
/// S = q max{ -Q_mu f h2(E_mu) + Q1 (1 - h2(e1)), 0 }.
pub fn secret_fraction_general(
    q_mu: f64,
    e_mu: f64,
    q1: f64,
    e1: f64,
    f_ec: f64,
    q: f64,
) -> f64 {
    let key = if e1 < 0.5 { q1 * (1.0 - binary_entropy(e1)) } else { 0.0 };
    q * (key - q_mu * f_ec * binary_entropy(e_mu)).max(0.0)
}

/// Asymptotic vacuum + weak-decoy estimates for the single-photon yield
/// (lower bound) and error rate (upper bound), for decoy intensities
/// (mu, nu1, 0). Returns `None` when the yield bound is not positive.
pub fn asymptotic_decoy_bounds(mu: f64, nu1: f64, stats: &DetectionStats) -> Option<(f64, f64)> {
    debug_assert!(mu > nu1 && nu1 > 0.0);
    let g_mu = wcs_total_gain_qber(mu, stats);
    let g_nu = wcs_total_gain_qber(nu1, stats);
    let nu_sq_ratio = nu1 * nu1 / (mu * mu);
    let y1_l = mu / (mu * nu1 - nu1 * nu1)
        * (g_nu.q_mu * nu1.exp()
            - g_mu.q_mu * mu.exp() * nu_sq_ratio
            - (1.0 - nu_sq_ratio) * stats.y0);
    if y1_l <= 0.0 {
        return None;
    }
    let y1_l = y1_l.min(1.0);
    let e1_u = ((g_nu.e_mu * g_nu.q_mu * nu1.exp() - stats.e0 * stats.y0) / (y1_l * nu1))
        .clamp(0.0, 0.5);
    Some((y1_l, e1_u))
}

/// Asymptotic secret fraction of the two-decoy protocol.
pub fn secret_fraction_tds_asymptotic(source: &SourceModel, stats: &DetectionStats) -> Result<f64> {
    let SourceModel::Tds { mu, nu1, .. } = *source else {
        return Err(Error::parameter(
            "secret_fraction_tds_asymptotic",
            "source is not a two-decoy source",
        ));
    };
    let Some((y1_l, e1_u)) = asymptotic_decoy_bounds(mu, nu1, stats) else {
        return Ok(0.0);
    };
    let g_mu = wcs_total_gain_qber(mu, stats);
    let q1_l = y1_l * mu * (-mu).exp();
    Ok(secret_fraction_general(g_mu.q_mu, g_mu.e_mu, q1_l, e1_u, stats.f_ec, stats.q))
}

/// The signal intensity solving (1 - mu) e^-mu = f h2(e) / (1 - h2(e)),
/// the stationary point of the simplified low-loss decoy rate.
///
/// Fails when the right-hand side reaches 1, where no root exists in (0, 1).
pub fn optimal_mu(e_int: f64, f_ec: f64) -> Result<f64> {
    if !(0.0 < e_int && e_int < 0.5) {
        return Err(Error::parameter("optimal_mu", "e_int must lie in (0, 0.5)"));
    }
    if f_ec < 1.0 {
        return Err(Error::parameter("optimal_mu", "f_ec must be >= 1"));
    }
    let h = binary_entropy(e_int);
    let rhs = f_ec * h / (1.0 - h);
    if rhs >= 1.0 {
        return Err(Error::domain(
            "optimal_mu",
            format!("no optimal intensity: f h2(e)/(1 - h2(e)) = {rhs} >= 1"),
        ));
    }
    let residual = |mu: f64| (1.0 - mu) * (-mu).exp() - rhs;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // residual(0) = 1 - rhs > 0, residual(1) = -rhs < 0: bisect
    let mut mid = 0.5;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r.abs() < 1e-10 {
            break;
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::sps_distribution;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    fn stats(y0: f64, eta: f64) -> DetectionStats {
        DetectionStats::new(y0, eta)
    }

    #[test]
    fn fock_detection_basics() {
        let eta = 0.37;
        assert_eq!(fock_detection_prob(1, eta), eta);
        assert_eq!(fock_detection_prob(0, eta), 0.0);
        assert!(close(fock_detection_prob(2, 0.1), 0.19, 1e-12));
    }

    #[test]
    fn yield_reference_values() {
        let s = stats(1e-5, 0.1);
        assert_eq!(yield_n(0, &s), 1e-5);
        assert!(close(yield_n(1, &s), 0.1000090, 1e-7), "got {}", yield_n(1, &s));
        // non-decreasing in n
        let mut last = 0.0;
        for n in 0..6 {
            let y = yield_n(n, &s);
            assert!(y >= last);
            last = y;
        }
    }

    #[test]
    fn error_reference_values() {
        // no background: pure intrinsic error
        let s = stats(0.0, 0.1);
        assert_eq!(error_n(1, &s), 0.03);
        // no signal: pure background error
        let s = stats(1e-4, 0.0);
        assert_eq!(error_n(1, &s), 0.5);
        // balanced: (0.5 + 0.03) / 2
        let s = stats(0.1, 0.1);
        assert!(close(error_n(1, &s), 0.265, 1e-12));
    }

    #[test]
    fn gain_zero_channel() {
        let d = poisson_distribution(0.5);
        let g = total_gain_qber(&d, &stats(0.0, 0.0));
        assert_eq!(g.q_mu, 0.0);
        assert_eq!(g.e_mu, 0.5);
    }

    #[test]
    fn wcs_gain_reference() {
        let g = wcs_total_gain_qber(0.5, &stats(0.0, 0.1));
        assert!(close(g.q_mu, 1.0 - (-0.05f64).exp(), 1e-12));
        assert!(close(g.q_mu, 0.04877, 5e-6), "got {}", g.q_mu);
    }

    #[test]
    fn wcs_closed_form_matches_series() {
        // truncated photon-number series oracle, n <= 50
        for (mu, y0, eta) in [(0.5, 1e-5, 0.1), (0.9, 1e-3, 0.01), (0.1, 0.0, 0.8)] {
            let s = stats(y0, eta);
            let mut q = 0.0;
            let mut eq = 0.0;
            let mut p = (-mu_f(mu)).exp();
            for n in 0..=50u32 {
                if n > 0 {
                    p *= mu / n as f64;
                }
                let eta_n = fock_detection_prob(n, eta);
                q += (y0 + eta_n - y0 * eta_n) * p;
                eq += (0.5 * y0 + 0.03 * eta_n) * p;
            }
            let g = wcs_total_gain_qber(mu, &s);
            assert!(close(g.q_mu, q, 1e-9), "Q mismatch at mu={mu}: {} vs {q}", g.q_mu);
            assert!(
                close(g.e_mu * g.q_mu, eq, 1e-9),
                "EQ mismatch at mu={mu}: {} vs {eq}",
                g.e_mu * g.q_mu
            );
        }
    }

    fn mu_f(mu: f64) -> f64 {
        mu
    }

    #[test]
    fn realistic_sps_gain_at_unit_efficiency() {
        let d = sps_distribution(0.5147, 6.4e-3).unwrap();
        let g = total_gain_qber(&d, &stats(0.0, 1.0));
        assert!(close(g.q_mu, 0.51385, 5e-5), "Q {}", g.q_mu);
        assert!(close(g.omega, 0.99835, 5e-5), "Omega {}", g.omega);
    }

    #[test]
    fn entropy_reference_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!(close(binary_entropy(0.03), 0.19439, 5e-6));
    }

    #[test]
    fn gllp_zero_above_half_error() {
        let d = sps_distribution(0.5, 0.01).unwrap();
        let mut s = stats(0.0, 0.5);
        s.e_int = 0.5;
        assert_eq!(secret_fraction_gllp(&d, &s), 0.0);
    }

    #[test]
    fn gllp_worked_example() {
        // Omega = 1, E = 0.03, Q = 0.05, f = 1.22, q = 0.5
        let gain = GainError { q_mu: 0.05, e_mu: 0.03, q1: 0.05, e1: 0.03, omega: 1.0 };
        let s = stats(0.0, 1.0);
        let v = secret_fraction_gllp_gain(&gain, &s);
        assert!(close(v, 0.01421, 5e-6), "got {v}");
    }

    #[test]
    fn shannon_limit_near_eleven_percent() {
        // ideal source, ideal apparatus: positive key iff h2(E) < 1/2
        let ideal = SourceModel::IdealSps.distribution().unwrap();
        let fraction_at = |e: f64| {
            let s = DetectionStats { y0: 0.0, eta: 0.9, e_int: e, e0: 0.5, f_ec: 1.0, q: 1.0 };
            secret_fraction_gllp(&ideal, &s)
        };
        let (mut lo, mut hi) = (0.05, 0.2);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fraction_at(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let cutoff = 0.5 * (lo + hi);
        assert!(close(cutoff, 0.110, 1e-3), "cutoff {cutoff}");
    }

    #[test]
    fn general_fraction_edges() {
        assert_eq!(secret_fraction_general(0.05, 0.03, 0.0, 0.03, 1.22, 0.5), 0.0);
        assert_eq!(secret_fraction_general(0.05, 0.01, 0.05, 0.5, 1.0, 0.5), 0.0);
        // with Q1 = Q_mu and e1 = E_mu this is GLLP at Omega = 1
        let gain = GainError { q_mu: 0.05, e_mu: 0.03, q1: 0.05, e1: 0.03, omega: 1.0 };
        let s = stats(0.0, 1.0);
        let a = secret_fraction_general(0.05, 0.03, 0.05, 0.03, s.f_ec, s.q);
        let b = secret_fraction_gllp_gain(&gain, &s);
        assert!(close(a, b, 1e-12));
    }

    #[test]
    fn tds_vanishes_without_signal() {
        let src = SourceModel::Tds { mu: 0.5, nu1: 0.05, p_mu: 0.7, p_nu1: 0.2 };
        let s = stats(1e-4, 0.0);
        assert_eq!(secret_fraction_tds_asymptotic(&src, &s).unwrap(), 0.0);
    }

    #[test]
    fn decoy_bounds_sandwich_truth() {
        // Y1_L <= true Y1 and e1_U >= true e1 on a random parameter grid
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..100 {
            let eta = 10f64.powf(rng.gen_range(-4.0..-0.3));
            let y0 = 10f64.powf(rng.gen_range(-8.0..-3.0));
            let mu = rng.gen_range(0.2..0.9);
            let nu1 = rng.gen_range(0.01..0.5 * mu);
            let s = stats(y0, eta);
            if let Some((y1_l, e1_u)) = asymptotic_decoy_bounds(mu, nu1, &s) {
                let y1 = yield_n(1, &s);
                let e1 = error_n(1, &s);
                assert!(y1_l <= y1 + 1e-12, "Y1 bound breached: {y1_l} > {y1}");
                assert!(e1_u >= e1 - 1e-12, "e1 bound breached: {e1_u} < {e1}");
                checked += 1;
            }
        }
        assert!(checked > 60, "only {checked} feasible draws");
    }

    #[test]
    fn optimal_mu_reference() {
        let mu = optimal_mu(0.03, 1.22).unwrap();
        assert!(close(mu, 0.510, 5e-3), "got {mu}");
        // residual is tiny at the root
        let h = binary_entropy(0.03);
        let rhs = 1.22 * h / (1.0 - h);
        assert!(((1.0 - mu) * (-mu).exp() - rhs).abs() < 1e-10);
    }

    #[test]
    fn optimal_mu_limit_and_error() {
        // e -> 0: root approaches 1
        let mu = optimal_mu(1e-9, 1.0).unwrap();
        assert!(mu > 0.99, "got {mu}");
        // RHS >= 1: no root
        assert!(optimal_mu(0.3, 2.0).is_err());
    }

    #[test]
    fn optimal_mu_maximizes_simplified_rate() {
        // grid-scan oracle of the simplified rate
        let e = 0.03;
        let f = 1.22;
        let h = binary_entropy(e);
        let rate = |mu: f64| -mu * f * h + mu * (-mu).exp() * (1.0 - h);
        let mut best = (0.0, f64::MIN);
        let mut mu = 0.005;
        while mu < 1.0 {
            let r = rate(mu);
            if r > best.1 {
                best = (mu, r);
            }
            mu += 0.001;
        }
        let root = optimal_mu(e, f).unwrap();
        assert!((root - best.0).abs() <= 0.001, "root {root} vs scan {}", best.0);
    }

    proptest! {
        #[test]
        fn fraction_decreases_with_background(
            eta in 0.001..0.5f64,
            y0a in 1e-8..1e-2f64,
            scale in 1.5..50.0f64,
        ) {
            let d = sps_distribution(0.5147, 6.4e-3).unwrap();
            let low = secret_fraction_gllp(&d, &stats(y0a, eta));
            let high = secret_fraction_gllp(&d, &stats(y0a * scale, eta));
            prop_assert!(high <= low + 1e-15);
        }

        #[test]
        fn fraction_bounded_by_sifted_gain(eta in 0.0..1.0f64, y0 in 0.0..0.01f64, mu in 0.01..1.0f64) {
            let s = stats(y0, eta);
            let g = wcs_total_gain_qber(mu, &s);
            let v = secret_fraction_gllp_gain(&g, &s);
            prop_assert!(v >= 0.0);
            prop_assert!(v <= s.q * g.q_mu + 1e-15);
        }
    }
}
