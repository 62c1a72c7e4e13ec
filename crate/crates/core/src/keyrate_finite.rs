//! Finite-block statistics and secret-key-length formulas.
//!
//! Secret keys extracted from a single satellite pass come from short
//! blocks, so every estimated quantity carries a statistical correction:
//! observed counts are widened by multiplicative Chernoff deviations,
//! decoy estimates are built from the worst combination of those bounds,
//! and the phase-error transfer from the Z to the X basis pays a random
//! sampling (without replacement) penalty. Two key-length formulas are
//! provided: `skl_tds` for the efficient-BB84 two-decoy protocol and
//! `skl_sps` for a single (possibly pre-attenuated) sub-Poissonian source.
//!
//! Block tallies are deterministic expected values rather than sampled
//! counts, matching a design-study pipeline; the `montecarlo` module
//! validates the coverage of every bound empirically.

use crate::channel::ChannelBudget;
use crate::error::{Error, Result};
use crate::geometry::PassSample;
use crate::keyrate_asymptotic::{
    binary_entropy, total_gain_qber, wcs_total_gain_qber, DetectionStats,
};
use crate::sources::{PhotonNumberDistribution, SourceModel};

/// Error-correction inefficiency of the finite-key pipeline.
const EC_EFFICIENCY: f64 = 1.22;

/// Composable security failure probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams {
    pub eps_sec: f64,
    pub eps_cor: f64,
}

impl Default for SecurityParams {
    fn default() -> Self {
        Self { eps_sec: 1e-9, eps_cor: 1e-15 }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("eps_sec", self.eps_sec), ("eps_cor", self.eps_cor)] {
            if !(0.0 < e && e < 1.0) {
                return Err(Error::parameter(
                    "SecurityParams",
                    format!("{name} = {e} outside (0, 1)"),
                ));
            }
        }
        Ok(())
    }
}

/// Measurement basis of the efficient BB84 protocol: X keys, Z estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    X = 0,
    Z = 1,
}

/// Source-specific protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceProtocol {
    /// Two-decoy weak coherent protocol: signal `mu`, weak decoy `nu1`,
    /// vacuum decoy, and the probabilities of choosing mu and nu1
    /// (the vacuum probability is the remainder).
    Tds { mu: f64, nu1: f64, p_mu: f64, p_nu1: f64 },
    /// Single sub-Poissonian source with sender-side pre-attenuation.
    Sps { eta_att: f64 },
}

/// Protocol parameters of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Probability that either party picks the key (X) basis.
    pub p_x: f64,
    pub source: SourceProtocol,
    /// Transmission window (t_start, t_end) in pass time, inclusive.
    pub window: (f64, f64),
}

impl ProtocolParams {
    pub fn tds(p_x: f64, mu: f64, nu1: f64, p_mu: f64, p_nu1: f64, window: (f64, f64)) -> Self {
        Self { p_x, source: SourceProtocol::Tds { mu, nu1, p_mu, p_nu1 }, window }
    }

    pub fn sps(p_x: f64, eta_att: f64, window: (f64, f64)) -> Self {
        Self { p_x, source: SourceProtocol::Sps { eta_att }, window }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.p_x && self.p_x <= 1.0) {
            return Err(Error::parameter("ProtocolParams", "basis bias must lie in (0, 1]"));
        }
        if self.window.0 > self.window.1 {
            return Err(Error::parameter("ProtocolParams", "window start after window end"));
        }
        match self.source {
            SourceProtocol::Tds { mu, nu1, p_mu, p_nu1 } => {
                if !(mu > nu1 && nu1 > 0.0) {
                    return Err(Error::parameter(
                        "ProtocolParams",
                        format!("need mu > nu1 > 0, got mu={mu}, nu1={nu1}"),
                    ));
                }
                if p_mu <= 0.0 || p_nu1 <= 0.0 || p_mu + p_nu1 >= 1.0 {
                    return Err(Error::parameter(
                        "ProtocolParams",
                        "intensity probabilities must be positive with nonzero vacuum share",
                    ));
                }
            }
            SourceProtocol::Sps { eta_att } => {
                if !(0.0 < eta_att && eta_att <= 1.0) {
                    return Err(Error::parameter(
                        "ProtocolParams",
                        "pre-attenuation must lie in (0, 1]",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Expected counts and error counts of one (basis, intensity) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellTally {
    pub count: f64,
    pub errors: f64,
}

/// Per-basis, per-intensity expected counts of one block.
///
/// Intensity index 0 is the signal; for a two-decoy block indices 1 and 2
/// are the weak and vacuum decoys, for a single-source block they stay
/// empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTally {
    pub n_sent: f64,
    pub protocol: ProtocolParams,
    cells: [[CellTally; 3]; 2],
}

impl BlockTally {
    pub fn empty(protocol: ProtocolParams) -> Self {
        Self { n_sent: 0.0, protocol, cells: Default::default() }
    }

    pub fn cell(&self, basis: Basis, intensity: usize) -> &CellTally {
        &self.cells[basis as usize][intensity]
    }

    pub fn cell_mut(&mut self, basis: Basis, intensity: usize) -> &mut CellTally {
        &mut self.cells[basis as usize][intensity]
    }

    /// Total detections in a basis across intensities.
    pub fn detections(&self, basis: Basis) -> f64 {
        self.cells[basis as usize].iter().map(|c| c.count).sum()
    }

    /// Total errors in a basis across intensities.
    pub fn errors(&self, basis: Basis) -> f64 {
        self.cells[basis as usize].iter().map(|c| c.errors).sum()
    }

    /// Observed error rate in a basis (0 when there are no detections).
    pub fn error_rate(&self, basis: Basis) -> f64 {
        let n = self.detections(basis);
        if n > 0.0 {
            (self.errors(basis) / n).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Multiplicative-Chernoff deviations for an observed count `x`.
pub fn chernoff_deltas(x: f64, eps_pe: f64) -> (f64, f64) {
    debug_assert!(x >= 0.0);
    debug_assert!(0.0 < eps_pe && eps_pe < 1.0);
    let beta = -eps_pe.ln();
    let plus = beta + (2.0 * beta * x + beta * beta).sqrt();
    let minus = 0.5 * beta + (2.0 * beta * x + 0.25 * beta * beta).sqrt();
    (plus, minus)
}

/// Chernoff-widened count rescaled to the per-intensity estimate
/// n^± = e^k (n ± delta^±) / p_k; the lower bound is clamped at zero.
pub fn rescaled_count_bounds(n: f64, intensity: f64, p_k: f64, eps_pe: f64) -> (f64, f64) {
    debug_assert!(p_k > 0.0);
    let (dp, dm) = chernoff_deltas(n, eps_pe);
    let scale = intensity.exp() / p_k;
    let plus = scale * (n + dp);
    let minus = (scale * (n - dm)).max(0.0);
    (plus, minus)
}

/// Finite decoy-state estimates of the vacuum and single-photon events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyBounds {
    /// Lower bound on vacuum events in the X basis.
    pub s0_l_x: f64,
    /// Lower bound on single-photon events in the X basis.
    pub s1_l_x: f64,
    /// Lower bound on single-photon events in the Z basis.
    pub s1_l_z: f64,
    /// Upper bound on single-photon errors in the Z basis.
    pub v1_u_z: f64,
    /// False when any bound had to be clamped from an infeasible value.
    pub feasible: bool,
}

/// Two-decoy (vacuum + weak) estimators with Chernoff-rescaled counts,
/// parameter-estimation share eps_sec / 21.
pub fn decoy_yield_bounds(tally: &BlockTally, sec: &SecurityParams) -> Result<DecoyBounds> {
    let SourceProtocol::Tds { mu, nu1, p_mu, p_nu1 } = tally.protocol.source else {
        return Err(Error::parameter(
            "decoy_yield_bounds",
            "block was not produced by a two-decoy protocol",
        ));
    };
    let eps_pe = sec.eps_sec / 21.0;
    let p_nu2 = (1.0 - p_mu - p_nu1).max(0.0);
    if p_nu2 <= 0.0 {
        return Err(Error::parameter("decoy_yield_bounds", "vacuum decoy share is zero"));
    }
    // Poisson photon-number weights mixed over the intensity choices
    let tau0 = p_mu * (-mu).exp() + p_nu1 * (-nu1).exp() + p_nu2;
    let tau1 = p_mu * mu * (-mu).exp() + p_nu1 * nu1 * (-nu1).exp();

    let cap = tally.n_sent.max(0.0);
    let mut feasible = true;
    let mut clamp = |v: f64| -> f64 {
        if v < 0.0 {
            feasible = false;
        }
        v.clamp(0.0, cap)
    };

    let mut s0 = [0.0f64; 2];
    let mut s1 = [0.0f64; 2];
    for (bi, basis) in [Basis::X, Basis::Z].into_iter().enumerate() {
        let n_mu = tally.cell(basis, 0).count;
        let n_nu1 = tally.cell(basis, 1).count;
        let n_nu2 = tally.cell(basis, 2).count;
        let (mu_p, _) = rescaled_count_bounds(n_mu, mu, p_mu, eps_pe);
        let (_, nu1_m) = rescaled_count_bounds(n_nu1, nu1, p_nu1, eps_pe);
        let (nu2_p, nu2_m) = rescaled_count_bounds(n_nu2, 0.0, p_nu2, eps_pe);

        let s0_l = clamp(tau0 * nu2_m);
        let s1_raw = tau1 * mu * (nu1_m - nu2_p - nu1 * nu1 / (mu * mu) * (mu_p - s0_l / tau0))
            / (mu * nu1 - nu1 * nu1);
        s0[bi] = s0_l;
        s1[bi] = clamp(s1_raw);
    }

    let m_nu1 = tally.cell(Basis::Z, 1).errors;
    let m_nu2 = tally.cell(Basis::Z, 2).errors;
    let (m_nu1_p, _) = rescaled_count_bounds(m_nu1, nu1, p_nu1, eps_pe);
    let (_, m_nu2_m) = rescaled_count_bounds(m_nu2, 0.0, p_nu2, eps_pe);
    let v1_u = (tau1 * (m_nu1_p - m_nu2_m) / nu1).clamp(0.0, cap);

    Ok(DecoyBounds { s0_l_x: s0[0], s1_l_x: s1[0], s1_l_z: s1[1], v1_u_z: v1_u, feasible })
}

/// Random-sampling-without-replacement correction: with probability at
/// least 1 - eps, the X-basis error rate exceeds the Z-observed rate
/// `lambda_rate` by less than the returned gamma.
///
/// Degenerate sample sizes return the maximally pessimistic 1/2.
pub fn sampling_correction_gamma(n_x: f64, n_z: f64, lambda_rate: f64, eps: f64) -> f64 {
    if n_x <= 0.0 || n_z <= 0.0 {
        return 0.5;
    }
    debug_assert!((0.0..=0.5 + 1e-12).contains(&lambda_rate));
    debug_assert!(0.0 < eps && eps < 1.0);
    // finite samples cannot certify a rate below ~1/(n_x + n_z)
    let b = lambda_rate.clamp(1.0 / (n_x + n_z), 0.5);
    let g1 = (n_x + n_z) * (1.0 - b) * b / (n_x * n_z * std::f64::consts::LN_2);
    let g2 = ((n_x + n_z) / (n_x * n_z * (1.0 - b) * b) / (eps * eps)).log2();
    if g2 <= 0.0 {
        return 0.0;
    }
    (g1 * g2).sqrt()
}

/// Upper bound on the X-basis phase error rate of a two-decoy block.
pub fn phase_error_upper_tds(bounds: &DecoyBounds, sec: &SecurityParams) -> f64 {
    if bounds.s1_l_z <= 0.0 {
        return 0.5;
    }
    let ratio = (bounds.v1_u_z / bounds.s1_l_z).clamp(0.0, 0.5);
    let gamma =
        sampling_correction_gamma(bounds.s1_l_x, bounds.s1_l_z, ratio, sec.eps_sec / 21.0);
    (ratio + gamma).clamp(0.0, 0.5)
}

/// Bits consumed by error correction on the key basis.
pub fn error_correction_cost(n_x: f64, e_x: f64) -> f64 {
    debug_assert!((0.0..=0.5).contains(&e_x));
    EC_EFFICIENCY * n_x * binary_entropy(e_x)
}

/// Post-processing overhead of the two-decoy key length, in bits.
pub fn security_overhead_tds(sec: &SecurityParams) -> f64 {
    6.0 * (21.0 / sec.eps_sec).log2() + (2.0 / sec.eps_cor).log2()
}

/// Post-processing overhead of the single-source key length, in bits.
pub fn security_overhead_sps(sec: &SecurityParams) -> f64 {
    2.0 * (3.0 / sec.eps_sec).log2() + (2.0 / sec.eps_cor).log2()
}

/// Finite secret key length of the efficient-BB84 two-decoy protocol,
/// floored at zero and truncated to whole bits.
pub fn skl_tds(tally: &BlockTally, sec: &SecurityParams) -> Result<f64> {
    let bounds = decoy_yield_bounds(tally, sec)?;
    let n_x = tally.detections(Basis::X);
    if n_x <= 0.0 {
        return Ok(0.0);
    }
    let phi = phase_error_upper_tds(&bounds, sec);
    let lambda_ec = error_correction_cost(n_x, tally.error_rate(Basis::X).min(0.5));
    let key = bounds.s0_l_x + bounds.s1_l_x * (1.0 - binary_entropy(phi))
        - lambda_ec
        - security_overhead_tds(sec);
    Ok(key.max(0.0).floor())
}

/// Chernoff upper bound on a count with expected value `n_mp`, at parameter
/// estimation failure 2 eps_sec / 3. The zero-expectation edge takes the
/// additive floor beta.
pub fn multiphoton_upper(n_mp: f64, sec: &SecurityParams) -> f64 {
    debug_assert!(n_mp >= 0.0);
    let beta = -(2.0 * sec.eps_sec / 3.0).ln();
    if n_mp == 0.0 {
        return beta;
    }
    let delta_u = (beta + (8.0 * beta * n_mp + beta * beta).sqrt()) / (2.0 * n_mp);
    (1.0 + delta_u) * n_mp
}

/// Finite secret key length of the single-source (non-decoy) protocol,
/// floored at zero and truncated to whole bits.
///
/// `dist` must be the photon statistics actually sent, i.e. already
/// pre-attenuated when the protocol uses sender attenuation.
pub fn skl_sps(
    tally: &BlockTally,
    dist: &PhotonNumberDistribution,
    sec: &SecurityParams,
) -> Result<f64> {
    let SourceProtocol::Sps { .. } = tally.protocol.source else {
        return Err(Error::parameter(
            "skl_sps",
            "block was not produced by a single-source protocol",
        ));
    };
    let p_x = tally.protocol.p_x;
    let p_z = 1.0 - p_x;
    let n_x = tally.detections(Basis::X);
    let n_z = tally.detections(Basis::Z);
    let m_z = tally.errors(Basis::Z);
    if n_x <= 0.0 {
        return Ok(0.0);
    }
    // sifted multi-photon emissions cannot be observed; bound their
    // expectation. Sifting carries the same both-parties basis factor as
    // the detection counts, so the subtraction stays commensurate with
    // n_b and the infinite-block limit reproduces the untagged-fraction
    // (GLLP) accounting exactly.
    let mp_x_u = multiphoton_upper(tally.n_sent * p_x * p_x * dist.p_multi, sec);
    let mp_z_u = multiphoton_upper(tally.n_sent * p_z * p_z * dist.p_multi, sec);
    let nmp_x_l = n_x - mp_x_u;
    let nmp_z_l = n_z - mp_z_u;
    if nmp_x_l <= 0.0 || nmp_z_l <= 0.0 {
        return Ok(0.0);
    }
    let ratio = (m_z / nmp_z_l).clamp(0.0, 0.5);
    let gamma = sampling_correction_gamma(n_x, n_z, ratio, 4.0 * sec.eps_sec / 6.0);
    let phi = (ratio + gamma).clamp(0.0, 0.5);
    let lambda_ec = error_correction_cost(n_x, tally.error_rate(Basis::X).min(0.5));
    let key =
        nmp_x_l * (1.0 - binary_entropy(phi)) - lambda_ec - security_overhead_sps(sec);
    Ok(key.max(0.0).floor())
}

/// Secret key length of a block under its own protocol.
pub fn secret_key_length(
    tally: &BlockTally,
    source: &SourceModel,
    sec: &SecurityParams,
) -> Result<f64> {
    match tally.protocol.source {
        SourceProtocol::Tds { .. } => skl_tds(tally, sec),
        SourceProtocol::Sps { eta_att } => {
            let dist = source.distribution()?.attenuated(eta_att);
            skl_sps(tally, &dist, sec)
        }
    }
}

/// Accumulate the expected-value tally of a pass segment.
///
/// Every slot inside the protocol window contributes `rep_rate * dt`
/// pulses, split across intensities by their probabilities; a detection
/// lands in a basis cell when both parties picked that basis (probability
/// p_b^2). Expected clicks use the asymptotic gains at the slot's link
/// efficiency and background. `base_stats` supplies the error model
/// (e_int, e0); its y0/eta fields are overridden per slot.
pub fn accumulate_block(
    pass: &[PassSample],
    budgets: &[ChannelBudget],
    source: &SourceModel,
    params: &ProtocolParams,
    rep_rate_hz: f64,
    base_stats: &DetectionStats,
) -> Result<BlockTally> {
    if pass.len() != budgets.len() {
        return Err(Error::parameter(
            "accumulate_block",
            format!("{} pass samples but {} budgets", pass.len(), budgets.len()),
        ));
    }
    if rep_rate_hz <= 0.0 {
        return Err(Error::parameter("accumulate_block", "repetition rate must be positive"));
    }
    params.validate()?;

    let dt = slot_width(pass)?;
    let mut tally = BlockTally::empty(*params);
    let (lo, hi) = params.window;
    let p_basis = [params.p_x, 1.0 - params.p_x];

    // pre-attenuated statistics for the single-source path
    let sps_dist = match params.source {
        SourceProtocol::Sps { eta_att } => Some(source.distribution()?.attenuated(eta_att)),
        SourceProtocol::Tds { .. } => None,
    };

    for (sample, budget) in pass.iter().zip(budgets) {
        if sample.t < lo || sample.t > hi {
            continue;
        }
        let pulses = rep_rate_hz * dt;
        tally.n_sent += pulses;
        let stats = DetectionStats {
            y0: budget.p_bg,
            eta: budget.eta_total,
            ..*base_stats
        };
        match params.source {
            SourceProtocol::Tds { mu, nu1, p_mu, p_nu1 } => {
                let p_nu2 = 1.0 - p_mu - p_nu1;
                let intensities = [(mu, p_mu), (nu1, p_nu1), (0.0, p_nu2)];
                for (ki, (k, p_k)) in intensities.into_iter().enumerate() {
                    let g = wcs_total_gain_qber(k, &stats);
                    for (bi, p_b) in p_basis.iter().enumerate() {
                        let w = pulses * p_b * p_b * p_k;
                        let cell = &mut tally.cells[bi][ki];
                        cell.count += w * g.q_mu;
                        cell.errors += w * g.e_mu * g.q_mu;
                    }
                }
            }
            SourceProtocol::Sps { .. } => {
                let g = total_gain_qber(sps_dist.as_ref().unwrap(), &stats);
                for (bi, p_b) in p_basis.iter().enumerate() {
                    let w = pulses * p_b * p_b;
                    let cell = &mut tally.cells[bi][0];
                    cell.count += w * g.q_mu;
                    cell.errors += w * g.e_mu * g.q_mu;
                }
            }
        }
    }
    Ok(tally)
}

/// Width of one time slot inferred from the (uniform) pass grid.
fn slot_width(pass: &[PassSample]) -> Result<f64> {
    if pass.len() < 2 {
        return Ok(1.0);
    }
    let dt = pass[1].t - pass[0].t;
    if dt <= 0.0 {
        return Err(Error::parameter("accumulate_block", "pass samples not increasing in time"));
    }
    for w in pass.windows(2) {
        if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::parameter("accumulate_block", "pass grid is not uniform"));
        }
    }
    Ok(dt)
}
