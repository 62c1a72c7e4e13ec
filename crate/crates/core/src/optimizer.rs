//! Protocol-parameter and transmission-window optimization.
//!
//! The finite key length of a pass depends on the basis bias, the decoy
//! intensities and their probabilities (or the sender attenuation for a
//! single-photon source), and on how much of the pass is actually used:
//! near the horizon the QBER can eat more key than the extra signals
//! contribute, so a shorter symmetric window can beat the full pass. The
//! objective is cheap and low-dimensional; a coarse seed grid followed by
//! Nelder-Mead refinement with box constraints handled by reflection is
//! entirely adequate and keeps every run deterministic.

use rayon::prelude::*;

use crate::channel::ChannelBudget;
use crate::error::{Error, Result};
use crate::geometry::PassSample;
use crate::keyrate_asymptotic::{total_gain_qber, wcs_total_gain_qber, DetectionStats};
use crate::keyrate_finite::{
    secret_key_length, Basis, BlockTally, CellTally, ProtocolParams, SecurityParams,
    SourceProtocol,
};
use crate::sources::SourceModel;

/// Outcome of a protocol optimization.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub best_params: ProtocolParams,
    /// Secret key length at the best parameters, bits.
    pub skl: f64,
    /// Number of objective evaluations spent.
    pub evaluations: usize,
    /// True when the simplex contracted below tolerance.
    pub converged: bool,
}

/// Per-slot gains for each intensity of a candidate parameter set.
struct SlotGains {
    /// (expected clicks, expected errors) per sent pulse of intensity k,
    /// before basis/intensity weighting.
    per_intensity: Vec<[(f64, f64); 3]>,
    dt: f64,
}

fn slot_gains(
    pass: &[PassSample],
    budgets: &[ChannelBudget],
    source: &SourceModel,
    params: &ProtocolParams,
    base_stats: &DetectionStats,
) -> Result<SlotGains> {
    if pass.len() != budgets.len() || pass.is_empty() {
        return Err(Error::parameter(
            "optimize",
            "pass and budgets must be non-empty and of equal length",
        ));
    }
    let dt = if pass.len() >= 2 { pass[1].t - pass[0].t } else { 1.0 };
    let sps_dist = match params.source {
        SourceProtocol::Sps { eta_att } => Some(source.distribution()?.attenuated(eta_att)),
        SourceProtocol::Tds { .. } => None,
    };
    let per_intensity = budgets
        .iter()
        .map(|b| {
            let stats = DetectionStats { y0: b.p_bg, eta: b.eta_total, ..*base_stats };
            let mut out = [(0.0, 0.0); 3];
            match params.source {
                SourceProtocol::Tds { mu, nu1, .. } => {
                    for (ki, k) in [mu, nu1, 0.0].into_iter().enumerate() {
                        let g = wcs_total_gain_qber(k, &stats);
                        out[ki] = (g.q_mu, g.e_mu * g.q_mu);
                    }
                }
                SourceProtocol::Sps { .. } => {
                    let g = total_gain_qber(sps_dist.as_ref().unwrap(), &stats);
                    out[0] = (g.q_mu, g.e_mu * g.q_mu);
                }
            }
            out
        })
        .collect();
    Ok(SlotGains { per_intensity, dt })
}

/// Search all symmetric transmission windows around closest approach and
/// return the one with the highest key, ties broken toward the larger
/// window. The returned window is half a slot wider than the covered slots
/// so that membership tests are robust against float equality.
pub fn optimize_window(
    pass: &[PassSample],
    budgets: &[ChannelBudget],
    source: &SourceModel,
    fixed_params: &ProtocolParams,
    sec: &SecurityParams,
    rep_rate_hz: f64,
    base_stats: &DetectionStats,
) -> Result<((f64, f64), f64)> {
    fixed_params.validate()?;
    let gains = slot_gains(pass, budgets, source, fixed_params, base_stats)?;
    let center = pass
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.t.abs().partial_cmp(&b.1.t.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();

    let intensity_weights = intensity_weights(&fixed_params.source);
    let p_basis = [fixed_params.p_x, 1.0 - fixed_params.p_x];
    let pulses_per_slot = rep_rate_hz * gains.dt;

    let mut cells = [[CellTally::default(); 3]; 2];
    let mut n_sent = 0.0;
    let mut best: Option<((f64, f64), f64)> = None;
    let max_k = center.max(pass.len() - 1 - center);

    for k in 0..=max_k {
        // slots joining the window at half-width k
        let lower = center.checked_sub(k);
        let upper = if center + k < pass.len() { Some(center + k) } else { None };
        let joining: Vec<usize> = if k == 0 {
            vec![center]
        } else {
            [lower, upper].into_iter().flatten().collect()
        };
        if joining.is_empty() {
            break;
        }
        for &si in &joining {
            n_sent += pulses_per_slot;
            for bi in 0..2 {
                for ki in 0..3 {
                    let w = pulses_per_slot * p_basis[bi] * p_basis[bi] * intensity_weights[ki];
                    let (q, eq) = gains.per_intensity[si][ki];
                    cells[bi][ki].count += w * q;
                    cells[bi][ki].errors += w * eq;
                }
            }
        }
        let half = (k as f64 + 0.5) * gains.dt;
        let window = (-half, half);
        let tally =
            tally_from_cells(ProtocolParams { window, ..*fixed_params }, n_sent, &cells);
        let skl = secret_key_length(&tally, source, sec)?;
        let better = match best {
            None => true,
            Some((_, best_skl)) => skl >= best_skl,
        };
        if better {
            best = Some((window, skl));
        }
    }
    best.ok_or_else(|| Error::parameter("optimize_window", "empty pass"))
}

fn intensity_weights(source: &SourceProtocol) -> [f64; 3] {
    match *source {
        SourceProtocol::Tds { p_mu, p_nu1, .. } => [p_mu, p_nu1, 1.0 - p_mu - p_nu1],
        SourceProtocol::Sps { .. } => [1.0, 0.0, 0.0],
    }
}

fn tally_from_cells(
    protocol: ProtocolParams,
    n_sent: f64,
    cells: &[[CellTally; 3]; 2],
) -> BlockTally {
    let mut tally = BlockTally::empty(protocol);
    tally.n_sent = n_sent;
    for (bi, basis) in [Basis::X, Basis::Z].into_iter().enumerate() {
        for (ki, cell) in cells[bi].iter().enumerate() {
            *tally.cell_mut(basis, ki) = *cell;
        }
    }
    tally
}

// ---------------------------------------------------------------------------
// Parameter search
// ---------------------------------------------------------------------------

/// Box bounds and deterministic seed grid of the search coordinates.
struct SearchSpace {
    lo: Vec<f64>,
    hi: Vec<f64>,
    seeds: Vec<Vec<f64>>,
}

/// TDS coordinates: [p_x, mu, nu1/mu, p_mu, p_nu1 / (1 - p_mu)].
fn tds_space() -> SearchSpace {
    let lo = vec![0.10, 0.05, 0.02, 0.05, 0.05];
    let hi = vec![0.98, 0.95, 0.90, 0.90, 0.95];
    let mut seeds = Vec::new();
    for &px in &[0.6, 0.75, 0.9] {
        for &mu in &[0.3, 0.5, 0.7] {
            for &r in &[0.1, 0.3, 0.6] {
                for &pmu in &[0.4, 0.6, 0.8] {
                    for &s in &[0.4, 0.6, 0.8] {
                        seeds.push(vec![px, mu, r, pmu, s]);
                    }
                }
            }
        }
    }
    SearchSpace { lo, hi, seeds }
}

/// SPS coordinates: [p_x, eta_att].
fn sps_space() -> SearchSpace {
    let lo = vec![0.10, 0.02];
    let hi = vec![0.98, 1.00];
    let mut seeds = Vec::new();
    for &px in &[0.5, 0.65, 0.8, 0.9, 0.95] {
        for &att in &[0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 1.0] {
            seeds.push(vec![px, att]);
        }
    }
    SearchSpace { lo, hi, seeds }
}

fn decode(source: &SourceModel, x: &[f64]) -> ProtocolParams {
    match source {
        SourceModel::Tds { .. } | SourceModel::Wcs { .. } => {
            let p_x = x[0];
            let mu = x[1];
            let nu1 = x[2] * mu;
            let p_mu = x[3];
            let p_nu1 = x[4] * (1.0 - p_mu);
            ProtocolParams::tds(p_x, mu, nu1, p_mu, p_nu1, (f64::MIN, f64::MAX))
        }
        SourceModel::IdealSps | SourceModel::RealisticSps { .. } => {
            ProtocolParams::sps(x[0], x[1], (f64::MIN, f64::MAX))
        }
    }
}

/// Maximize the finite key of a pass over protocol parameters, with a
/// nested transmission-window search for every candidate.
pub fn optimize_protocol(
    pass: &[PassSample],
    budgets: &[ChannelBudget],
    source: &SourceModel,
    sec: &SecurityParams,
    rep_rate_hz: f64,
    base_stats: &DetectionStats,
) -> Result<OptResult> {
    optimize_protocol_seeded(pass, budgets, source, sec, rep_rate_hz, base_stats, &[])
}

/// [`optimize_protocol`] with extra caller-supplied starting points (for
/// example the optimum of a neighbouring sweep point).
pub fn optimize_protocol_seeded(
    pass: &[PassSample],
    budgets: &[ChannelBudget],
    source: &SourceModel,
    sec: &SecurityParams,
    rep_rate_hz: f64,
    base_stats: &DetectionStats,
    extra_seeds: &[Vec<f64>],
) -> Result<OptResult> {
    source.validate()?;
    if pass.is_empty() || pass.len() != budgets.len() {
        return Err(Error::parameter(
            "optimize_protocol",
            "pass and budgets must be non-empty and of equal length",
        ));
    }
    let mut space = match source {
        SourceModel::Tds { .. } | SourceModel::Wcs { .. } => tds_space(),
        SourceModel::IdealSps | SourceModel::RealisticSps { .. } => sps_space(),
    };
    for s in extra_seeds {
        if s.len() == space.lo.len() {
            let mut s = s.clone();
            for (i, x) in s.iter_mut().enumerate() {
                *x = x.clamp(space.lo[i], space.hi[i]);
            }
            space.seeds.push(s);
        }
    }

    let objective = |x: &[f64]| -> Result<f64> {
        let params = decode(source, x);
        let (_, skl) =
            optimize_window(pass, budgets, source, &params, sec, rep_rate_hz, base_stats)?;
        Ok(skl)
    };

    // coarse deterministic grid, evaluated in parallel
    let graded: Vec<(usize, f64)> = space
        .seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| objective(s).map(|v| (i, v)))
        .collect::<Result<_>>()?;
    let mut order: Vec<&(usize, f64)> = graded.iter().collect();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut evaluations = space.seeds.len();

    let mut best_x = space.seeds[order[0].0].clone();
    let mut best_f = order[0].1;
    let mut converged = false;

    // refine from the two best basins
    for &&(seed_idx, seed_f) in order.iter().take(2) {
        if seed_f <= 0.0 && best_f > 0.0 {
            continue;
        }
        let start = space.seeds[seed_idx].clone();
        let (x, f, evals, conv) =
            nelder_mead(&objective, &start, &space.lo, &space.hi, 1e-3, 400)?;
        evaluations += evals;
        converged |= conv;
        if f > best_f {
            best_f = f;
            best_x = x;
        }
    }

    let params = decode(source, &best_x);
    let (window, skl) =
        optimize_window(pass, budgets, source, &params, sec, rep_rate_hz, base_stats)?;
    evaluations += 1;
    let best_params = ProtocolParams { window, ..params };
    Ok(OptResult { best_params, skl, evaluations, converged })
}

/// Search coordinates of an optimized parameter set, usable as a seed for
/// a neighbouring optimization.
pub fn encode_seed(params: &ProtocolParams) -> Vec<f64> {
    match params.source {
        SourceProtocol::Tds { mu, nu1, p_mu, p_nu1 } => {
            vec![params.p_x, mu, nu1 / mu, p_mu, p_nu1 / (1.0 - p_mu)]
        }
        SourceProtocol::Sps { eta_att } => vec![params.p_x, eta_att],
    }
}

/// Nelder-Mead maximization with box constraints via reflection.
/// Returns (best point, best value, evaluations, converged).
fn nelder_mead(
    objective: &dyn Fn(&[f64]) -> Result<f64>,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize, bool)> {
    let dim = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| -> Result<f64> {
        evals += 1;
        objective(x)
    };

    let reflect_into_box = |x: &mut Vec<f64>| {
        for i in 0..dim {
            if x[i] < lo[i] {
                x[i] = (2.0 * lo[i] - x[i]).min(hi[i]);
            } else if x[i] > hi[i] {
                x[i] = (2.0 * hi[i] - x[i]).max(lo[i]);
            }
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };

    // initial simplex: start plus a step along each axis
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(start)?;
    simplex.push((start.to_vec(), f0));
    for i in 0..dim {
        let mut p = start.to_vec();
        let step = 0.15 * (hi[i] - lo[i]);
        p[i] = if p[i] + step <= hi[i] { p[i] + step } else { p[i] - step };
        let f = eval(&p)?;
        simplex.push((p, f));
    }

    let mut converged = false;
    for _ in 0..max_iter {
        // best first (maximization)
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if (best - worst).abs() <= rel_tol * best.abs().max(1.0) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(p, _)| p[i]).sum::<f64>() / dim as f64)
            .collect();

        let mk = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..dim)
                .map(|i| centroid[i] + coef * (centroid[i] - simplex[dim].0[i]))
                .collect();
            reflect_into_box(&mut p);
            p
        };

        let refl = mk(1.0);
        let f_refl = eval(&refl)?;
        if f_refl > simplex[0].1 {
            let exp = mk(2.0);
            let f_exp = eval(&exp)?;
            simplex[dim] = if f_exp > f_refl { (exp, f_exp) } else { (refl, f_refl) };
        } else if f_refl > simplex[dim - 1].1 {
            simplex[dim] = (refl, f_refl);
        } else {
            let con = mk(-0.5);
            let f_con = eval(&con)?;
            if f_con > simplex[dim].1 {
                simplex[dim] = (con, f_con);
            } else {
                // shrink toward the best vertex
                let best_p = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for (i, x) in v.0.iter_mut().enumerate() {
                        *x = best_p[i] + 0.5 * (*x - best_p[i]);
                    }
                    v.1 = eval(&v.0)?;
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    Ok((simplex[0].0.clone(), simplex[0].1, evals, converged))
}
