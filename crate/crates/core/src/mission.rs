//! Scenario sweeps and annual secret-key estimation.
//!
//! A loaded [`Scenario`] bundles the configuration with its datasets and
//! drives three sweeps: the asymptotic secret-bit spectrum over wavelength
//! (day and night), and the finite, protocol-optimized key length versus
//! satellite altitude and versus ground-track offset. Integrating the
//! offset curve over all non-zenith passes and counting the orbits per
//! year turns per-pass keys into an annual volume.
//!
//! Sweep points are independent and evaluated in parallel with ordered
//! collection, so identical inputs give identical outputs.

use rayon::prelude::*;

use crate::channel::{link_budget, AtmosphereTable, ChannelBudget};
use crate::data_io::{
    load_atmosphere, load_detectors, load_solar, ScenarioConfig, SourceKind,
};
use crate::error::{Error, Result};
use crate::geometry::{orbital_period, pass_trajectory, GeoConstants, PassSample};
use crate::keyrate_asymptotic::{
    optimal_mu, secret_fraction_gllp_gain, secret_fraction_tds_asymptotic, total_gain_qber,
    wcs_total_gain_qber, DetectionStats,
};
use crate::optimizer::{encode_seed, optimize_protocol_seeded};
use crate::radiometry::{select_detector, BackgroundModel, DetectorSpec};
use crate::sources::SourceModel;

/// Seconds of one Earth revolution around the sun.
pub const T_EARTH_REVOLUTION_S: f64 = 31_558_140.0;

/// A scenario ready to run: configuration plus loaded datasets.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub geo: GeoConstants,
    pub atmosphere: AtmosphereTable,
    pub background: BackgroundModel,
    pub detectors: Vec<DetectorSpec>,
}

impl Scenario {
    /// Load the datasets referenced by the configuration.
    pub fn load(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let atmosphere = load_atmosphere(&config.data_path(&config.data.atmosphere))?;
        let solar = load_solar(&config.data_path(&config.data.solar))?;
        let detectors = load_detectors(&config.data_path(&config.data.detectors))?;
        let mut background = BackgroundModel::new(solar);
        background.omega_fov_sr = config.radiometry.fov_sr;
        background.aperture_rx_m = config.channel.aperture_rx_m;
        background.delta_lambda_nm = config.radiometry.filter_bandwidth_nm;
        background.sun_zenith_deg = config.radiometry.sun_zenith_deg;
        background.sun_azimuth_deg = config.radiometry.sun_azimuth_deg;
        background.validate()?;
        Ok(Self { config, geo: GeoConstants::default(), atmosphere, background, detectors })
    }

    /// Assemble a scenario from already-loaded parts (used by tests).
    pub fn from_parts(
        config: ScenarioConfig,
        atmosphere: AtmosphereTable,
        background: BackgroundModel,
        detectors: Vec<DetectorSpec>,
    ) -> Self {
        Self { config, geo: GeoConstants::default(), atmosphere, background, detectors }
    }

    /// Pass trajectory at the given altitude and ground-track offset, using
    /// the configured time step and elevation mask.
    pub fn pass(&self, h_km: f64, offset_km: f64) -> Vec<PassSample> {
        pass_trajectory(
            h_km,
            offset_km,
            self.config.geometry.time_step_s,
            self.config.geometry.min_elevation_deg.to_radians(),
            &self.geo,
        )
    }

    /// Best detector for a wavelength.
    pub fn detector(&self, lambda_nm: f64) -> Result<&DetectorSpec> {
        select_detector(&self.detectors, lambda_nm)
    }

    /// Channel budgets for every slot of a pass at one wavelength.
    pub fn budgets(
        &self,
        lambda_nm: f64,
        pass: &[PassSample],
        daylight: bool,
    ) -> Result<Vec<ChannelBudget>> {
        let detector = self.detector(lambda_nm)?;
        let optics = self.config.optics_at(lambda_nm);
        pass.iter()
            .map(|s| link_budget(&optics, detector, &self.atmosphere, s, &self.background, daylight))
            .collect()
    }

    fn base_stats(&self) -> DetectionStats {
        self.config.detection_stats()
    }

    fn source_model(&self, kind: SourceKind) -> SourceModel {
        match kind {
            SourceKind::IdealSps => SourceModel::IdealSps,
            SourceKind::Sps => SourceModel::realistic_sps_default(),
            SourceKind::Wcs => SourceModel::Wcs { mu: 0.1 },
            SourceKind::Tds => {
                SourceModel::Tds { mu: 0.5, nu1: 0.1, p_mu: 0.6, p_nu1: 0.25 }
            }
        }
    }
}

/// One named column of a sweep.
#[derive(Debug, Clone)]
pub struct SweepColumn {
    pub label: String,
    pub values: Vec<f64>,
}

/// Result of a sweep: a shared axis plus one value column per variant.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub columns: Vec<SweepColumn>,
    /// Scenario descriptor for provenance.
    pub descriptor: String,
    /// Axis points dropped for lack of dataset coverage.
    pub skipped: Vec<f64>,
}

impl SweepResult {
    pub fn column(&self, label: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.label == label).map(|c| c.values.as_slice())
    }
}

// ---------------------------------------------------------------------------
// Spectrum sweep (asymptotic)
// ---------------------------------------------------------------------------

/// Mean asymptotic secret bits per signal over one pass, per wavelength,
/// for each requested source, day and night.
///
/// Wavelengths without detector or radiance coverage are skipped and
/// reported in [`SweepResult::skipped`].
pub fn spectrum_sweep(
    scenario: &Scenario,
    sources: &[SourceKind],
    lambda_grid: &[f64],
) -> Result<SweepResult> {
    let pass = scenario.pass(
        scenario.config.geometry.altitude_km,
        scenario.config.geometry.ground_track_offset_km,
    );
    if pass.is_empty() {
        return Err(Error::parameter("spectrum_sweep", "pass never clears the elevation mask"));
    }
    // the two-decoy signal intensity solves the simplified rate equation
    // and depends only on the error model, so it is shared by all points
    let stats0 = scenario.base_stats();
    let tds_mu = optimal_mu(stats0.e_int, stats0.f_ec).unwrap_or(0.5);
    let tds_nu1 = scenario.config.protocol.decoy_nu1;

    let evaluated: Vec<(f64, Option<Vec<f64>>)> = lambda_grid
        .par_iter()
        .map(|&lam| {
            let mut row = Vec::with_capacity(sources.len() * 2);
            let day = scenario.budgets(lam, &pass, true);
            let night = scenario.budgets(lam, &pass, false);
            let (day, night) = match (day, night) {
                (Ok(d), Ok(n)) => (d, n),
                _ => return (lam, None),
            };
            for &kind in sources {
                for budgets in [&day, &night] {
                    row.push(pass_mean_fraction(scenario, kind, budgets, tds_mu, tds_nu1));
                }
            }
            (lam, Some(row))
        })
        .collect();

    let mut axis = Vec::new();
    let mut skipped = Vec::new();
    let mut columns: Vec<SweepColumn> = sources
        .iter()
        .flat_map(|k| {
            [
                SweepColumn { label: format!("{}-day", k.label()), values: Vec::new() },
                SweepColumn { label: format!("{}-night", k.label()), values: Vec::new() },
            ]
        })
        .collect();
    for (lam, row) in evaluated {
        match row {
            Some(values) => {
                axis.push(lam);
                for (c, v) in columns.iter_mut().zip(values) {
                    c.values.push(v);
                }
            }
            None => skipped.push(lam),
        }
    }
    Ok(SweepResult {
        axis_name: "wavelength_nm".into(),
        axis,
        columns,
        descriptor: format!(
            "asymptotic spectrum, h = {} km, dt_gate = {:e} s",
            scenario.config.geometry.altitude_km, scenario.config.channel.detection_window_s
        ),
        skipped,
    })
}

/// Per-slot asymptotic secret fractions of a pass for one source and
/// condition. The weak-coherent intensity is optimized for the pass as a
/// whole (log grid plus golden-section refinement); the two-decoy source
/// uses the configured signal/decoy intensities.
pub fn asymptotic_slot_fractions(
    scenario: &Scenario,
    kind: SourceKind,
    budgets: &[ChannelBudget],
    tds_mu: f64,
    tds_nu1: f64,
) -> Vec<f64> {
    let base = scenario.base_stats();
    let slot_stats = |b: &ChannelBudget| DetectionStats { y0: b.p_bg, eta: b.eta_total, ..base };
    match kind {
        SourceKind::IdealSps | SourceKind::Sps => {
            let dist = scenario.source_model(kind).distribution().expect("valid source");
            budgets
                .iter()
                .map(|b| {
                    let s = slot_stats(b);
                    secret_fraction_gllp_gain(&total_gain_qber(&dist, &s), &s)
                })
                .collect()
        }
        SourceKind::Wcs => {
            // the untagged fraction punishes large intensities; pick the
            // best mu for this channel on a log grid with local refinement
            let fractions = |mu: f64| -> Vec<f64> {
                budgets
                    .iter()
                    .map(|b| {
                        let s = slot_stats(b);
                        secret_fraction_gllp_gain(&wcs_total_gain_qber(mu, &s), &s)
                    })
                    .collect()
            };
            let objective = |mu: f64| fractions(mu).iter().sum::<f64>();
            let mut best = (0.0, 0.0);
            let n = 40;
            for i in 0..=n {
                let mu = 10f64.powf(-4.0 + 4.0 * i as f64 / n as f64);
                let v = objective(mu);
                if v > best.1 {
                    best = (mu, v);
                }
            }
            if best.1 > 0.0 {
                let (mut lo, mut hi) = (best.0 / 1.3, best.0 * 1.3);
                for _ in 0..40 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    if objective(m1) < objective(m2) {
                        lo = m1;
                    } else {
                        hi = m2;
                    }
                }
                let mid = 0.5 * (lo + hi);
                if objective(mid) > best.1 {
                    best.0 = mid;
                }
            }
            fractions(best.0)
        }
        SourceKind::Tds => {
            let src = SourceModel::Tds { mu: tds_mu, nu1: tds_nu1, p_mu: 0.5, p_nu1: 0.25 };
            budgets
                .iter()
                .map(|b| {
                    let s = slot_stats(b);
                    secret_fraction_tds_asymptotic(&src, &s).unwrap_or(0.0)
                })
                .collect()
        }
    }
}

/// Two-decoy intensities used by the asymptotic sweeps: the simplified-rate
/// optimum for the signal and the configured weak decoy.
pub fn asymptotic_tds_intensities(scenario: &Scenario) -> (f64, f64) {
    let stats = scenario.base_stats();
    let mu = optimal_mu(stats.e_int, stats.f_ec).unwrap_or(0.5);
    (mu, scenario.config.protocol.decoy_nu1)
}

/// Pass-averaged asymptotic secret fraction for one source and condition.
fn pass_mean_fraction(
    scenario: &Scenario,
    kind: SourceKind,
    budgets: &[ChannelBudget],
    tds_mu: f64,
    tds_nu1: f64,
) -> f64 {
    let fractions = asymptotic_slot_fractions(scenario, kind, budgets, tds_mu, tds_nu1);
    fractions.iter().sum::<f64>() / fractions.len().max(1) as f64
}

// ---------------------------------------------------------------------------
// Finite-key sweeps
// ---------------------------------------------------------------------------

/// Optimized finite key length for one pass geometry, day and night.
///
/// The night optimization is additionally seeded with the day optimum;
/// because the key is monotone in the background, this keeps
/// night >= day structurally.
fn optimized_day_night(
    scenario: &Scenario,
    kind: SourceKind,
    lambda_nm: f64,
    pass: &[PassSample],
) -> Result<(f64, f64)> {
    if pass.is_empty() {
        return Ok((0.0, 0.0));
    }
    let source = scenario.source_model(kind);
    if matches!(kind, SourceKind::Wcs) {
        return Err(Error::parameter(
            "optimized_day_night",
            "the finite-key pipeline drives WCS through the two-decoy protocol; use --source tds",
        ));
    }
    let sec = scenario.config.security();
    let stats = scenario.base_stats();
    let rep = scenario.config.protocol.rep_rate_hz;

    let day_budgets = scenario.budgets(lambda_nm, pass, true)?;
    let day = optimize_protocol_seeded(pass, &day_budgets, &source, &sec, rep, &stats, &[])?;
    let night_budgets = scenario.budgets(lambda_nm, pass, false)?;
    let day_seed = encode_seed(&day.best_params);
    let night =
        optimize_protocol_seeded(pass, &night_budgets, &source, &sec, rep, &stats, &[day_seed])?;
    Ok((day.skl, night.skl))
}

/// Optimized finite SKL versus satellite altitude for a zenith pass.
pub fn skl_vs_altitude(
    scenario: &Scenario,
    kind: SourceKind,
    h_grid_km: &[f64],
) -> Result<SweepResult> {
    let lambda = scenario.config.protocol.wavelength_nm;
    let rows: Vec<(f64, f64)> = h_grid_km
        .par_iter()
        .map(|&h| {
            let pass = scenario.pass(h, 0.0);
            optimized_day_night(scenario, kind, lambda, &pass)
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        axis_name: "altitude_km".into(),
        axis: h_grid_km.to_vec(),
        columns: vec![
            SweepColumn { label: "day".into(), values: rows.iter().map(|r| r.0).collect() },
            SweepColumn { label: "night".into(), values: rows.iter().map(|r| r.1).collect() },
        ],
        descriptor: format!("finite SKL vs altitude, {} at {} nm", kind.label(), lambda),
        skipped: Vec::new(),
    })
}

/// Optimized finite SKL versus ground-track offset (in meters) at the
/// configured altitude.
pub fn skl_vs_offset(
    scenario: &Scenario,
    kind: SourceKind,
    d_grid_m: &[f64],
) -> Result<SweepResult> {
    let lambda = scenario.config.protocol.wavelength_nm;
    let h = scenario.config.geometry.altitude_km;
    let rows: Vec<(f64, f64)> = d_grid_m
        .par_iter()
        .map(|&d_m| {
            let pass = scenario.pass(h, d_m / 1e3);
            optimized_day_night(scenario, kind, lambda, &pass)
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        axis_name: "offset_m".into(),
        axis: d_grid_m.to_vec(),
        columns: vec![
            SweepColumn { label: "day".into(), values: rows.iter().map(|r| r.0).collect() },
            SweepColumn { label: "night".into(), values: rows.iter().map(|r| r.1).collect() },
        ],
        descriptor: format!(
            "finite SKL vs ground-track offset, {} at {} nm, h = {} km",
            kind.label(),
            lambda,
            h
        ),
        skipped: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Annual estimate
// ---------------------------------------------------------------------------

/// Area below an SKL-vs-offset curve, doubled for the symmetric negative
/// offsets, in bit meters. The integration stops at the first grid point
/// where the key vanishes.
pub fn integrate_offset_curve(axis_m: &[f64], skl: &[f64]) -> f64 {
    debug_assert_eq!(axis_m.len(), skl.len());
    if skl.is_empty() || skl[0] <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 1..axis_m.len() {
        total += 0.5 * (skl[i] + skl[i - 1]) * (axis_m[i] - axis_m[i - 1]);
        if skl[i] <= 0.0 {
            break;
        }
    }
    2.0 * total
}

/// Annual secret key volume from the per-orbit integrated key areas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnualEstimate {
    pub skl_int_day_bm: f64,
    pub skl_int_night_bm: f64,
    pub annual_day_bits: f64,
    pub annual_night_bits: f64,
    pub annual_total_bits: f64,
    /// Orbits per Earth revolution around the sun (fractional).
    pub n_orbits: f64,
    pub l_lat_m: f64,
}

/// Scale the integrated offset curves by the number of orbits per year and
/// the longitudinal circumference of the station latitude.
pub fn annual_skl(
    skl_int_day_bm: f64,
    skl_int_night_bm: f64,
    orbital_period_s: f64,
    l_lat_m: f64,
) -> AnnualEstimate {
    assert!(skl_int_day_bm >= 0.0 && skl_int_night_bm >= 0.0);
    assert!(orbital_period_s > 0.0 && l_lat_m > 0.0);
    let n_orbits = T_EARTH_REVOLUTION_S / orbital_period_s;
    let annual_day_bits = n_orbits / l_lat_m * skl_int_day_bm;
    let annual_night_bits = n_orbits / l_lat_m * skl_int_night_bm;
    AnnualEstimate {
        skl_int_day_bm,
        skl_int_night_bm,
        annual_day_bits,
        annual_night_bits,
        annual_total_bits: annual_day_bits + annual_night_bits,
        n_orbits,
        l_lat_m,
    }
}

/// One row of the annual key-volume table.
#[derive(Debug, Clone)]
pub struct AnnualRow {
    pub source: SourceKind,
    pub wavelength_nm: f64,
    /// Zenith system loss in dB at the configured altitude.
    pub loss_db: f64,
    pub estimate: AnnualEstimate,
}

/// Full annual estimate for one source and wavelength: offset sweeps for
/// day and night, integrated and scaled to a year.
pub fn annual_estimate(
    scenario: &Scenario,
    kind: SourceKind,
    lambda_nm: f64,
) -> Result<AnnualRow> {
    let mission = &scenario.config.mission;
    let d_grid_m = grid(mission.offset_min_km * 1e3, mission.offset_max_km * 1e3, mission.offset_step_km * 1e3);

    let mut sub = scenario.clone();
    sub.config.protocol.wavelength_nm = lambda_nm;
    let sweep = skl_vs_offset(&sub, kind, &d_grid_m)?;
    let day = integrate_offset_curve(&sweep.axis, sweep.column("day").unwrap());
    let night = integrate_offset_curve(&sweep.axis, sweep.column("night").unwrap());

    let period = orbital_period(scenario.config.geometry.altitude_km, &scenario.geo);
    let estimate = annual_skl(day, night, period, mission.l_lat_m);

    // zenith system loss of this wavelength at the configured altitude
    let pass = scenario.pass(scenario.config.geometry.altitude_km, 0.0);
    let budgets = sub.budgets(lambda_nm, &pass, false)?;
    let center = pass
        .iter()
        .position(|s| s.t == 0.0)
        .ok_or_else(|| Error::parameter("annual_estimate", "pass has no zenith slot"))?;
    Ok(AnnualRow { source: kind, wavelength_nm: lambda_nm, loss_db: budgets[center].loss_db(), estimate })
}

/// Inclusive numeric grid from `lo` to `hi` in steps of `step`.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && hi >= lo);
    let n = ((hi - lo) / step).round() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    if *out.last().unwrap() > hi + 1e-9 * step {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiometry::SolarTable;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    /// Small synthetic scenario that needs no files on disk.
    fn toy_scenario() -> Scenario {
        let zen: Vec<f64> = (-16..=16).map(|i| i as f64 * 5.0).collect();
        let lams = vec![400.0, 700.0, 1000.0, 1400.0, 1700.0];
        let mut atm = Vec::new();
        for _ in &lams {
            for z in &zen {
                atm.push((-0.08 / z.to_radians().cos()).exp());
            }
        }
        let atmosphere = AtmosphereTable::new(lams.clone(), zen.clone(), atm).unwrap();
        let mut sol = Vec::new();
        for lam in &lams {
            for z in &zen {
                let g = (1.0 / z.to_radians().cos()).powf(0.65);
                sol.push(2e16 * g * (1800.0 - lam) / 1400.0);
            }
        }
        let solar = SolarTable::new(lams, zen, sol).unwrap();
        let detectors = vec![DetectorSpec {
            name: "wide".into(),
            wavelength_nm: vec![400.0, 1700.0],
            efficiency: vec![0.7, 0.7],
            dcr_cps: 100.0,
        }];
        let mut config = ScenarioConfig::default();
        config.geometry.time_step_s = 5.0;
        Scenario::from_parts(config, atmosphere, BackgroundModel::new(solar), detectors)
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(grid(0.0, 10.0, 5.0), vec![0.0, 5.0, 10.0]);
        assert_eq!(grid(300.0, 400.0, 50.0).len(), 3);
    }

    #[test]
    fn integrate_rectangle_and_triangle() {
        // constant K over [0, D], zero beyond: 2 K D
        let axis = vec![0.0, 1e5, 2e5, 3e5];
        let skl = vec![1000.0, 1000.0, 1000.0, 0.0];
        let v = integrate_offset_curve(&axis, &skl);
        // trapezoid spends one cell ramping down
        assert!(close(v, 2.0 * (2e5 * 1000.0 + 0.5 * 1e5 * 1000.0), 1.0), "got {v}");
        // triangle K (1 - d/D): K D
        let skl = vec![900.0, 600.0, 300.0, 0.0];
        let v = integrate_offset_curve(&axis, &skl);
        assert!(close(v, 900.0 * 3e5, 1.0), "got {v}");
        // all-zero curve
        assert_eq!(integrate_offset_curve(&axis, &[0.0, 0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn integration_stops_at_first_zero() {
        let axis = vec![0.0, 1.0, 2.0, 3.0];
        let skl = vec![10.0, 0.0, 50.0, 50.0];
        // the rebound after the first zero is ignored
        assert_eq!(integrate_offset_curve(&axis, &skl), 2.0 * 5.0);
    }

    #[test]
    fn integral_converges_under_grid_refinement() {
        // smooth bump: refining the grid by 2x changes the integral < 1%
        let f = |d: f64| 1e6 * (-d * d / 2e11).exp();
        let coarse: Vec<f64> = grid(0.0, 1.5e6, 5e4);
        let fine: Vec<f64> = grid(0.0, 1.5e6, 2.5e4);
        let ic = integrate_offset_curve(&coarse, &coarse.iter().map(|&d| f(d)).collect::<Vec<_>>());
        let i2 = integrate_offset_curve(&fine, &fine.iter().map(|&d| f(d)).collect::<Vec<_>>());
        assert!((ic - i2).abs() / i2 < 0.01, "coarse {ic} fine {i2}");
    }

    #[test]
    fn annual_reference_round_trip() {
        // back-solved identity: SKL_int of 2.507e13 bm at 500 km gives
        // 3.4829 Gb within half a unit of the fourth significant figure
        let period = orbital_period(500.0, &GeoConstants::default());
        let est = annual_skl(2.507e13, 0.0, period, 4.008e7);
        assert!(close(est.n_orbits, 5567.0, 1.0), "orbits {}", est.n_orbits);
        assert!(
            (est.annual_day_bits - 3.4829e9).abs() < 0.0005e9,
            "got {}",
            est.annual_day_bits
        );
        assert_eq!(est.annual_total_bits, est.annual_day_bits + est.annual_night_bits);
    }

    #[test]
    fn annual_zero_input_zero_output() {
        let est = annual_skl(0.0, 0.0, 5668.0, 4.008e7);
        assert_eq!(est.annual_total_bits, 0.0);
    }

    #[test]
    fn spectrum_night_dominates_day() {
        let sc = toy_scenario();
        let sweep = spectrum_sweep(
            &sc,
            &[SourceKind::Sps, SourceKind::Wcs],
            &[500.0, 700.0, 900.0, 1100.0, 1300.0],
        )
        .unwrap();
        assert!(sweep.skipped.is_empty(), "skipped {:?}", sweep.skipped);
        for kind in ["sps", "wcs"] {
            let day = sweep.column(&format!("{kind}-day")).unwrap();
            let night = sweep.column(&format!("{kind}-night")).unwrap();
            for (i, (d, n)) in day.iter().zip(night).enumerate() {
                assert!(n >= d, "{kind} day {d} > night {n} at index {i}");
                assert!(*d >= 0.0);
            }
        }
    }

    #[test]
    fn spectrum_skips_uncovered_wavelengths() {
        let sc = toy_scenario();
        // 350 nm is outside every table
        let sweep = spectrum_sweep(&sc, &[SourceKind::Sps], &[350.0, 700.0]).unwrap();
        assert_eq!(sweep.axis, vec![700.0]);
        assert_eq!(sweep.skipped, vec![350.0]);
    }

    #[test]
    fn offset_sweep_consistent_with_zenith_and_cutoff() {
        let mut sc = toy_scenario();
        sc.config.protocol.wavelength_nm = 700.0;
        sc.config.geometry.time_step_s = 5.0;
        let d_grid: Vec<f64> = vec![0.0, 8e5, 1.7e6];
        let sweep = skl_vs_offset(&sc, SourceKind::Sps, &d_grid).unwrap();
        let night = sweep.column("night").unwrap();
        assert!(night[0] > 0.0, "no key at zenith");
        assert!(night[0] >= night[1], "key should not grow with offset");
        // beyond the elevation mask the pass is empty
        assert_eq!(night[2], 0.0);
        let day = sweep.column("day").unwrap();
        for (d, n) in day.iter().zip(night) {
            assert!(n >= d, "night {n} below day {d}");
        }
    }

    #[test]
    fn wcs_rejected_for_finite_sweeps() {
        let sc = toy_scenario();
        assert!(skl_vs_altitude(&sc, SourceKind::Wcs, &[500.0]).is_err());
    }
}
