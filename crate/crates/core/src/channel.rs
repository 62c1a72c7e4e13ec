//! The multiplicative free-space link efficiency chain.
//!
//! A downlink photon passes five independent filters: diffraction of the
//! transmitted Gaussian beam over the slant path and truncation at the
//! receiver aperture, atmospheric extinction, pointing and tracking jitter
//! of the satellite terminal, the temporal acceptance window at the
//! receiver, and the detector quantum efficiency. The total detection
//! efficiency is their product; the background click probability rides
//! along so that one struct describes a time slot completely.

use crate::error::{Error, Result};
use crate::geometry::PassSample;
use crate::grid::Grid2d;
use crate::radiometry::{background_probability, BackgroundModel, DetectorSpec};

/// Transmitter and receiver optics plus timing of the link.
#[derive(Debug, Clone, Copy)]
pub struct OpticalLinkConfig {
    /// Transmit beam waist in m.
    pub w0_m: f64,
    /// Transmit aperture radius in m.
    pub aperture_tx_m: f64,
    /// Receiver aperture radius in m.
    pub aperture_rx_m: f64,
    /// Combined pointing and tracking error in rad.
    pub theta_pt_rad: f64,
    /// Signal wavelength in m.
    pub lambda_m: f64,
    /// Temporal width of the photons in s.
    pub tau_s: f64,
    /// Detection window in s.
    pub dt_gate_s: f64,
}

impl OpticalLinkConfig {
    /// Defaults for everything except the wavelength.
    pub fn at_wavelength(lambda_nm: f64) -> Self {
        Self {
            w0_m: 0.05,
            aperture_tx_m: 0.05,
            aperture_rx_m: 0.5,
            theta_pt_rad: 1e-6,
            lambda_m: lambda_nm * 1e-9,
            tau_s: 3e-9,
            dt_gate_s: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("w0_m", self.w0_m),
            ("aperture_tx_m", self.aperture_tx_m),
            ("aperture_rx_m", self.aperture_rx_m),
            ("lambda_m", self.lambda_m),
            ("tau_s", self.tau_s),
            ("dt_gate_s", self.dt_gate_s),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::parameter(
                    "OpticalLinkConfig",
                    format!("{name} must be strictly positive, got {v}"),
                ));
            }
        }
        if self.theta_pt_rad < 0.0 {
            return Err(Error::parameter(
                "OpticalLinkConfig",
                "pointing error must be non-negative",
            ));
        }
        if self.w0_m > self.aperture_tx_m {
            return Err(Error::parameter(
                "OpticalLinkConfig",
                "beam waist larger than the transmit aperture",
            ));
        }
        Ok(())
    }
}

/// Atmospheric transmissivity versus wavelength (nm, rows) and zenith angle
/// (degrees, columns). The zenith grid must cover -80..+80 degrees; beyond
/// that range the link is treated as off.
#[derive(Debug, Clone, PartialEq)]
pub struct AtmosphereTable {
    grid: Grid2d,
}

impl AtmosphereTable {
    pub fn new(
        wavelength_nm: Vec<f64>,
        zenith_deg: Vec<f64>,
        transmissivity: Vec<f64>,
    ) -> Result<Self> {
        if let Some(v) = transmissivity.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::parameter(
                "AtmosphereTable",
                format!("transmissivity {v} outside [0, 1]"),
            ));
        }
        let grid = Grid2d::new(wavelength_nm, zenith_deg, transmissivity)?;
        let (lo, hi) = grid.col_range();
        if lo > -80.0 || hi < 80.0 {
            return Err(Error::parameter(
                "AtmosphereTable",
                format!("zenith grid [{lo}, {hi}] deg must cover -80..+80 deg"),
            ));
        }
        Ok(Self { grid })
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        self.grid.rows()
    }

    pub fn zenith_deg(&self) -> &[f64] {
        self.grid.cols()
    }

    pub fn values(&self) -> &[f64] {
        self.grid.values()
    }

    /// Bilinear transmissivity at `lambda_nm` and zenith angle `theta_zen`
    /// (radians). Out-of-grid queries are range errors.
    pub fn transmissivity(&self, lambda_nm: f64, theta_zen: f64) -> Result<f64> {
        let v = self
            .grid
            .bilinear("AtmosphereTable::transmissivity", lambda_nm, theta_zen.to_degrees())?;
        Ok(v.clamp(0.0, 1.0))
    }
}

/// The efficiency chain of one time slot, factor by factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelBudget {
    pub eta_diffraction: f64,
    pub eta_atmosphere: f64,
    pub eta_pointing: f64,
    pub eta_temporal: f64,
    pub eta_detector: f64,
    pub eta_total: f64,
    /// Background click probability in one detection window.
    pub p_bg: f64,
}

impl ChannelBudget {
    /// A lossless, noiseless channel. Handy for tests and toy models.
    pub fn ideal() -> Self {
        Self {
            eta_diffraction: 1.0,
            eta_atmosphere: 1.0,
            eta_pointing: 1.0,
            eta_temporal: 1.0,
            eta_detector: 1.0,
            eta_total: 1.0,
            p_bg: 0.0,
        }
    }

    /// Uniform toy channel with a given total efficiency and background.
    pub fn toy(eta_total: f64, p_bg: f64) -> Self {
        Self {
            eta_diffraction: eta_total,
            eta_atmosphere: 1.0,
            eta_pointing: 1.0,
            eta_temporal: 1.0,
            eta_detector: 1.0,
            eta_total,
            p_bg,
        }
    }

    /// System loss in dB, -10 log10(eta_total).
    pub fn loss_db(&self) -> f64 {
        -10.0 * self.eta_total.log10()
    }
}

/// 1/e^2 beam radius after free-space propagation over `z_m`.
pub fn beam_radius(z_m: f64, w0_m: f64, lambda_m: f64) -> f64 {
    assert!(z_m >= 0.0 && w0_m > 0.0 && lambda_m > 0.0);
    let rayleigh = std::f64::consts::PI * w0_m * w0_m / lambda_m;
    w0_m * (1.0 + (z_m / rayleigh).powi(2)).sqrt()
}

/// Fraction of a Gaussian beam of radius `w_m` collected by a circular
/// aperture of radius `a_m`.
pub fn aperture_transmissivity(w_m: f64, a_m: f64) -> f64 {
    assert!(w_m > 0.0 && a_m > 0.0);
    1.0 - (-2.0 * a_m * a_m / (w_m * w_m)).exp()
}

/// Link efficiency left after Gaussian pointing and tracking jitter of
/// standard error `theta_pt` on a transmitter of aperture radius `a_tx`.
pub fn pointing_efficiency(lambda_m: f64, aperture_tx_m: f64, theta_pt_rad: f64) -> f64 {
    assert!(lambda_m > 0.0 && aperture_tx_m > 0.0 && theta_pt_rad >= 0.0);
    let gain_tx = (2.0 * std::f64::consts::PI * aperture_tx_m / lambda_m).powi(2);
    (-gain_tx * theta_pt_rad * theta_pt_rad).exp()
}

/// Fraction of an exponentially distributed photon wavepacket of width
/// `tau` accepted by a detection window `dt_gate`.
pub fn temporal_filter_efficiency(dt_gate_s: f64, tau_s: f64) -> f64 {
    assert!(dt_gate_s >= 0.0 && tau_s > 0.0);
    1.0 - (-dt_gate_s / tau_s).exp()
}

/// Assemble the full efficiency chain and background for one pass sample.
pub fn link_budget(
    cfg: &OpticalLinkConfig,
    detector: &DetectorSpec,
    atmosphere: &AtmosphereTable,
    sample: &PassSample,
    background: &BackgroundModel,
    daylight: bool,
) -> Result<ChannelBudget> {
    let lambda_nm = cfg.lambda_m * 1e9;
    let w = beam_radius(sample.slant_km * 1e3, cfg.w0_m, cfg.lambda_m);
    let eta_diffraction = aperture_transmissivity(w, cfg.aperture_rx_m);
    let eta_atmosphere = atmosphere.transmissivity(lambda_nm, sample.theta_zen)?;
    let eta_pointing = pointing_efficiency(cfg.lambda_m, cfg.aperture_tx_m, cfg.theta_pt_rad);
    let eta_temporal = temporal_filter_efficiency(cfg.dt_gate_s, cfg.tau_s);
    let eta_detector = detector.efficiency_at(lambda_nm).ok_or_else(|| {
        Error::range(
            "link_budget",
            format!("detector {} does not cover {lambda_nm} nm", detector.name),
        )
    })?;
    let eta_total =
        eta_detector * eta_diffraction * eta_atmosphere * eta_pointing * eta_temporal;
    let p_bg = background_probability(
        detector,
        background,
        lambda_nm,
        sample.theta_zen,
        cfg.dt_gate_s,
        daylight,
    )?;
    Ok(ChannelBudget {
        eta_diffraction,
        eta_atmosphere,
        eta_pointing,
        eta_temporal,
        eta_detector,
        eta_total,
        p_bg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiometry::SolarTable;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn beam_radius_at_waist() {
        assert_eq!(beam_radius(0.0, 0.05, 656.448e-9), 0.05);
    }

    #[test]
    fn beam_radius_h_alpha_500km() {
        let w = beam_radius(500e3, 0.05, 656.448e-9);
        assert!(close(w, 2.090, 5e-4), "got {w}");
    }

    #[test]
    fn beam_radius_c_band_500km() {
        let w = beam_radius(500e3, 0.05, 1550.027e-9);
        assert!(close(w, 4.934, 5e-4), "got {w}");
    }

    #[test]
    fn aperture_full_capture() {
        // beam much smaller than the aperture
        let eta = aperture_transmissivity(0.01, 0.5);
        assert!((1.0 - eta).abs() < 1e-12);
    }

    #[test]
    fn aperture_h_alpha_and_c_band() {
        let h_alpha = aperture_transmissivity(beam_radius(500e3, 0.05, 656.448e-9), 0.5);
        let c = aperture_transmissivity(beam_radius(500e3, 0.05, 1550.027e-9), 0.5);
        assert!(close(h_alpha, 0.1082, 3e-4), "got {h_alpha}");
        assert!(close(c, 0.02033, 3e-5), "got {c}");
        let gap_db = 10.0 * (h_alpha / c).log10();
        assert!(close(gap_db, 7.3, 0.1), "gap {gap_db} dB");
    }

    #[test]
    fn pointing_reference_values() {
        assert_eq!(pointing_efficiency(656.448e-9, 0.05, 0.0), 1.0);
        let red = pointing_efficiency(656.448e-9, 0.05, 1e-6);
        assert!(close(red, 0.7953, 5e-4), "got {red}");
        let ir = pointing_efficiency(1550.027e-9, 0.05, 1e-6);
        assert!(close(ir, 0.9597, 5e-4), "got {ir}");
    }

    #[test]
    fn temporal_filter_values() {
        assert_eq!(temporal_filter_efficiency(0.0, 3e-9), 0.0);
        assert!(close(temporal_filter_efficiency(6e-9, 3e-9), 0.8647, 5e-5));
        assert!(close(temporal_filter_efficiency(1e-9, 3e-9), 0.2835, 5e-5));
    }

    fn toy_atmosphere() -> AtmosphereTable {
        let zen: Vec<f64> = (-16..=16).map(|i| i as f64 * 5.0).collect();
        let lam = vec![400.0, 1000.0, 1700.0];
        let mut vals = Vec::new();
        for _ in &lam {
            for z in &zen {
                let am = 1.0 / (z.to_radians().cos());
                vals.push((-0.1 * am).exp());
            }
        }
        AtmosphereTable::new(lam, zen, vals).unwrap()
    }

    #[test]
    fn atmosphere_node_and_midpoint() {
        let t = toy_atmosphere();
        let v0 = t.transmissivity(1000.0, 0.0).unwrap();
        assert!(close(v0, (-0.1f64).exp(), 1e-12));
        let v5 = t.transmissivity(1000.0, 5f64.to_radians()).unwrap();
        let mid = t.transmissivity(1000.0, 2.5f64.to_radians()).unwrap();
        assert!(close(mid, 0.5 * (v0 + v5), 1e-12));
    }

    #[test]
    fn atmosphere_out_of_range() {
        let t = toy_atmosphere();
        assert!(t.transmissivity(1000.0, 81f64.to_radians()).is_err());
        assert!(t.transmissivity(399.0, 0.0).is_err());
        // 80 deg + numerical dust clamps onto the edge
        assert!(t
            .transmissivity(1000.0, 80f64.to_radians() + 1e-13)
            .is_ok());
    }

    #[test]
    fn atmosphere_peaks_at_zenith() {
        let t = toy_atmosphere();
        let zenith = t.transmissivity(700.0, 0.0).unwrap();
        let mut theta = -80.0f64;
        while theta <= 80.0 {
            let v = t.transmissivity(700.0, theta.to_radians()).unwrap();
            assert!(v <= zenith + 1e-12, "eta_A({theta}) = {v} above zenith {zenith}");
            theta += 2.5;
        }
    }

    #[test]
    fn zenith_grid_must_cover_80_degrees() {
        let r = AtmosphereTable::new(
            vec![400.0, 800.0],
            vec![-75.0, 0.0, 75.0],
            vec![0.5; 6],
        );
        assert!(r.is_err());
    }

    fn sample_at(slant_km: f64, theta_deg: f64) -> PassSample {
        PassSample {
            t: 0.0,
            theta_zen: theta_deg.to_radians(),
            slant_km,
            elevation: (90.0 - theta_deg).to_radians(),
            angular_sep: 0.0,
        }
    }

    #[test]
    fn budget_factors_multiply() {
        let cfg = OpticalLinkConfig::at_wavelength(656.448);
        let det = DetectorSpec {
            name: "si".into(),
            wavelength_nm: vec![400.0, 1000.0],
            efficiency: vec![0.7, 0.7],
            dcr_cps: 100.0,
        };
        let atm = toy_atmosphere();
        let solar = SolarTable::new(
            vec![400.0, 1700.0],
            vec![-80.0, 0.0, 80.0],
            vec![1e15; 6],
        )
        .unwrap();
        let bg = BackgroundModel::new(solar);
        let b = link_budget(&cfg, &det, &atm, &sample_at(500.0, 0.0), &bg, true).unwrap();
        let product = b.eta_detector
            * b.eta_diffraction
            * b.eta_atmosphere
            * b.eta_pointing
            * b.eta_temporal;
        assert!((b.eta_total - product).abs() <= 1e-12 * product);
        let min_factor = [
            b.eta_detector,
            b.eta_diffraction,
            b.eta_atmosphere,
            b.eta_pointing,
            b.eta_temporal,
        ]
        .into_iter()
        .fold(f64::MAX, f64::min);
        assert!(b.eta_total <= min_factor);
        assert!(b.p_bg > 1e-7, "solar term missing: {}", b.p_bg);
        let night = link_budget(&cfg, &det, &atm, &sample_at(500.0, 0.0), &bg, false).unwrap();
        assert!(close(night.p_bg, 1e-7, 1e-18));
    }

    #[test]
    fn ideal_budget_is_unity() {
        let b = ChannelBudget::ideal();
        assert_eq!(b.eta_total, 1.0);
        assert_eq!(b.p_bg, 0.0);
    }

    proptest! {
        #[test]
        fn beam_monotone_in_distance_and_wavelength(
            z in 1.0..2.0e6f64,
            lam in 400.0..1700.0f64,
        ) {
            let w = beam_radius(z, 0.05, lam * 1e-9);
            prop_assert!(w > 0.05);
            prop_assert!(beam_radius(z * 1.1, 0.05, lam * 1e-9) > w);
            prop_assert!(beam_radius(z, 0.05, lam * 1.1e-9) > w);
        }

        #[test]
        fn pointing_monotone(lam in 400.0..1700.0f64, theta in 1e-8..5e-6f64) {
            let eta = pointing_efficiency(lam * 1e-9, 0.05, theta);
            prop_assert!((0.0..=1.0).contains(&eta));
            // decreasing in the error and in the aperture/wavelength ratio
            prop_assert!(pointing_efficiency(lam * 1e-9, 0.05, theta * 1.5) < eta);
            prop_assert!(pointing_efficiency(lam * 1e-9, 0.06, theta) < eta);
        }

        #[test]
        fn db_is_additive(
            eta_d in 0.01..1.0f64,
            eta_a in 0.01..1.0f64,
            eta_p in 0.01..1.0f64,
            eta_t in 0.01..1.0f64,
            eta_q in 0.01..1.0f64,
        ) {
            let total = eta_d * eta_a * eta_p * eta_t * eta_q;
            let sum_db = -10.0
                * (eta_d.log10() + eta_a.log10() + eta_p.log10() + eta_t.log10() + eta_q.log10());
            let total_db = -10.0 * total.log10();
            prop_assert!((sum_db - total_db).abs() < 1e-9);
        }
    }
}
