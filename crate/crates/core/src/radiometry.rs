//! Background click probability from solar radiance and dark counts.
//!
//! The solar sky radiance is tabulated as spectral photon radiance
//! (photons s^-1 m^-2 sr^-1 nm^-1) against wavelength and the receiver
//! line-of-sight zenith angle, for a fixed sun position. The probability of
//! a background click in one detection window combines the radiance
//! integrated over the spectral filter band with the detector dark count
//! rate. At night the solar term is dropped entirely; background light from
//! stars and the moon is not modeled.

use crate::error::{Error, Result};
use crate::grid::{integrate_linear, Grid2d};

/// Spectral photon radiance of the daytime sky versus wavelength (nm, rows)
/// and line-of-sight zenith angle (degrees, columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SolarTable {
    grid: Grid2d,
}

impl SolarTable {
    pub fn new(wavelength_nm: Vec<f64>, zenith_deg: Vec<f64>, radiance: Vec<f64>) -> Result<Self> {
        if let Some(v) = radiance.iter().find(|v| **v < 0.0) {
            return Err(Error::parameter("SolarTable", format!("negative radiance {v}")));
        }
        Ok(Self { grid: Grid2d::new(wavelength_nm, zenith_deg, radiance)? })
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

    /// Spectral photon radiance at a single wavelength and zenith angle.
    pub fn radiance(&self, lambda_nm: f64, theta_zen: f64) -> Result<f64> {
        self.grid
            .bilinear("SolarTable::radiance", lambda_nm, theta_zen.to_degrees())
            .map(|v| v.max(0.0))
    }

    /// Photon radiance integrated over the filter band
    /// [lambda - dl/2, lambda + dl/2], photons s^-1 m^-2 sr^-1.
    ///
    /// `theta_zen` is the line-of-sight zenith angle in radians. The
    /// spectrum is treated as piecewise linear between grid nodes.
    pub fn band_radiance(&self, lambda_nm: f64, delta_lambda_nm: f64, theta_zen: f64) -> Result<f64> {
        assert!(delta_lambda_nm > 0.0, "filter bandwidth must be positive");
        let lo = lambda_nm - 0.5 * delta_lambda_nm;
        let hi = lambda_nm + 0.5 * delta_lambda_nm;
        let (gmin, gmax) = self.grid.row_range();
        if lo < gmin || hi > gmax {
            return Err(Error::range(
                "SolarTable::band_radiance",
                format!("filter band [{lo}, {hi}] nm outside grid [{gmin}, {gmax}] nm"),
            ));
        }
        let profile = self
            .grid
            .column_profile("SolarTable::band_radiance", theta_zen.to_degrees())?;
        Ok(integrate_linear(self.grid.rows(), &profile, lo, hi).max(0.0))
    }
}

/// Receiver-side background collection parameters.
#[derive(Debug, Clone)]
pub struct BackgroundModel {
    /// Receiver field of view in steradians.
    pub omega_fov_sr: f64,
    /// Receiver aperture radius in m.
    pub aperture_rx_m: f64,
    /// Spectral filter bandwidth in nm.
    pub delta_lambda_nm: f64,
    /// Fixed sun zenith angle in degrees (the tables were computed for it).
    pub sun_zenith_deg: f64,
    /// Fixed sun azimuth in degrees.
    pub sun_azimuth_deg: f64,
    pub solar: SolarTable,
}

impl BackgroundModel {
    pub fn new(solar: SolarTable) -> Self {
        Self {
            omega_fov_sr: 1e-10,
            aperture_rx_m: 0.5,
            delta_lambda_nm: 0.5,
            sun_zenith_deg: 45.0,
            sun_azimuth_deg: 0.0,
            solar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega_fov_sr <= 0.0 || self.aperture_rx_m <= 0.0 || self.delta_lambda_nm <= 0.0 {
            return Err(Error::parameter(
                "BackgroundModel",
                "field of view, aperture and filter bandwidth must be positive",
            ));
        }
        Ok(())
    }
}

/// One single-photon detector: efficiency curve over wavelength plus a dark
/// count rate. The curve covers only the detector's sensitive range.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub name: String,
    pub wavelength_nm: Vec<f64>,
    pub efficiency: Vec<f64>,
    /// Dark count rate in counts per second.
    pub dcr_cps: f64,
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.wavelength_nm.len() != self.efficiency.len() || self.wavelength_nm.len() < 2 {
            return Err(Error::parameter(
                "DetectorSpec",
                format!("detector {} needs matching wavelength/efficiency arrays", self.name),
            ));
        }
        if !self.wavelength_nm.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::parameter(
                "DetectorSpec",
                format!("detector {} wavelength grid not strictly increasing", self.name),
            ));
        }
        if let Some(e) = self.efficiency.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::parameter(
                "DetectorSpec",
                format!("detector {} efficiency {e} outside [0, 1]", self.name),
            ));
        }
        if self.dcr_cps < 0.0 {
            return Err(Error::parameter(
                "DetectorSpec",
                format!("detector {} dark count rate negative", self.name),
            ));
        }
        Ok(())
    }

    /// Interpolated efficiency, or None outside the sensitive range.
    pub fn efficiency_at(&self, lambda_nm: f64) -> Option<f64> {
        let grid = &self.wavelength_nm;
        if lambda_nm < grid[0] || lambda_nm > *grid.last().unwrap() {
            return None;
        }
        let i = match grid.binary_search_by(|p| p.partial_cmp(&lambda_nm).unwrap()) {
            Ok(i) => return Some(self.efficiency[i]),
            Err(i) => i - 1,
        };
        let t = (lambda_nm - grid[i]) / (grid[i + 1] - grid[i]);
        Some(self.efficiency[i] + t * (self.efficiency[i + 1] - self.efficiency[i]))
    }
}

/// Pick the most efficient detector at `lambda_nm`. Ties go to the lower
/// dark count rate, then to lexicographic name order.
pub fn select_detector(catalog: &[DetectorSpec], lambda_nm: f64) -> Result<&DetectorSpec> {
    let mut best: Option<(&DetectorSpec, f64)> = None;
    for det in catalog {
        let Some(eff) = det.efficiency_at(lambda_nm) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((cur, cur_eff)) => {
                eff > cur_eff
                    || (eff == cur_eff
                        && (det.dcr_cps < cur.dcr_cps
                            || (det.dcr_cps == cur.dcr_cps && det.name < cur.name)))
            }
        };
        if better {
            best = Some((det, eff));
        }
    }
    best.map(|(d, _)| d).ok_or_else(|| {
        Error::range(
            "select_detector",
            format!("no detector covers {lambda_nm} nm"),
        )
    })
}

/// The receiver etendue-time product Gamma_R = dt * Omega_fov * a_G^2.
pub fn etendue_parameter(dt_gate_s: f64, omega_fov_sr: f64, aperture_rx_m: f64) -> f64 {
    assert!(dt_gate_s >= 0.0 && omega_fov_sr > 0.0 && aperture_rx_m > 0.0);
    dt_gate_s * omega_fov_sr * aperture_rx_m * aperture_rx_m
}

/// Probability of a background click in one detection window.
///
/// p_BG = eta_det * Gamma_R * H_band + DCR * dt, where H_band is the solar
/// photon radiance integrated over the filter band at the line-of-sight
/// zenith angle. With `daylight` off the solar term is zero. The result is
/// clamped to [0, 1].
pub fn background_probability(
    detector: &DetectorSpec,
    bg: &BackgroundModel,
    lambda_nm: f64,
    theta_zen: f64,
    dt_gate_s: f64,
    daylight: bool,
) -> Result<f64> {
    let dark = detector.dcr_cps * dt_gate_s;
    let solar = if daylight {
        let eta_det = detector.efficiency_at(lambda_nm).ok_or_else(|| {
            Error::range(
                "background_probability",
                format!("detector {} does not cover {lambda_nm} nm", detector.name),
            )
        })?;
        let gamma_r = etendue_parameter(dt_gate_s, bg.omega_fov_sr, bg.aperture_rx_m);
        let band = bg.solar.band_radiance(lambda_nm, bg.delta_lambda_nm, theta_zen)?;
        eta_det * gamma_r * band
    } else {
        0.0
    };
    Ok((dark + solar).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_solar(level: f64) -> SolarTable {
        SolarTable::new(
            vec![600.0, 650.0, 700.0, 750.0],
            vec![-80.0, 0.0, 80.0],
            vec![level; 12],
        )
        .unwrap()
    }

    fn detector() -> DetectorSpec {
        DetectorSpec {
            name: "si".into(),
            wavelength_nm: vec![400.0, 1000.0],
            efficiency: vec![0.7, 0.7],
            dcr_cps: 100.0,
        }
    }

    #[test]
    fn etendue_reference_value() {
        let g = etendue_parameter(1e-9, 1e-10, 0.5);
        assert!((g - 2.5e-20).abs() < 1e-32, "got {g}");
    }

    #[test]
    fn etendue_scaling_and_zero() {
        assert_eq!(
            etendue_parameter(1e-9, 1e-10, 1.0),
            4.0 * etendue_parameter(1e-9, 1e-10, 0.5)
        );
        assert_eq!(etendue_parameter(0.0, 1e-10, 0.5), 0.0);
    }

    #[test]
    fn band_radiance_zero_table() {
        let t = flat_solar(0.0);
        assert_eq!(t.band_radiance(650.0, 0.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn band_radiance_constant_spectrum() {
        let t = flat_solar(3.0e15);
        let v = t.band_radiance(650.0, 0.5, 0.2).unwrap();
        assert!((v - 1.5e15).abs() / 1.5e15 < 1e-9, "got {v}");
        // halving the band halves the result on a flat spectrum
        let h = t.band_radiance(650.0, 0.25, 0.2).unwrap();
        assert!((h - 0.5 * v).abs() / v < 0.02);
    }

    #[test]
    fn band_outside_grid_is_error() {
        let t = flat_solar(1.0);
        // band [600.05, 600.55] fits; [599.85, 600.35] does not
        assert!(t.band_radiance(600.3, 0.5, 0.0).is_ok());
        assert!(t.band_radiance(600.1, 0.5, 0.0).is_err());
        assert!(t.band_radiance(750.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn night_probability_is_dark_counts_only() {
        let bg = BackgroundModel::new(flat_solar(1e20));
        let p = background_probability(&detector(), &bg, 650.0, 0.0, 1e-9, false).unwrap();
        assert!((p - 1e-7).abs() < 1e-20, "got {p}");
    }

    #[test]
    fn day_exceeds_night_and_scales_with_window() {
        let bg = BackgroundModel::new(flat_solar(1e16));
        let det = detector();
        let night = background_probability(&det, &bg, 650.0, 0.1, 1e-9, false).unwrap();
        let day = background_probability(&det, &bg, 650.0, 0.1, 1e-9, true).unwrap();
        assert!(day > night);
        let day2 = background_probability(&det, &bg, 650.0, 0.1, 2e-9, true).unwrap();
        assert!((day2 - 2.0 * day).abs() / day < 1e-9, "p_BG not linear in dt");
    }

    #[test]
    fn probability_clamped_at_one() {
        let bg = BackgroundModel::new(flat_solar(1e40));
        let p = background_probability(&detector(), &bg, 650.0, 0.0, 1e-3, true).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn detector_selection_prefers_efficiency() {
        let a = DetectorSpec {
            name: "a".into(),
            wavelength_nm: vec![400.0, 800.0],
            efficiency: vec![0.6, 0.6],
            dcr_cps: 500.0,
        };
        let b = DetectorSpec {
            name: "b".into(),
            wavelength_nm: vec![400.0, 800.0],
            efficiency: vec![0.3, 0.3],
            dcr_cps: 10.0,
        };
        let cat = vec![a, b];
        assert_eq!(select_detector(&cat, 600.0).unwrap().name, "a");
    }

    #[test]
    fn detector_selection_tie_breaks_on_dcr() {
        let a = DetectorSpec {
            name: "z".into(),
            wavelength_nm: vec![400.0, 800.0],
            efficiency: vec![0.5, 0.5],
            dcr_cps: 50.0,
        };
        let b = DetectorSpec {
            name: "a".into(),
            wavelength_nm: vec![400.0, 800.0],
            efficiency: vec![0.5, 0.5],
            dcr_cps: 500.0,
        };
        assert_eq!(select_detector(&[a.clone(), b.clone()], 600.0).unwrap().name, "z");
        // equal DCR too: lexicographic name order

        let c = DetectorSpec { dcr_cps: 50.0, ..b };
        assert_eq!(select_detector(&[a, c], 600.0).unwrap().name, "a");
    }

    #[test]
    fn detector_selection_switches_at_crossover() {
        // crossing efficiency curves: find the switch with a fine scan
        let red = DetectorSpec {
            name: "red".into(),
            wavelength_nm: vec![400.0, 1000.0],
            efficiency: vec![0.8, 0.2],
            dcr_cps: 100.0,
        };
        let ir = DetectorSpec {
            name: "ir".into(),
            wavelength_nm: vec![400.0, 1000.0],
            efficiency: vec![0.2, 0.8],
            dcr_cps: 100.0,
        };
        let cat = vec![red, ir];
        let mut switch = None;
        let mut lam = 400.0;
        while lam <= 1000.0 {
            let name = &select_detector(&cat, lam).unwrap().name;
            if name == "ir" {
                switch = Some(lam);
                break;
            }
            lam += 0.5;
        }
        let switch = switch.expect("selection never switched");
        assert!((switch - 700.0).abs() <= 0.5, "switch at {switch}");
    }

    #[test]
    fn empty_catalog_coverage_error() {
        let cat: Vec<DetectorSpec> = vec![];
        assert!(select_detector(&cat, 650.0).is_err());
        let narrow = DetectorSpec {
            name: "n".into(),
            wavelength_nm: vec![400.0, 500.0],
            efficiency: vec![0.5, 0.5],
            dcr_cps: 1.0,
        };
        assert!(select_detector(&[narrow], 650.0).is_err());
    }
}
