//! Circular-orbit pass kinematics.
//!
//! Models a satellite on a circular orbit over a spherical Earth and a
//! ground station at (or near) sea level: slant distance vs zenith angle,
//! orbital period, the time parameterization of a zenith-crossing pass,
//! and offset ground-track passes with limited maximum elevation.
//!
//! Earth rotation during a pass and atmospheric refraction are neglected;
//! a pass is a static overflight symmetric about closest approach.

use crate::error::{Error, Result};

/// Tolerance used to clamp inverse-trig arguments that drift marginally
/// outside [-1, 1] from rounding.
const TRIG_CLAMP_TOL: f64 = 1e-12;

/// Earth and station constants for pass geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoConstants {
    /// Mean Earth radius in km (sphere model).
    pub earth_radius_km: f64,
    /// Gravitational constant in m^3 kg^-1 s^-2.
    pub grav_const: f64,
    /// Earth mass in kg.
    pub earth_mass_kg: f64,
    /// Ground station altitude above the sphere in km.
    pub station_altitude_km: f64,
}

impl Default for GeoConstants {
    fn default() -> Self {
        Self {
            earth_radius_km: 6371.0,
            grav_const: 6.674e-11,
            earth_mass_kg: 5.972e24,
            station_altitude_km: 0.0,
        }
    }
}

impl GeoConstants {
    /// Distance from the Earth's center to the ground station, km.
    pub fn station_radius_km(&self) -> f64 {
        self.earth_radius_km + self.station_altitude_km
    }

    pub fn validate(&self) -> Result<()> {
        if self.earth_radius_km <= 0.0 || self.grav_const <= 0.0 || self.earth_mass_kg <= 0.0 {
            return Err(Error::parameter(
                "GeoConstants",
                "earth radius, G and Earth mass must be strictly positive",
            ));
        }
        if self.station_altitude_km < 0.0 {
            return Err(Error::parameter(
                "GeoConstants",
                "station altitude must be non-negative",
            ));
        }
        Ok(())
    }
}

/// One time slot of a satellite pass as seen from the ground station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassSample {
    /// Seconds relative to closest approach (negative before).
    pub t: f64,
    /// Line-of-sight zenith angle in radians, signed like `t`.
    pub theta_zen: f64,
    /// Slant distance station-satellite in km.
    pub slant_km: f64,
    /// Elevation above the astronomical horizon in radians.
    pub elevation: f64,
    /// Central angle between station and sub-satellite point in radians.
    pub angular_sep: f64,
}

/// Slant distance between station and satellite for a given zenith angle.
///
/// `h` is the satellite altitude in km, `theta_zen` in [-pi/2, pi/2].
pub fn slant_distance(h_km: f64, theta_zen: f64, geo: &GeoConstants) -> f64 {
    assert!(h_km > 0.0, "satellite altitude must be positive");
    assert!(
        theta_zen.abs() <= std::f64::consts::FRAC_PI_2 + TRIG_CLAMP_TOL,
        "zenith angle outside [-pi/2, pi/2]"
    );
    let r_s = geo.earth_radius_km + h_km;
    let r_g = geo.station_radius_km();
    let cos = theta_zen.cos();
    let radicand = r_s * r_s + r_g * r_g * (cos * cos - 1.0);
    // radicand >= (R_S^2 - R_G^2) > 0 for h > h0 >= 0
    assert!(radicand >= 0.0, "negative radicand in slant distance");
    radicand.sqrt() - r_g * cos
}

/// Satellite altitude recovered from slant distance and zenith angle (km).
/// Inverse of [`slant_distance`]; even in `theta_zen`.
pub fn altitude_from_slant(z_km: f64, theta_zen: f64, geo: &GeoConstants) -> f64 {
    assert!(z_km > 0.0, "slant distance must be positive");
    let r_g = geo.station_radius_km();
    (r_g * r_g + z_km * z_km + 2.0 * z_km * r_g * theta_zen.cos()).sqrt() - geo.earth_radius_km
}

/// Orbital period of a circular orbit at altitude `h_km`, in seconds.
pub fn orbital_period(h_km: f64, geo: &GeoConstants) -> f64 {
    assert!(h_km > 0.0, "satellite altitude must be positive");
    let r_s_m = (geo.earth_radius_km + h_km) * 1e3;
    let mu = geo.grav_const * geo.earth_mass_kg;
    2.0 * std::f64::consts::PI * (r_s_m.powi(3) / mu).sqrt()
}

/// Time at which a zenith-crossing circular pass reaches `theta_zen`,
/// with t = 0 at the zenith crossing. Signed like `theta_zen`.
pub fn time_from_zenith_angle(theta_zen: f64, h_km: f64, geo: &GeoConstants) -> Result<f64> {
    let r_s = geo.earth_radius_km + h_km;
    let r_g = geo.station_radius_km();
    let z = slant_distance(h_km, theta_zen, geo);
    let arg = (r_g + z * theta_zen.cos()) / r_s;
    if arg.abs() > 1.0 + TRIG_CLAMP_TOL {
        return Err(Error::domain(
            "time_from_zenith_angle",
            format!("arccos argument {arg} outside [-1, 1]"),
        ));
    }
    let r_s_m = r_s * 1e3;
    let mu = geo.grav_const * geo.earth_mass_kg;
    let t = (r_s_m.powi(3) / mu).sqrt() * arg.clamp(-1.0, 1.0).acos();
    Ok(t.copysign(theta_zen))
}

/// Sample a pass with ground-track offset `d_km` at time step `dt_s`,
/// keeping only slots with elevation >= `min_elevation` (radians).
///
/// The in-track angle advances as alpha = 2 pi t / T_S; the central angle
/// follows the spherical law of cosines, cos(sigma) = cos(alpha) cos(d/R_E).
/// Samples are emitted symmetrically about closest approach (t = 0). An
/// empty vector is returned when even the closest approach stays below the
/// elevation mask.
pub fn pass_trajectory(
    h_km: f64,
    ground_track_offset_km: f64,
    dt_s: f64,
    min_elevation: f64,
    geo: &GeoConstants,
) -> Vec<PassSample> {
    assert!(ground_track_offset_km >= 0.0, "offset must be non-negative");
    assert!(dt_s > 0.0, "time step must be positive");
    let period = orbital_period(h_km, geo);
    let cross = (ground_track_offset_km / geo.earth_radius_km).cos();

    let sample_at = |t: f64| -> Option<PassSample> {
        let alpha = 2.0 * std::f64::consts::PI * t / period;
        let cos_sigma = alpha.cos() * cross;
        let sigma = cos_sigma.clamp(-1.0, 1.0).acos();
        let (slant, elevation) = slant_elevation(h_km, cos_sigma, geo);
        if elevation < min_elevation {
            return None;
        }
        let theta_zen = (std::f64::consts::FRAC_PI_2 - elevation).copysign(if t == 0.0 {
            1.0
        } else {
            t
        });
        Some(PassSample { t, theta_zen, slant_km: slant, elevation, angular_sep: sigma })
    };

    let Some(center) = sample_at(0.0) else {
        return Vec::new();
    };

    // Elevation decreases monotonically with |t| until the satellite sets;
    // walk outwards until the mask is crossed (bounded by a quarter orbit).
    let mut ahead = Vec::new();
    let mut k = 1usize;
    let k_max = (0.25 * period / dt_s).ceil() as usize + 1;
    while k <= k_max {
        match sample_at(k as f64 * dt_s) {
            Some(s) => ahead.push(s),
            None => break,
        }
        k += 1;
    }

    let mut out = Vec::with_capacity(2 * ahead.len() + 1);
    for s in ahead.iter().rev() {
        out.push(PassSample {
            t: -s.t,
            theta_zen: -s.theta_zen,
            slant_km: s.slant_km,
            elevation: s.elevation,
            angular_sep: s.angular_sep,
        });
    }
    out.push(center);
    out.extend_from_slice(&ahead);
    out
}

/// Slant distance (km) and elevation (rad) from the central angle cosine.
fn slant_elevation(h_km: f64, cos_sigma: f64, geo: &GeoConstants) -> (f64, f64) {
    let r_s = geo.earth_radius_km + h_km;
    let r_g = geo.station_radius_km();
    let slant = (r_g * r_g + r_s * r_s - 2.0 * r_g * r_s * cos_sigma).sqrt();
    let sin_elev = ((r_s * cos_sigma - r_g) / slant).clamp(-1.0, 1.0);
    (slant, sin_elev.asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GEO: GeoConstants = GeoConstants {
        earth_radius_km: 6371.0,
        grav_const: 6.674e-11,
        earth_mass_kg: 5.972e24,
        station_altitude_km: 0.0,
    };

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn slant_at_zenith_equals_altitude() {
        let z = slant_distance(500.0, 0.0, &GEO);
        assert!((z - 500.0).abs() < 1e-9, "got {z}");
    }

    #[test]
    fn slant_at_80_degrees_matches_long_range() {
        // consistent with a horizonward range of roughly 1700 km at 500 km altitude
        let z = slant_distance(500.0, deg(80.0), &GEO);
        assert!((z - 1694.7).abs() < 0.5, "got {z}");
    }

    #[test]
    fn altitude_round_trip_at_45_degrees() {
        let z = slant_distance(500.0, deg(45.0), &GEO);
        let h = altitude_from_slant(z, deg(45.0), &GEO);
        assert!((h - 500.0).abs() / 500.0 < 1e-9, "got {h}");
    }

    #[test]
    fn altitude_even_in_zenith_angle() {
        let a = altitude_from_slant(1694.7, deg(80.0), &GEO);
        let b = altitude_from_slant(1694.7, deg(-80.0), &GEO);
        assert_eq!(a, b);
        assert!((a - 500.0).abs() < 0.2, "got {a}");
    }

    #[test]
    fn orbital_period_500km() {
        let t = orbital_period(500.0, &GEO);
        assert!((t - 5668.4).abs() < 0.5, "got {t}");
        // orbits per earth revolution around the sun
        let n = 31_558_140.0 / t;
        assert!((n - 5567.0).abs() < 1.0, "got {n}");
    }

    #[test]
    fn orbital_period_monotone_in_altitude() {
        let mut last = 0.0;
        for h in [200.0, 500.0, 800.0, 1200.0, 2000.0] {
            let t = orbital_period(h, &GEO);
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn period_kepler_scaling() {
        // T^2 proportional to (R_E + h)^3
        let t1 = orbital_period(500.0, &GEO);
        let t2 = orbital_period(1500.0, &GEO);
        let lhs = (t2 / t1).powi(2);
        let rhs = ((6371.0 + 1500.0) / (6371.0 + 500.0f64)).powi(3);
        assert!((lhs - rhs).abs() / rhs < 1e-12, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn time_zero_at_zenith() {
        assert_eq!(time_from_zenith_angle(0.0, 500.0, &GEO).unwrap(), 0.0);
    }

    #[test]
    fn time_is_odd_in_zenith_angle() {
        let tp = time_from_zenith_angle(deg(60.0), 500.0, &GEO).unwrap();
        let tm = time_from_zenith_angle(deg(-60.0), 500.0, &GEO).unwrap();
        assert_eq!(tp, -tm);
        assert!(tp > 0.0);
    }

    #[test]
    fn transit_window_within_6_percent_of_420s() {
        // the -80 deg .. +80 deg transit of a 500 km zenith pass
        let t = time_from_zenith_angle(deg(80.0), 500.0, &GEO).unwrap();
        assert!((t - 221.3).abs() < 0.5, "got {t}");
        let window = 2.0 * t;
        assert!((window - 420.0).abs() / 420.0 < 0.06, "window {window}");
    }

    #[test]
    fn zero_offset_pass_matches_slant_distance() {
        let pass = pass_trajectory(500.0, 0.0, 1.0, deg(10.0), &GEO);
        assert!(!pass.is_empty());
        for s in &pass {
            // sigma equals the in-track angle; slant must agree with the
            // zenith-angle formula at this sample's theta_zen
            let z = slant_distance(500.0, s.theta_zen, &GEO);
            assert!(
                (z - s.slant_km).abs() / z < 1e-9,
                "slant mismatch at t={}: {} vs {}",
                s.t,
                s.slant_km,
                z
            );
        }
    }

    #[test]
    fn zero_offset_pass_matches_time_inversion() {
        let dt = 1.0;
        let pass = pass_trajectory(500.0, 0.0, dt, deg(10.0), &GEO);
        for s in pass.iter().filter(|s| s.t != 0.0) {
            let t = time_from_zenith_angle(s.theta_zen, 500.0, &GEO).unwrap();
            assert!((t - s.t).abs() <= dt, "t mismatch: {} vs {}", t, s.t);
        }
    }

    #[test]
    fn offset_pass_max_elevation_at_1563km() {
        let pass = pass_trajectory(500.0, 1563.0, 1.0, deg(0.0), &GEO);
        let max_elev = pass.iter().map(|s| s.elevation).fold(f64::MIN, f64::max);
        let max_deg = max_elev.to_degrees();
        assert!((max_deg - 10.0).abs() < 0.1, "got {max_deg}");
    }

    #[test]
    fn elevation_peaks_at_closest_approach() {
        for d in [0.0, 400.0, 900.0, 1400.0] {
            let pass = pass_trajectory(500.0, d, 0.25, deg(5.0), &GEO);
            let peak = pass.iter().map(|s| s.elevation).fold(f64::MIN, f64::max);
            let center = pass.iter().find(|s| s.t == 0.0).unwrap();
            assert_eq!(center.elevation, peak, "offset {d}");
            // monotone on each side
            let after: Vec<_> = pass.iter().filter(|s| s.t >= 0.0).collect();
            for w in after.windows(2) {
                assert!(w[1].elevation <= w[0].elevation, "offset {d} t {}", w[1].t);
            }
        }
    }

    #[test]
    fn hopeless_offset_returns_empty() {
        // max elevation at closest approach below the mask
        let pass = pass_trajectory(500.0, 2200.0, 1.0, deg(10.0), &GEO);
        assert!(pass.is_empty());
    }

    #[test]
    fn pass_is_symmetric_about_zero() {
        let pass = pass_trajectory(500.0, 700.0, 1.0, deg(10.0), &GEO);
        let n = pass.len();
        assert_eq!(n % 2, 1);
        for i in 0..n / 2 {
            let a = &pass[i];
            let b = &pass[n - 1 - i];
            assert_eq!(a.t, -b.t);
            assert_eq!(a.slant_km, b.slant_km);
            assert_eq!(a.elevation, b.elevation);
        }
    }

    #[test]
    fn law_of_cosines_invariant() {
        let r_g = GEO.station_radius_km();
        let r_s = 6371.0 + 500.0;
        for s in pass_trajectory(500.0, 800.0, 5.0, deg(10.0), &GEO) {
            let z2 = r_g * r_g + r_s * r_s - 2.0 * r_g * r_s * s.angular_sep.cos();
            assert!(
                (z2.sqrt() - s.slant_km).abs() / s.slant_km < 1e-9,
                "law of cosines violated at t={}",
                s.t
            );
        }
    }

    proptest! {
        #[test]
        fn round_trip_altitude(h in 100.0..2000.0f64, theta in -80.0..80.0f64) {
            let z = slant_distance(h, deg(theta), &GEO);
            let back = altitude_from_slant(z, deg(theta), &GEO);
            prop_assert!((back - h).abs() / h < 1e-9);
        }

        #[test]
        fn slant_even_and_monotone(h in 100.0..2000.0f64, theta in 0.0..79.0f64) {
            let z_pos = slant_distance(h, deg(theta), &GEO);
            let z_neg = slant_distance(h, deg(-theta), &GEO);
            prop_assert!((z_pos - z_neg).abs() <= 1e-9 * z_pos);
            let z_wider = slant_distance(h, deg(theta + 1.0), &GEO);
            prop_assert!(z_wider > z_pos);
        }
    }
}
