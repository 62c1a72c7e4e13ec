//! Dataset ingestion, validation and scenario configuration.
//!
//! All tables travel as CSV with a `#`-prefixed header block of
//! `key: value` metadata lines, followed by a normal CSV header row whose
//! first column is the wavelength in nm:
//!
//! ```text
//! # kind: atmosphere
//! # units: transmissivity
//! wavelength_nm,-80,-75,...,80
//! 400,0.6425,...
//! ```
//!
//! * atmosphere: transmissivity per (wavelength, zenith angle), zenith
//!   columns must cover -80..+80 degrees;
//! * solar: sky spectral radiance per (wavelength, line-of-sight zenith
//!   angle); the mandatory `units` key selects photon radiance
//!   (`photons/s/m^2/sr/nm`) or power radiance (`W/m^2/sr/nm`), the latter
//!   being converted on load via the photon energy at each wavelength;
//! * detectors: one efficiency column per detector, blank cells where a
//!   detector has no coverage, dark count rates in the `dcr_cps` header.
//!
//! Scenario configuration is a TOML file with sections mirroring the
//! simulator modules; unknown keys are rejected. Every value has a
//! default, so an empty file is a valid baseline scenario.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{AtmosphereTable, OpticalLinkConfig};
use crate::error::{Error, Result};
use crate::keyrate_asymptotic::DetectionStats;
use crate::keyrate_finite::SecurityParams;
use crate::radiometry::{DetectorSpec, SolarTable};

/// Planck constant times speed of light, J m.
const HC: f64 = 6.62607015e-34 * 299_792_458.0;

/// Environment variable overriding the dataset root directory.
pub const DATA_DIR_ENV: &str = "SATKEY_DATA_DIR";

// ---------------------------------------------------------------------------
// CSV plumbing
// ---------------------------------------------------------------------------

struct RawTable {
    meta: BTreeMap<String, String>,
    /// Column names from the CSV header row.
    columns: Vec<String>,
    /// Parsed rows; None marks an empty cell.
    rows: Vec<Vec<Option<f64>>>,
}

fn read_raw(path: &Path) -> Result<RawTable> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: display.clone(), source: e })?;

    let mut meta = BTreeMap::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.trim_start().strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        body.push_str(line);
        body.push('\n');
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(body.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv { path: display.clone(), source: e })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if columns.len() < 2 {
        return Err(Error::data(&display, "need a wavelength column plus data columns"));
    }

    let mut rows = Vec::new();
    for (ri, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv { path: display.clone(), source: e })?;
        let mut row = Vec::with_capacity(columns.len());
        for (ci, field) in record.iter().enumerate() {
            let field = field.trim();
            if field.is_empty() {
                row.push(None);
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    Error::data_at(
                        &display,
                        Some(ri + 2),
                        Some(columns[ci].clone()),
                        format!("cannot parse '{field}' as a number"),
                    )
                })?;
                row.push(Some(v));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data(&display, "no data rows"));
    }
    Ok(RawTable { meta, columns, rows })
}

/// Angle columns parsed from the header names, plus the wavelength grid and
/// a dense value matrix (no holes allowed).
fn dense_angle_table(path: &Path, raw: &RawTable) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let display = path.display().to_string();
    let mut zenith = Vec::with_capacity(raw.columns.len() - 1);
    for name in &raw.columns[1..] {
        let z: f64 = name.parse().map_err(|_| {
            Error::data_at(
                &display,
                Some(1),
                Some(name.clone()),
                "column header is not a zenith angle in degrees",
            )
        })?;
        zenith.push(z);
    }
    let mut wavelength = Vec::with_capacity(raw.rows.len());
    let mut values = Vec::with_capacity(raw.rows.len() * zenith.len());
    for (ri, row) in raw.rows.iter().enumerate() {
        let lam = row[0].ok_or_else(|| {
            Error::data_at(&display, Some(ri + 2), Some(raw.columns[0].clone()), "missing wavelength")
        })?;
        wavelength.push(lam);
        for (ci, cell) in row[1..].iter().enumerate() {
            let v = cell.ok_or_else(|| {
                Error::data_at(
                    &display,
                    Some(ri + 2),
                    Some(raw.columns[ci + 1].clone()),
                    "missing value",
                )
            })?;
            values.push(v);
        }
    }
    Ok((wavelength, zenith, values))
}

// ---------------------------------------------------------------------------
// Loaders
// ---------------------------------------------------------------------------

/// Load and validate an atmospheric transmissivity table.
pub fn load_atmosphere(path: &Path) -> Result<AtmosphereTable> {
    let display = path.display().to_string();
    let raw = read_raw(path)?;
    if let Some(kind) = raw.meta.get("kind") {
        if kind != "atmosphere" {
            return Err(Error::data(&display, format!("expected kind 'atmosphere', got '{kind}'")));
        }
    }
    let (wavelength, zenith, values) = dense_angle_table(path, &raw)?;
    if let Some(&hi) = zenith.last() {
        if hi < 80.0 || zenith[0] > -80.0 {
            return Err(Error::data_at(
                &display,
                None,
                Some("+80".into()),
                format!(
                    "zenith columns span [{}, {}] deg but must cover -80..+80 deg",
                    zenith[0], hi
                ),
            ));
        }
    }
    // locate offending cells for a useful message before the type check
    for (i, v) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(v) {
            let ri = i / zenith.len();
            let ci = i % zenith.len();
            return Err(Error::data_at(
                &display,
                Some(ri + 2),
                Some(raw.columns[ci + 1].clone()),
                format!("transmissivity {v} outside [0, 1]"),
            ));
        }
    }
    AtmosphereTable::new(wavelength, zenith, values)
        .map_err(|e| Error::data(&display, e.to_string()))
}

/// Write an atmosphere table in the bundled CSV schema.
pub fn write_atmosphere(path: &Path, table: &AtmosphereTable) -> Result<()> {
    let mut out = String::from("# kind: atmosphere\n# units: transmissivity\n");
    out.push_str("wavelength_nm");
    for z in table.zenith_deg() {
        out.push_str(&format!(",{z}"));
    }
    out.push('\n');
    let ncols = table.zenith_deg().len();
    for (ri, lam) in table.wavelengths_nm().iter().enumerate() {
        out.push_str(&format!("{lam}"));
        for ci in 0..ncols {
            out.push_str(&format!(",{}", table.values()[ri * ncols + ci]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

/// Load and validate a solar radiance table, converting power radiance to
/// photon radiance when the unit header asks for it.
pub fn load_solar(path: &Path) -> Result<SolarTable> {
    let display = path.display().to_string();
    let raw = read_raw(path)?;
    if let Some(kind) = raw.meta.get("kind") {
        if kind != "solar" {
            return Err(Error::data(&display, format!("expected kind 'solar', got '{kind}'")));
        }
    }
    let units = raw
        .meta
        .get("units")
        .ok_or_else(|| Error::data(&display, "missing mandatory 'units' header"))?
        .to_ascii_lowercase();
    let photon_units = if units.starts_with("photons/") || units.starts_with("photon") {
        true
    } else if units.starts_with("w/") || units.starts_with("watt") {
        false
    } else {
        return Err(Error::data(
            &display,
            format!("unsupported radiance units '{units}' (expected photons/s/m^2/sr/nm or W/m^2/sr/nm)"),
        ));
    };
    let (wavelength, zenith, mut values) = dense_angle_table(path, &raw)?;
    for (i, v) in values.iter().enumerate() {
        if *v < 0.0 {
            let ri = i / zenith.len();
            let ci = i % zenith.len();
            return Err(Error::data_at(
                &display,
                Some(ri + 2),
                Some(raw.columns[ci + 1].clone()),
                format!("negative radiance {v}"),
            ));
        }
    }
    if !photon_units {
        // photons = watts / (h c / lambda)
        let ncols = zenith.len();
        for (i, v) in values.iter_mut().enumerate() {
            let lam_m = wavelength[i / ncols] * 1e-9;
            *v *= lam_m / HC;
        }
    }
    SolarTable::new(wavelength, zenith, values).map_err(|e| Error::data(&display, e.to_string()))
}

/// Load a detector catalog. One efficiency column per detector, dark count
/// rates from the `dcr_cps` metadata entry.
pub fn load_detectors(path: &Path) -> Result<Vec<DetectorSpec>> {
    let display = path.display().to_string();
    let raw = read_raw(path)?;
    if let Some(kind) = raw.meta.get("kind") {
        if kind != "detectors" {
            return Err(Error::data(&display, format!("expected kind 'detectors', got '{kind}'")));
        }
    }
    let dcr_field = raw
        .meta
        .get("dcr_cps")
        .ok_or_else(|| Error::data(&display, "missing mandatory 'dcr_cps' header"))?;
    let mut dcr = BTreeMap::new();
    for part in dcr_field.split(',') {
        let (name, value) = part.split_once('=').ok_or_else(|| {
            Error::data(&display, format!("malformed dcr_cps entry '{part}' (want name=value)"))
        })?;
        let v: f64 = value.trim().parse().map_err(|_| {
            Error::data(&display, format!("dark count rate '{value}' is not a number"))
        })?;
        dcr.insert(name.trim().to_string(), v);
    }

    let mut catalog = Vec::new();
    for (ci, name) in raw.columns.iter().enumerate().skip(1) {
        let mut grid = Vec::new();
        let mut eff = Vec::new();
        for (ri, row) in raw.rows.iter().enumerate() {
            let Some(lam) = row[0] else { continue };
            if let Some(e) = row[ci] {
                if !(0.0..=1.0).contains(&e) {
                    return Err(Error::data_at(
                        &display,
                        Some(ri + 2),
                        Some(name.clone()),
                        format!("efficiency {e} outside [0, 1]"),
                    ));
                }
                grid.push(lam);
                eff.push(e);
            }
        }
        let dcr_cps = *dcr.get(name).ok_or_else(|| {
            Error::data(&display, format!("detector '{name}' has no dcr_cps entry"))
        })?;
        let det = DetectorSpec { name: name.clone(), wavelength_nm: grid, efficiency: eff, dcr_cps };
        det.validate().map_err(|e| Error::data(&display, e.to_string()))?;
        catalog.push(det);
    }
    if catalog.is_empty() {
        return Err(Error::data(&display, "no detector columns"));
    }
    Ok(catalog)
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

/// Which light source drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    IdealSps,
    Sps,
    Wcs,
    Tds,
}

impl SourceKind {
    pub fn all() -> [SourceKind; 4] {
        [SourceKind::IdealSps, SourceKind::Sps, SourceKind::Wcs, SourceKind::Tds]
    }

    pub fn label(&self) -> &'static str {
        match self {
            SourceKind::IdealSps => "ideal-sps",
            SourceKind::Sps => "sps",
            SourceKind::Wcs => "wcs",
            SourceKind::Tds => "tds",
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal-sps" => Ok(SourceKind::IdealSps),
            "sps" => Ok(SourceKind::Sps),
            "wcs" => Ok(SourceKind::Wcs),
            "tds" => Ok(SourceKind::Tds),
            other => Err(Error::Config(format!(
                "unknown source '{other}' (expected ideal-sps, sps, wcs or tds)"
            ))),
        }
    }
}

macro_rules! config_section {
    ($(#[$doc:meta])* $name:ident { $($(#[$fdoc:meta])* $field:ident : $ty:ty = $default:expr),+ $(,)? }) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $($(#[$fdoc])* pub $field: $ty),+
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $($field: $default),+ }
            }
        }
    };
}

config_section!(
    /// Orbit and pass geometry.
    GeometrySection {
        altitude_km: f64 = 500.0,
        min_elevation_deg: f64 = 10.0,
        time_step_s: f64 = 1.0,
        ground_track_offset_km: f64 = 0.0,
    }
);

config_section!(
    /// Optical link parameters.
    ChannelSection {
        beam_waist_m: f64 = 0.05,
        aperture_tx_m: f64 = 0.05,
        aperture_rx_m: f64 = 0.5,
        pointing_error_rad: f64 = 1e-6,
        photon_width_s: f64 = 3e-9,
        detection_window_s: f64 = 1e-9,
    }
);

config_section!(
    /// Background collection parameters.
    RadiometrySection {
        fov_sr: f64 = 1e-10,
        filter_bandwidth_nm: f64 = 0.5,
        sun_zenith_deg: f64 = 45.0,
        sun_azimuth_deg: f64 = 0.0,
    }
);

config_section!(
    /// Detection error model and post-processing efficiency.
    DetectionSection {
        intrinsic_error: f64 = 0.03,
        background_error: f64 = 0.5,
        error_correction_efficiency: f64 = 1.22,
        sifting_ratio: f64 = 0.5,
    }
);

config_section!(
    /// Protocol, security and source selection.
    ProtocolSection {
        rep_rate_hz: f64 = 1e8,
        eps_sec: f64 = 1e-9,
        eps_cor: f64 = 1e-15,
        source: SourceKind = SourceKind::Sps,
        wavelength_nm: f64 = 656.448,
        daylight: bool = true,
        /// Weak decoy intensity used by asymptotic two-decoy sweeps.
        decoy_nu1: f64 = 0.05,
    }
);

config_section!(
    /// Sweep grids and annual-estimate constants.
    MissionSection {
        /// Longitudinal circumference at the station latitude, m.
        l_lat_m: f64 = 4.008e7,
        altitude_min_km: f64 = 300.0,
        altitude_max_km: f64 = 2200.0,
        altitude_step_km: f64 = 50.0,
        offset_min_km: f64 = 0.0,
        offset_max_km: f64 = 1600.0,
        offset_step_km: f64 = 50.0,
        spectrum_min_nm: f64 = 400.0,
        spectrum_max_nm: f64 = 1700.0,
        spectrum_step_nm: f64 = 0.5,
    }
);

config_section!(
    /// Dataset locations, relative to the data directory.
    DataSection {
        dir: String = "data".to_string(),
        atmosphere: String = "atmosphere.csv".to_string(),
        solar: String = "solar.csv".to_string(),
        detectors: String = "detectors.csv".to_string(),
    }
);

/// Complete scenario configuration with every default overridable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: GeometrySection,
    pub channel: ChannelSection,
    pub radiometry: RadiometrySection,
    pub detection: DetectionSection,
    pub protocol: ProtocolSection,
    pub mission: MissionSection,
    pub data: DataSection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("geometry.altitude_km", self.geometry.altitude_km, 100.0, 50_000.0),
            ("geometry.min_elevation_deg", self.geometry.min_elevation_deg, 0.0, 90.0),
            ("geometry.time_step_s", self.geometry.time_step_s, 1e-3, 60.0),
            ("geometry.ground_track_offset_km", self.geometry.ground_track_offset_km, 0.0, 20_000.0),
            ("channel.beam_waist_m", self.channel.beam_waist_m, 1e-4, 10.0),
            ("channel.aperture_tx_m", self.channel.aperture_tx_m, 1e-4, 10.0),
            ("channel.aperture_rx_m", self.channel.aperture_rx_m, 1e-3, 50.0),
            ("channel.pointing_error_rad", self.channel.pointing_error_rad, 0.0, 1e-3),
            ("channel.photon_width_s", self.channel.photon_width_s, 1e-12, 1e-6),
            ("channel.detection_window_s", self.channel.detection_window_s, 1e-12, 1e-6),
            ("radiometry.fov_sr", self.radiometry.fov_sr, 1e-15, 1.0),
            ("radiometry.filter_bandwidth_nm", self.radiometry.filter_bandwidth_nm, 1e-3, 100.0),
            ("radiometry.sun_zenith_deg", self.radiometry.sun_zenith_deg, 0.0, 90.0),
            ("detection.intrinsic_error", self.detection.intrinsic_error, 0.0, 0.5),
            ("detection.background_error", self.detection.background_error, 0.0, 0.5),
            ("detection.error_correction_efficiency", self.detection.error_correction_efficiency, 1.0, 3.0),
            ("detection.sifting_ratio", self.detection.sifting_ratio, 0.0, 1.0),
            ("protocol.rep_rate_hz", self.protocol.rep_rate_hz, 1.0, 1e12),
            ("protocol.wavelength_nm", self.protocol.wavelength_nm, 100.0, 10_000.0),
            ("protocol.decoy_nu1", self.protocol.decoy_nu1, 1e-4, 1.0),
            ("mission.l_lat_m", self.mission.l_lat_m, 1.0, 1e9),
        ];
        for (name, v, lo, hi) in checks {
            if !(lo..=hi).contains(&v) || !v.is_finite() {
                return Err(Error::Config(format!("{name} = {v} outside [{lo}, {hi}]")));
            }
        }
        for (name, e) in [("protocol.eps_sec", self.protocol.eps_sec), ("protocol.eps_cor", self.protocol.eps_cor)]
        {
            if !(0.0 < e && e < 1.0) {
                return Err(Error::Config(format!("{name} = {e} outside (0, 1)")));
            }
        }
        if self.channel.beam_waist_m > self.channel.aperture_tx_m {
            return Err(Error::Config(
                "channel.beam_waist_m larger than channel.aperture_tx_m".into(),
            ));
        }
        for (name, lo, hi, step) in [
            ("mission.altitude", self.mission.altitude_min_km, self.mission.altitude_max_km, self.mission.altitude_step_km),
            ("mission.offset", self.mission.offset_min_km, self.mission.offset_max_km, self.mission.offset_step_km),
            ("mission.spectrum", self.mission.spectrum_min_nm, self.mission.spectrum_max_nm, self.mission.spectrum_step_nm),
        ] {
            if lo > hi || step <= 0.0 {
                return Err(Error::Config(format!("{name} grid is empty or has non-positive step")));
            }
        }
        Ok(())
    }

    /// Resolve a dataset file against the data directory, honoring the
    /// `SATKEY_DATA_DIR` override.
    pub fn data_path(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        if p.is_absolute() {
            return p.to_path_buf();
        }
        let root = std::env::var(DATA_DIR_ENV).unwrap_or_else(|_| self.data.dir.clone());
        Path::new(&root).join(file)
    }

    /// Detection statistics template (per-slot y0/eta still unset).
    pub fn detection_stats(&self) -> DetectionStats {
        DetectionStats {
            y0: 0.0,
            eta: 0.0,
            e_int: self.detection.intrinsic_error,
            e0: self.detection.background_error,
            f_ec: self.detection.error_correction_efficiency,
            q: self.detection.sifting_ratio,
        }
    }

    pub fn security(&self) -> SecurityParams {
        SecurityParams { eps_sec: self.protocol.eps_sec, eps_cor: self.protocol.eps_cor }
    }

    /// Optical link configuration at a given wavelength.
    pub fn optics_at(&self, lambda_nm: f64) -> OpticalLinkConfig {
        OpticalLinkConfig {
            w0_m: self.channel.beam_waist_m,
            aperture_tx_m: self.channel.aperture_tx_m,
            aperture_rx_m: self.channel.aperture_rx_m,
            theta_pt_rad: self.channel.pointing_error_rad,
            lambda_m: lambda_nm * 1e-9,
            tau_s: self.channel.photon_width_s,
            dt_gate_s: self.channel.detection_window_s,
        }
    }
}
