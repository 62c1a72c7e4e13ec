//! satkey: satellite-to-ground QKD link studies from the command line.
//!
//! Every command loads a scenario (TOML config plus CSV datasets), runs one
//! study and writes `<command>.csv` and `manifest.json` into the output
//! directory. CSV bodies are deterministic: identical invocations produce
//! byte-identical files; the manifest carries the effective configuration,
//! dataset checksums and wall time for provenance.
//!
//! Exit codes: 0 success, 2 configuration or flag error, 3 dataset error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use satkey_core::data_io::{ScenarioConfig, SourceKind};
use satkey_core::error::Error;
use satkey_core::keyrate_finite::SourceProtocol;
use satkey_core::mission::{
    annual_estimate, asymptotic_slot_fractions, asymptotic_tds_intensities, grid,
    skl_vs_altitude, skl_vs_offset, spectrum_sweep, Scenario, SweepResult,
};
use satkey_core::optimizer::optimize_protocol;

#[derive(Parser)]
#[command(
    name = "satkey",
    version,
    about = "Satellite-to-ground free-space QKD link and key-volume studies",
    propagate_version = true
)]
struct Cli {
    /// Scenario configuration file (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Dataset directory (overrides config and SATKEY_DATA_DIR).
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,

    /// Output directory for CSV results and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy, Default)]
struct Conditions {
    /// Daylight only.
    #[arg(long, conflicts_with = "night")]
    day: bool,
    /// Night only.
    #[arg(long, conflicts_with = "day")]
    night: bool,
}

impl Conditions {
    fn wants_day(&self) -> bool {
        self.day || !self.night
    }

    fn wants_night(&self) -> bool {
        self.night || !self.day
    }
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic secret bits per signal across the spectrum, per source.
    Spectrum {
        /// Source selection: all, ideal-sps, sps, wcs or tds.
        #[arg(long, default_value = "all")]
        source: String,
        #[command(flatten)]
        conditions: Conditions,
        /// Sweep start in nm (default from config).
        #[arg(long)]
        lambda_min: Option<f64>,
        /// Sweep end in nm.
        #[arg(long)]
        lambda_max: Option<f64>,
        /// Sweep step in nm.
        #[arg(long)]
        lambda_step: Option<f64>,
    },

    /// Per-slot link budget and asymptotic fractions over one pass.
    Pass {
        /// Source for the per-slot secret fractions.
        #[arg(long)]
        source: Option<String>,
        /// Signal wavelength in nm.
        #[arg(long)]
        wavelength: Option<f64>,
        /// Satellite altitude in km.
        #[arg(long)]
        altitude: Option<f64>,
        /// Ground-track offset in km.
        #[arg(long)]
        offset: Option<f64>,
    },

    /// Optimized finite key length versus satellite altitude (zenith pass).
    Altitude {
        /// Finite-key source: ideal-sps, sps or tds.
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        wavelength: Option<f64>,
        #[command(flatten)]
        conditions: Conditions,
        #[arg(long)]
        h_min: Option<f64>,
        #[arg(long)]
        h_max: Option<f64>,
        #[arg(long)]
        h_step: Option<f64>,
    },

    /// Optimized finite key length versus ground-track offset.
    Offset {
        /// Finite-key source: ideal-sps, sps or tds.
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        wavelength: Option<f64>,
        #[command(flatten)]
        conditions: Conditions,
        /// Offset sweep start in km.
        #[arg(long)]
        d_min: Option<f64>,
        /// Offset sweep end in km.
        #[arg(long)]
        d_max: Option<f64>,
        /// Offset sweep step in km.
        #[arg(long)]
        d_step: Option<f64>,
    },

    /// Annual secret key volume per source and wavelength.
    Annual {
        /// Restrict to one finite-key source (default: sps and tds).
        #[arg(long)]
        source: Option<String>,
        /// Comma-separated wavelengths in nm
        /// (default: 656.448, 854.445, 1550.027).
        #[arg(long)]
        wavelengths: Option<String>,
    },

    /// Optimize protocol parameters for a single pass geometry.
    Optimize {
        /// Finite-key source: ideal-sps, sps or tds.
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        wavelength: Option<f64>,
        #[arg(long)]
        altitude: Option<f64>,
        /// Ground-track offset in km.
        #[arg(long)]
        offset: Option<f64>,
        #[command(flatten)]
        conditions: Conditions,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parameter { .. } => 2,
        Error::Data { .. } | Error::Io { .. } | Error::Csv { .. } => 3,
        Error::Range { .. } | Error::Domain { .. } => 3,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let started = Instant::now();
    if let Some(n) = cli.threads {
        // ignore failure when a pool already exists (e.g. repeated in-process runs)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Some(dir) = &cli.data_dir {
        std::env::set_var(satkey_core::data_io::DATA_DIR_ENV, dir);
    }

    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    apply_overrides(&mut config, &cli.command)?;
    let scenario = Scenario::load(config)?;

    let (name, table, extra) = match &cli.command {
        Command::Spectrum { source, conditions, .. } => {
            cmd_spectrum(&scenario, source, *conditions)?
        }
        Command::Pass { source, .. } => cmd_pass(&scenario, source.as_deref())?,
        Command::Altitude { source, conditions, h_min, h_max, h_step, .. } => {
            let m = &scenario.config.mission;
            let hs = grid(
                h_min.unwrap_or(m.altitude_min_km),
                h_max.unwrap_or(m.altitude_max_km),
                h_step.unwrap_or(m.altitude_step_km),
            );
            cmd_sweep("altitude", &scenario, source.as_deref(), *conditions, &hs, false)?
        }
        Command::Offset { source, conditions, d_min, d_max, d_step, .. } => {
            let m = &scenario.config.mission;
            let ds: Vec<f64> = grid(
                d_min.unwrap_or(m.offset_min_km) * 1e3,
                d_max.unwrap_or(m.offset_max_km) * 1e3,
                d_step.unwrap_or(m.offset_step_km) * 1e3,
            );
            cmd_sweep("offset", &scenario, source.as_deref(), *conditions, &ds, true)?
        }
        Command::Annual { source, wavelengths } => {
            cmd_annual(&scenario, source.as_deref(), wavelengths.as_deref())?
        }
        Command::Optimize { source, conditions, .. } => {
            cmd_optimize(&scenario, source.as_deref(), *conditions)?
        }
    };

    write_outputs(cli, &scenario.config, name, &table, extra, started)
}

/// Push command-line geometry/protocol overrides into the configuration.
fn apply_overrides(config: &mut ScenarioConfig, command: &Command) -> Result<(), Error> {
    let (wavelength, altitude, offset) = match command {
        Command::Pass { wavelength, altitude, offset, .. } => (*wavelength, *altitude, *offset),
        Command::Optimize { wavelength, altitude, offset, .. } => {
            (*wavelength, *altitude, *offset)
        }
        Command::Altitude { wavelength, .. } | Command::Offset { wavelength, .. } => {
            (*wavelength, None, None)
        }
        Command::Spectrum { lambda_min, lambda_max, lambda_step, .. } => {
            if let Some(v) = lambda_min {
                config.mission.spectrum_min_nm = *v;
            }
            if let Some(v) = lambda_max {
                config.mission.spectrum_max_nm = *v;
            }
            if let Some(v) = lambda_step {
                config.mission.spectrum_step_nm = *v;
            }
            (None, None, None)
        }
        Command::Annual { .. } => (None, None, None),
    };
    if let Some(v) = wavelength {
        config.protocol.wavelength_nm = v;
    }
    if let Some(v) = altitude {
        config.geometry.altitude_km = v;
    }
    if let Some(v) = offset {
        config.geometry.ground_track_offset_km = v;
    }
    config.validate()
}

/// A rectangular result table: header plus rows of numbers, with an
/// optional leading text column (used for source labels).
struct Table {
    header: Vec<String>,
    labels: Option<Vec<String>>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn numeric(header: Vec<String>, rows: Vec<Vec<f64>>) -> Table {
        Table { header, labels: None, rows }
    }

    fn from_sweep(sweep: &SweepResult, keep: &dyn Fn(&str) -> bool) -> Table {
        let mut header = vec![sweep.axis_name.clone()];
        let cols: Vec<_> = sweep.columns.iter().filter(|c| keep(&c.label)).collect();
        header.extend(cols.iter().map(|c| c.label.clone()));
        let rows = sweep
            .axis
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let mut row = vec![x];
                row.extend(cols.iter().map(|c| c.values[i]));
                row
            })
            .collect();
        Table::numeric(header, rows)
    }
}

/// Extra manifest fields produced by some commands.
#[derive(Default, Serialize)]
struct Extra {
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped_wavelengths: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    descriptor: Option<String>,
}

fn parse_sources(spec: Option<&str>, finite: bool) -> Result<Vec<SourceKind>, Error> {
    let kinds = match spec {
        None => {
            if finite {
                vec![SourceKind::Sps, SourceKind::Tds]
            } else {
                SourceKind::all().to_vec()
            }
        }
        Some("all") if !finite => SourceKind::all().to_vec(),
        Some(name) => vec![name.parse::<SourceKind>()?],
    };
    if finite {
        if let Some(k) = kinds.iter().find(|k| matches!(k, SourceKind::Wcs)) {
            return Err(Error::Config(format!(
                "source '{}' has no finite-key protocol; plain weak coherent pulses are \
                 driven through the two-decoy protocol (use --source tds)",
                k.label()
            )));
        }
    }
    Ok(kinds)
}

fn cmd_spectrum(
    scenario: &Scenario,
    source: &str,
    conditions: Conditions,
) -> Result<(&'static str, Table, Extra), Error> {
    let kinds = parse_sources(Some(source), false)?;
    let m = &scenario.config.mission;
    let mut lams = grid(m.spectrum_min_nm, m.spectrum_max_nm, m.spectrum_step_nm);
    // make sure the bundled narrow-line wavelengths are sampled exactly
    for anchor in [486.134, 589.0, 656.448, 854.445, 1550.027] {
        if anchor > m.spectrum_min_nm && anchor < m.spectrum_max_nm {
            lams.push(anchor);
        }
    }
    lams.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lams.dedup();

    let sweep = spectrum_sweep(scenario, &kinds, &lams)?;
    let keep = move |label: &str| {
        (conditions.wants_day() && label.ends_with("-day"))
            || (conditions.wants_night() && label.ends_with("-night"))
    };
    let table = Table::from_sweep(&sweep, &keep);
    let extra = Extra {
        skipped_wavelengths: Some(sweep.skipped.clone()),
        descriptor: Some(sweep.descriptor.clone()),
    };
    Ok(("spectrum", table, extra))
}

fn cmd_pass(
    scenario: &Scenario,
    source: Option<&str>,
) -> Result<(&'static str, Table, Extra), Error> {
    let kind = match source {
        Some(s) => s.parse::<SourceKind>()?,
        None => scenario.config.protocol.source,
    };
    let lambda = scenario.config.protocol.wavelength_nm;
    let pass = scenario.pass(
        scenario.config.geometry.altitude_km,
        scenario.config.geometry.ground_track_offset_km,
    );
    if pass.is_empty() {
        return Err(Error::Config(
            "pass never clears the minimum elevation at this offset".into(),
        ));
    }
    let day = scenario.budgets(lambda, &pass, true)?;
    let night = scenario.budgets(lambda, &pass, false)?;
    let (tds_mu, tds_nu1) = asymptotic_tds_intensities(scenario);
    let frac_day = asymptotic_slot_fractions(scenario, kind, &day, tds_mu, tds_nu1);
    let frac_night = asymptotic_slot_fractions(scenario, kind, &night, tds_mu, tds_nu1);

    let header = [
        "t_s",
        "zenith_deg",
        "slant_km",
        "elevation_deg",
        "eta_total",
        "loss_db",
        "p_bg_day",
        "p_bg_night",
        "fraction_day",
        "fraction_night",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    let rows = pass
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                s.t,
                s.theta_zen.to_degrees(),
                s.slant_km,
                s.elevation.to_degrees(),
                day[i].eta_total,
                day[i].loss_db(),
                day[i].p_bg,
                night[i].p_bg,
                frac_day[i],
                frac_night[i],
            ]
        })
        .collect();
    let extra = Extra {
        descriptor: Some(format!("single pass, {} at {lambda} nm", kind.label())),
        ..Default::default()
    };
    Ok(("pass", Table::numeric(header, rows), extra))
}

fn cmd_sweep(
    name: &'static str,
    scenario: &Scenario,
    source: Option<&str>,
    conditions: Conditions,
    axis: &[f64],
    offset_axis: bool,
) -> Result<(&'static str, Table, Extra), Error> {
    let kinds = parse_sources(source, true)?;
    let mut merged: Option<Table> = None;
    let mut descriptor = Vec::new();
    for kind in kinds {
        let sweep = if offset_axis {
            skl_vs_offset(scenario, kind, axis)?
        } else {
            skl_vs_altitude(scenario, kind, axis)?
        };
        descriptor.push(sweep.descriptor.clone());
        let keep = |label: &str| {
            (conditions.wants_day() && label == "day")
                || (conditions.wants_night() && label == "night")
        };
        let table = Table::from_sweep(&sweep, &keep);
        merged = Some(match merged {
            None => Table::numeric(
                std::iter::once(table.header[0].clone())
                    .chain(
                        table.header[1..]
                            .iter()
                            .map(|h| format!("{}-{h}", kind.label())),
                    )
                    .collect(),
                table.rows,
            ),
            Some(mut acc) => {
                acc.header
                    .extend(table.header[1..].iter().map(|h| format!("{}-{h}", kind.label())));
                for (row, new) in acc.rows.iter_mut().zip(table.rows) {
                    row.extend_from_slice(&new[1..]);
                }
                acc
            }
        });
    }
    let extra = Extra { descriptor: Some(descriptor.join("; ")), ..Default::default() };
    Ok((name, merged.expect("at least one source"), extra))
}

fn cmd_annual(
    scenario: &Scenario,
    source: Option<&str>,
    wavelengths: Option<&str>,
) -> Result<(&'static str, Table, Extra), Error> {
    let kinds = parse_sources(source, true)?;
    let lams: Vec<f64> = match wavelengths {
        None => vec![656.448, 854.445, 1550.027],
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad wavelength '{s}'")))
            })
            .collect::<Result<_, _>>()?,
    };
    let header = [
        "source",
        "wavelength_nm",
        "loss_db",
        "skl_int_day_bm",
        "skl_int_night_bm",
        "annual_day_gb",
        "annual_night_gb",
        "annual_total_gb",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for &kind in &kinds {
        for &lam in &lams {
            let row = annual_estimate(scenario, kind, lam)?;
            labels.push(kind.label().to_string());
            rows.push(vec![
                row.wavelength_nm,
                row.loss_db,
                row.estimate.skl_int_day_bm,
                row.estimate.skl_int_night_bm,
                row.estimate.annual_day_bits / 1e9,
                row.estimate.annual_night_bits / 1e9,
                row.estimate.annual_total_bits / 1e9,
            ]);
        }
    }
    let descriptor = format!(
        "annual key volume, h = {} km, offsets {}..{} km",
        scenario.config.geometry.altitude_km,
        scenario.config.mission.offset_min_km,
        scenario.config.mission.offset_max_km
    );
    let extra = Extra { descriptor: Some(descriptor), ..Default::default() };
    Ok(("annual", Table { header, labels: Some(labels), rows }, extra))
}

fn cmd_optimize(
    scenario: &Scenario,
    source: Option<&str>,
    conditions: Conditions,
) -> Result<(&'static str, Table, Extra), Error> {
    let kinds = parse_sources(source, true)?;
    let kind = kinds[0];
    let lambda = scenario.config.protocol.wavelength_nm;
    let pass = scenario.pass(
        scenario.config.geometry.altitude_km,
        scenario.config.geometry.ground_track_offset_km,
    );
    if pass.is_empty() {
        return Err(Error::Config(
            "pass never clears the minimum elevation at this offset".into(),
        ));
    }
    let sec = scenario.config.security();
    let stats = scenario.config.detection_stats();
    let rep = scenario.config.protocol.rep_rate_hz;
    let source_model = match kind {
        SourceKind::IdealSps => satkey_core::sources::SourceModel::IdealSps,
        SourceKind::Sps => satkey_core::sources::SourceModel::realistic_sps_default(),
        SourceKind::Tds => satkey_core::sources::SourceModel::Tds {
            mu: 0.5,
            nu1: 0.1,
            p_mu: 0.6,
            p_nu1: 0.25,
        },
        SourceKind::Wcs => unreachable!("rejected by parse_sources"),
    };

    let header = [
        "daylight",
        "skl_bits",
        "p_x",
        "mu",
        "nu1",
        "p_mu",
        "p_nu1",
        "eta_att",
        "window_lo_s",
        "window_hi_s",
        "evaluations",
        "converged",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    let mut rows = Vec::new();
    for daylight in [true, false] {
        if daylight && !conditions.wants_day() || !daylight && !conditions.wants_night() {
            continue;
        }
        let budgets = scenario.budgets(lambda, &pass, daylight)?;
        let opt = optimize_protocol(&pass, &budgets, &source_model, &sec, rep, &stats)?;
        let (mu, nu1, p_mu, p_nu1, eta_att) = match opt.best_params.source {
            SourceProtocol::Tds { mu, nu1, p_mu, p_nu1 } => (mu, nu1, p_mu, p_nu1, f64::NAN),
            SourceProtocol::Sps { eta_att } => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, eta_att),
        };
        rows.push(vec![
            daylight as u8 as f64,
            opt.skl,
            opt.best_params.p_x,
            mu,
            nu1,
            p_mu,
            p_nu1,
            eta_att,
            opt.best_params.window.0,
            opt.best_params.window.1,
            opt.evaluations as f64,
            opt.converged as u8 as f64,
        ]);
    }
    let extra = Extra {
        descriptor: Some(format!(
            "protocol optimization, {} at {lambda} nm, h = {} km, d = {} km",
            kind.label(),
            scenario.config.geometry.altitude_km,
            scenario.config.geometry.ground_track_offset_km
        )),
        ..Default::default()
    };
    Ok(("optimize", Table::numeric(header, rows), extra))
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunManifest<'a> {
    command: String,
    version: &'static str,
    wall_time_s: f64,
    outputs: Vec<String>,
    datasets: BTreeMap<String, String>,
    #[serde(flatten)]
    extra: &'a Extra,
    config: &'a ScenarioConfig,
}

fn write_outputs(
    cli: &Cli,
    config: &ScenarioConfig,
    name: &str,
    table: &Table,
    extra: Extra,
    started: Instant,
) -> Result<(), Error> {
    let mut body = String::with_capacity(64 * table.rows.len());
    body.push_str(&table.header.join(","));
    body.push('\n');
    for (i, row) in table.rows.iter().enumerate() {
        let mut first = true;
        if let Some(labels) = &table.labels {
            body.push_str(&labels[i]);
            first = false;
        }
        for v in row {
            if !first {
                body.push(',');
            }
            body.push_str(&format!("{v:e}"));
            first = false;
        }
        body.push('\n');
    }

    let mut datasets = BTreeMap::new();
    for file in [&config.data.atmosphere, &config.data.solar, &config.data.detectors] {
        let path = config.data_path(file);
        datasets.insert(file.clone(), sha256_file(&path)?);
    }

    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Error::Io { path: cli.out.display().to_string(), source: e })?;
    let csv_path = cli.out.join(format!("{name}.csv"));
    let manifest_path = cli.out.join("manifest.json");

    let cleanup = |written: &[&Path]| {
        for p in written {
            let _ = std::fs::remove_file(p);
        }
    };

    if let Err(e) = std::fs::write(&csv_path, &body) {
        return Err(Error::Io { path: csv_path.display().to_string(), source: e });
    }
    let manifest = RunManifest {
        command: std::env::args().collect::<Vec<_>>().join(" "),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: vec![csv_path.display().to_string()],
        datasets,
        extra: &extra,
        config,
    };
    let json = match serde_json::to_string_pretty(&manifest) {
        Ok(j) => j,
        Err(e) => {
            cleanup(&[&csv_path]);
            return Err(Error::Config(format!("manifest serialization failed: {e}")));
        }
    };
    if let Err(e) = std::fs::write(&manifest_path, json) {
        cleanup(&[&csv_path]);
        return Err(Error::Io { path: manifest_path.display().to_string(), source: e });
    }
    println!(
        "{name}: {} rows -> {} (manifest: {})",
        table.rows.len(),
        csv_path.display(),
        manifest_path.display()
    );
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String, Error> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::with_capacity(64), |mut acc, b| {
        acc.push_str(&format!("{b:02x}"));
        acc
    }))
}
