//! Canned scenarios and drivers that regenerate each figure as CSV.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::engine::{build_pool, run_sweep, save_ber_csv, simulate, BerRow, EngineOptions, SimulationSetup};
use super::models::{train_models, ModelSet};
use crate::complexity::{complexity_table, reference_dnn_profiles, reference_scenarios, write_complexity_csv};
use crate::error::{Error, Result};
use crate::geometry::RelaySite;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "CRISIM_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "crisim-out";

/// The output directory from [`OUTPUT_DIR_ENV`], or [`DEFAULT_OUTPUT_DIR`].
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fig5,
        Figure::Fig6,
        Figure::Fig7,
        Figure::Fig8,
        Figure::Fig9,
        Figure::Fig10,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
            Figure::Fig10 => "fig10",
        }
    }

    /// The canned scenario(s) behind a BER figure; empty for the complexity table.
    pub fn configs(self) -> Result<Vec<ScenarioConfig>> {
        let texts: &[&str] = match self {
            Figure::Fig5 => &[],
            Figure::Fig6 => &[include_str!("../../configs/fig6.toml")],
            Figure::Fig7 => &[include_str!("../../configs/fig7.toml")],
            Figure::Fig8 => &[include_str!("../../configs/fig8.toml")],
            Figure::Fig9 => &[
                include_str!("../../configs/fig9_m4.toml"),
                include_str!("../../configs/fig9_m8.toml"),
            ],
            Figure::Fig10 => &[include_str!("../../configs/fig10.toml")],
        };
        texts.iter().map(|t| ScenarioConfig::from_toml(t)).collect()
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let key = lower.strip_prefix("fig").unwrap_or(&lower);
        Figure::ALL
            .into_iter()
            .find(|f| &f.name()[3..] == key)
            .ok_or_else(|| Error::Config(format!("unknown figure '{s}'; expected fig5 to fig10")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceOptions {
    /// Replaces the canned seed when set.
    pub seed: Option<u64>,
    pub threads: usize,
    pub out: PathBuf,
    /// Load trained networks from here instead of training them.
    pub models: Option<PathBuf>,
}

/// Loads networks from `models_dir` when given, otherwise trains whatever the
/// scenario needs and saves models and training reports to `save_dir`.
pub fn prepare_models(
    cfg: &ScenarioConfig,
    models_dir: Option<&Path>,
    save_dir: &Path,
    pool: &rayon::ThreadPool,
) -> Result<Option<ModelSet>> {
    let needs_destination = cfg.schemes.iter().any(|s| s.destination_model().is_some());
    if !cfg.needs_relay_models() && !needs_destination {
        return Ok(None);
    }
    if let Some(dir) = models_dir {
        return ModelSet::load(dir, cfg.relays.len()).map(Some);
    }
    let report = train_models(cfg, pool)?;
    report.save(save_dir)?;
    Ok(Some(report.models))
}

/// One point of the relay-position sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRow {
    pub c: f64,
    pub d_sr: f64,
    pub row: BerRow,
}

pub const POSITION_CSV_HEADER: [&str; 9] = [
    "c",
    "d_sr",
    "snr_db",
    "scheme",
    "relay",
    "ber",
    "bits_simulated",
    "bit_errors",
    "censored",
];

/// BER of the single relay of `cfg` moved to every `d_sr` for every path-loss
/// exponent. All points reuse the seed of `cfg`, so they share channel and
/// noise draws.
pub fn position_sweep(
    cfg: &ScenarioConfig,
    d_values: &[f64],
    c_values: &[f64],
    models: Option<&ModelSet>,
    options: &EngineOptions,
    pool: &rayon::ThreadPool,
) -> Result<Vec<PositionRow>> {
    if cfg.relays.len() != 1 {
        return Err(Error::Config("the position sweep needs exactly one relay".into()));
    }
    let spec = cfg.relays[0];
    let mut out = Vec::new();
    for &c in c_values {
        for &d in d_values {
            let site = RelaySite::new(d, spec.theta_deg.to_radians(), c, spec.n_reflectors)?;
            let setup = SimulationSetup {
                relays: vec![site],
                ..SimulationSetup::from_config(cfg)?
            };
            for row in simulate(&setup, &cfg.schemes, &cfg.snr_grid_db, models, options, pool)? {
                out.push(PositionRow { c, d_sr: d, row });
            }
        }
    }
    Ok(out)
}

pub fn write_position_csv<W: Write>(rows: &[PositionRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(POSITION_CSV_HEADER)?;
    for p in rows {
        let r = &p.row;
        out.write_record([
            p.c.to_string(),
            p.d_sr.to_string(),
            r.snr_db.to_string(),
            r.scheme.to_string(),
            r.relay.clone(),
            r.ber.to_string(),
            r.bits_simulated.to_string(),
            r.bit_errors.to_string(),
            r.censored.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<positions>", e))
}

/// Relay positions and path-loss exponents of the position sweep.
pub const POSITION_D_SR: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const POSITION_C: [f64; 2] = [3.0, 4.0];

/// Regenerates one figure under `opts.out` and returns the main CSV path.
///
/// BER figures also leave their trained networks, training histories and
/// confusion matrices in `<out>/<fig>_models`.
pub fn reproduce(fig: Figure, opts: &ReproduceOptions) -> Result<PathBuf> {
    std::fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let csv_path = opts.out.join(format!("{}.csv", fig.name()));
    if fig == Figure::Fig5 {
        let rows = complexity_table(&reference_scenarios(), &reference_dnn_profiles(4))?;
        let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        write_complexity_csv(&rows, std::io::BufWriter::new(f))?;
        return Ok(csv_path);
    }
    let pool = build_pool(opts.threads)?;
    let engine = EngineOptions {
        threads: opts.threads,
        ..EngineOptions::default()
    };
    let mut configs = fig.configs()?;
    if let Some(seed) = opts.seed {
        for c in &mut configs {
            c.seed = seed;
        }
    }
    let model_root = opts.out.join(format!("{}_models", fig.name()));
    let multi = configs.len() > 1;
    let mut rows = Vec::new();
    let mut positions = Vec::new();
    for cfg in &configs {
        let sub = |root: &Path| if multi { root.join(&cfg.name) } else { root.to_path_buf() };
        let models = prepare_models(cfg, opts.models.as_deref().map(sub).as_deref(), &sub(&model_root), &pool)?;
        if fig == Figure::Fig10 {
            positions.extend(position_sweep(cfg, &POSITION_D_SR, &POSITION_C, models.as_ref(), &engine, &pool)?);
        } else {
            rows.extend(run_sweep(cfg, models.as_ref(), &engine, &pool)?);
        }
    }
    if fig == Figure::Fig10 {
        let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        write_position_csv(&positions, std::io::BufWriter::new(f))?;
    } else {
        save_ber_csv(&rows, &csv_path)?;
    }
    Ok(csv_path)
}
