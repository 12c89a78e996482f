//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::complexity::{
    complexity_table, reference_dnn_profiles, reference_scenarios, write_complexity_csv, DnnProfile, Scenario,
};
use crate::datasets::{
    build_destination_dataset, build_relay_dataset, write_destination_csv, write_relay_csv, DestinationScenario,
};
use crate::error::{Error, Result};
use crate::harness::{
    build_pool, mode_name, reproduce, run_sweep, save_ber_csv, train_models, EngineOptions, Figure,
    ReproduceOptions, ScenarioConfig,
};
use crate::harness::figures::{default_output_dir, prepare_models};
use crate::modem::Constellation;

#[derive(Debug, Parser)]
#[command(name = "crisim", version, about = "Cooperative RIS link simulator with neural phase control and detection")]
struct Cli {
    /// Scenario (or complexity) configuration file, TOML.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the configured one.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory [default: $CRISIM_OUT or ./crisim-out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for Monte-Carlo trials and relay training.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write training datasets as CSV.
    GenData {
        #[arg(value_enum)]
        kind: DataKind,
        /// Number of samples.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Relay index (1-based) for relay data.
        #[arg(long, default_value_t = 1)]
        relay: usize,
        /// Destination data: combining mode.
        #[arg(long, value_enum, default_value_t = ModeArg::Branch)]
        mode: ModeArg,
        /// Destination data: use closed-form phases instead of relay networks.
        #[arg(long)]
        ideal_phases: bool,
    },
    /// Train and save the networks a scenario needs.
    Train,
    /// Simulate every scheme of a scenario over its SNR grid.
    Ber {
        /// Load trained networks from this directory instead of training.
        #[arg(long, value_name = "DIR")]
        models: Option<PathBuf>,
    },
    /// Multiplication counts of the detectors.
    Complexity,
    /// Print relay placements and path gains of a scenario.
    Geometry,
    /// Regenerate a figure from its canned scenario.
    Reproduce {
        /// fig5 .. fig10
        figure: String,
        /// Load trained networks from this directory instead of training.
        #[arg(long, value_name = "DIR")]
        models: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DataKind {
    Relay,
    Destination,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Branch,
    Mrc,
}

impl From<ModeArg> for crate::datasets::CombiningMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Branch => crate::datasets::CombiningMode::Branch,
            ModeArg::Mrc => crate::datasets::CombiningMode::Mrc,
        }
    }
}

/// Scenarios and network profiles of the complexity table.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexityConfig {
    #[serde(default = "reference_scenarios")]
    scenarios: Vec<Scenario>,
    #[serde(default = "default_profiles")]
    profiles: Vec<DnnProfile>,
}

fn default_profiles() -> Vec<DnnProfile> {
    reference_dnn_profiles(4)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors and usage text go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn scenario(cli: &Cli) -> Result<ScenarioConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("this command needs --config <PATH>".into()))?;
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

fn execute(cli: &Cli) -> Result<()> {
    let out = cli.out.clone().unwrap_or_else(default_output_dir);
    if cli.threads == 0 {
        return Err(Error::invalid("--threads must be at least 1"));
    }
    match &cli.command {
        Command::GenData {
            kind,
            samples,
            relay,
            mode,
            ideal_phases,
        } => {
            let cfg = scenario(cli)?;
            if *relay == 0 || *relay > cfg.relays.len() {
                return Err(Error::invalid(format!("--relay must lie in 1..={}", cfg.relays.len())));
            }
            let path = match kind {
                DataKind::Relay => {
                    let data = build_relay_dataset(*samples, relay - 1, cfg.seed)?;
                    let path = out.join(format!("relay_{relay}_data.csv"));
                    write_relay_csv(&data, create(&path)?)?;
                    path
                }
                DataKind::Destination => {
                    let combining = (*mode).into();
                    let phase_mode = if *ideal_phases {
                        crate::datasets::PhaseMode::Ideal
                    } else {
                        cfg.training.destination_phase_mode
                    };
                    let relay_nets = if phase_mode == crate::datasets::PhaseMode::Dnn {
                        let pool = build_pool(cli.threads)?;
                        let mut only_relays = cfg.clone();
                        only_relays.schemes = vec![crate::harness::Scheme::DnnrRs];
                        train_models(&only_relays, &pool)?.models.relay
                    } else {
                        Vec::new()
                    };
                    let sc = DestinationScenario {
                        m: cfg.m,
                        relays: cfg.relay_sites()?,
                        snr_db: cfg.snr_grid_db.clone(),
                        phase_mode,
                        combining,
                    };
                    let data = build_destination_dataset(*samples, &sc, &relay_nets, cfg.seed)?;
                    let path = out.join(format!("destination_{}_data.csv", mode_name(combining)));
                    write_destination_csv(&data, create(&path)?)?;
                    path
                }
            };
            println!("{}", path.display());
        }
        Command::Train => {
            let cfg = scenario(cli)?;
            let pool = build_pool(cli.threads)?;
            let report = train_models(&cfg, &pool)?;
            let dir = out.join("models");
            report.save(&dir)?;
            for (r, h) in report.relay_histories.iter().enumerate() {
                if let Some(v) = h.final_validation_metric() {
                    println!("relay {}: validation {} {v:.5}", r + 1, h.metric_name());
                }
            }
            for d in &report.destinations {
                println!(
                    "destination {}: accuracy {:.3}% at {} dB",
                    mode_name(d.mode),
                    100.0 * d.confusion.accuracy(),
                    d.confusion_snr_db
                );
            }
            println!("{}", dir.display());
        }
        Command::Ber { models } => {
            let cfg = scenario(cli)?;
            let pool = build_pool(cli.threads)?;
            let set = prepare_models(&cfg, models.as_deref(), &out.join("models"), &pool)?;
            let engine = EngineOptions {
                threads: cli.threads,
                ..EngineOptions::default()
            };
            let rows = run_sweep(&cfg, set.as_ref(), &engine, &pool)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let path = out.join(format!("{}_ber.csv", cfg.name));
            save_ber_csv(&rows, &path)?;
            println!("{}", path.display());
        }
        Command::Complexity => {
            let cc = match &cli.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    toml::from_str::<ComplexityConfig>(&text).map_err(|e| Error::Parse {
                        path: p.clone(),
                        message: e.to_string(),
                    })?
                }
                None => ComplexityConfig {
                    scenarios: reference_scenarios(),
                    profiles: default_profiles(),
                },
            };
            let rows = complexity_table(&cc.scenarios, &cc.profiles)?;
            let path = out.join("complexity.csv");
            write_complexity_csv(&rows, create(&path)?)?;
            let stdout = std::io::stdout();
            write_complexity_csv(&rows, stdout.lock())?;
        }
        Command::Geometry => {
            let cfg = scenario(cli)?;
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            let mut line = |s: String| writeln!(w, "{s}").map_err(|e| Error::io("<stdout>", e));
            line("relay,d_sr,theta_deg,d_rd,g_sr,g_rd,amplitude_gain,n_reflectors".into())?;
            for (i, (spec, site)) in cfg.relays.iter().zip(cfg.relay_sites()?).enumerate() {
                let g = site.geometry;
                line(format!(
                    "R{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
                    i + 1,
                    g.d_sr,
                    spec.theta_deg,
                    g.d_rd,
                    g.g_sr,
                    g.g_rd,
                    g.amplitude_gain(),
                    site.n_reflectors
                ))?;
            }
            Constellation::new(cfg.m)?;
        }
        Command::Reproduce { figure, models } => {
            let fig: Figure = figure.parse()?;
            let opts = ReproduceOptions {
                seed: cli.seed,
                threads: cli.threads,
                out,
                models: models.clone(),
            };
            let path = reproduce(fig, &opts)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_are_nonzero() {
        assert_eq!(run(["crisim"]), 2);
        assert_eq!(run(["crisim", "frobnicate"]), 2);
        assert_eq!(run(["crisim", "complexity", "--bogus"]), 2);
        assert_eq!(run(["crisim", "--help"]), 0);
    }

    #[test]
    fn missing_config_fails() {
        assert_eq!(run(["crisim", "ber", "--config", "/no/such/file.toml"]), 1);
        assert_eq!(run(["crisim", "geometry"]), 1);
        assert_eq!(run(["crisim", "reproduce", "fig42"]), 1);
    }
}
