//! Monte-Carlo bit-error-rate engine.
//!
//! Trials are grouped in fixed-size blocks. Each block draws its symbols,
//! channels and unit-power noise from streams keyed by the block index, so a
//! block's outcome never depends on which worker ran it. All requested
//! (scheme, SNR) cells are evaluated on the same trials: channels and noise
//! are shared across cells and only the noise scaling changes with SNR.
//! Blocks run in rounds of fixed size; a cell stops accumulating once it has
//! enough bit errors or reaches the bit cap, checked between rounds.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::models::ModelSet;
use super::scheme::{DetectorMode, Scheme};
use crate::channel::{complex_normal, sample_channel, ChannelRealization, Purpose, RngStream};
use crate::datasets::{relay_dnn_phases, CombiningMode, PhaseMode};
use crate::detection::{nearest_symbol, select_best_relay, Combining};
use crate::error::{Error, Result};
use crate::geometry::RelaySite;
use crate::modem::{bit_errors, Constellation};
use crate::neural::DenseNetwork;
use crate::rislink::{effective_gain, noise_power, optimal_phases};

/// Everything the engine needs besides the trained networks.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSetup {
    pub m: usize,
    pub relays: Vec<RelaySite>,
    pub seed: u64,
    pub min_bit_errors: u64,
    pub max_bits: u64,
}

/// Scheduling knobs. Results depend on `block_trials` and
/// `blocks_per_round` but never on `threads`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    pub threads: usize,
    pub block_trials: usize,
    pub blocks_per_round: usize,
}

impl SimulationSetup {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        Ok(SimulationSetup {
            m: cfg.m,
            relays: cfg.relay_sites()?,
            seed: cfg.seed,
            min_bit_errors: cfg.min_bit_errors,
            max_bits: cfg.max_bits,
        })
    }
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            threads: 1,
            block_trials: 256,
            blocks_per_round: 16,
        }
    }
}

/// One point of a BER curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRow {
    pub m: usize,
    pub snr_db: f64,
    pub scheme: Scheme,
    /// `R<k>` for the selected relay of a relay-selection scheme, else `combined`.
    pub relay: String,
    pub ber: f64,
    pub bits_simulated: u64,
    pub bit_errors: u64,
    /// The point hit the bit cap before collecting the requested errors.
    pub censored: bool,
}

pub fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

struct Cell {
    scheme: Scheme,
    snr_db: f64,
    sigma: f64,
    /// Per relay for relay selection, a single entry otherwise.
    errors: Vec<u64>,
    bits: u64,
    active: bool,
}

impl Cell {
    fn units(&self) -> usize {
        self.errors.len()
    }
}

/// Per-trial quantities shared by every cell of a block.
struct BlockDraws {
    symbols: Vec<usize>,
    /// `[relay][trial]`
    gain_ideal: Vec<Vec<Complex64>>,
    gain_dnn: Vec<Vec<Complex64>>,
    noise: Vec<Vec<Complex64>>,
}

struct Context<'a> {
    setup: &'a SimulationSetup,
    constellation: Constellation,
    models: Option<&'a ModelSet>,
    block_trials: usize,
}

impl Context<'_> {
    fn draws(&self, block: u64, need_ideal: bool, need_dnn: bool) -> Result<BlockDraws> {
        let seed = self.setup.seed;
        let t = self.block_trials;
        let mut srng = RngStream::derive(seed, Purpose::Symbol, &[block]).rng();
        let symbols = (0..t).map(|_| srng.random_range(0..self.setup.m)).collect();
        let l = self.setup.relays.len();
        let mut gain_ideal = vec![Vec::new(); l];
        let mut gain_dnn = vec![Vec::new(); l];
        let mut noise = Vec::with_capacity(l);
        for (r, site) in self.setup.relays.iter().enumerate() {
            let mut crng = RngStream::derive(seed, Purpose::Channel, &[block, r as u64]).rng();
            let chans: Vec<ChannelRealization> = (0..t)
                .map(|_| sample_channel(site.n_reflectors, r, &mut crng))
                .collect::<Result<_>>()?;
            if need_ideal {
                gain_ideal[r] = chans
                    .iter()
                    .map(|c| effective_gain(c, &optimal_phases(c), &site.geometry))
                    .collect::<Result<_>>()?;
            }
            if need_dnn {
                let net = &self.models.expect("checked before the run").relay[r];
                let refs: Vec<&ChannelRealization> = chans.iter().collect();
                let phases = relay_dnn_phases(net, &refs)?;
                gain_dnn[r] = chans
                    .iter()
                    .zip(&phases)
                    .map(|(c, p)| effective_gain(c, p, &site.geometry))
                    .collect::<Result<_>>()?;
            }
            let mut nrng = RngStream::derive(seed, Purpose::Noise, &[block, r as u64]).rng();
            noise.push((0..t).map(|_| complex_normal(&mut nrng)).collect());
        }
        Ok(BlockDraws {
            symbols,
            gain_ideal,
            gain_dnn,
            noise,
        })
    }

    fn destination(&self, mode: CombiningMode) -> &DenseNetwork {
        self.models
            .and_then(|m| m.destination(mode))
            .expect("checked before the run")
    }

    /// Bit errors per unit of `cell` over one block.
    fn evaluate(&self, cell: &Cell, d: &BlockDraws) -> Result<Vec<u64>> {
        let gains = match cell.scheme.phase_mode() {
            PhaseMode::Ideal => &d.gain_ideal,
            PhaseMode::Dnn => &d.gain_dnn,
        };
        let pts = self.constellation.points();
        let l = gains.len();
        let t = d.symbols.len();
        let y = |r: usize, i: usize| gains[r][i] * pts[d.symbols[i]] + d.noise[r][i] * cell.sigma;
        let mut errors = vec![0u64; cell.units()];
        match (cell.scheme.combining(), cell.scheme.detector_mode()) {
            (Combining::RelaySelection, DetectorMode::Ml) => {
                for r in 0..l {
                    for i in 0..t {
                        let v = nearest_symbol(y(r, i), gains[r][i], &self.constellation);
                        errors[r] += bit_errors(d.symbols[i], v) as u64;
                    }
                }
            }
            (Combining::MlVector, _) => {
                for i in 0..t {
                    let ys: Vec<Complex64> = (0..l).map(|r| y(r, i)).collect();
                    let mut best = 0;
                    let mut best_metric = f64::INFINITY;
                    for (v, p) in pts.iter().enumerate() {
                        let metric: f64 = (0..l).map(|r| (ys[r] - gains[r][i] * p).norm_sqr()).sum();
                        if metric < best_metric {
                            best_metric = metric;
                            best = v;
                        }
                    }
                    errors[0] += bit_errors(d.symbols[i], best) as u64;
                }
            }
            (Combining::Mrc, DetectorMode::Ml) => {
                for i in 0..t {
                    let (ymrc, coef) = mrc(l, i, gains, &y);
                    let v = nearest_symbol(ymrc, coef, &self.constellation);
                    errors[0] += bit_errors(d.symbols[i], v) as u64;
                }
            }
            (Combining::RelaySelection, DetectorMode::Dnn) => {
                let net = self.destination(CombiningMode::Branch);
                let mut x = Array2::zeros((l * t, 2));
                for r in 0..l {
                    for i in 0..t {
                        let v = y(r, i);
                        x[[r * t + i, 0]] = v.re;
                        x[[r * t + i, 1]] = v.im;
                    }
                }
                let classes = net.predict_classes(x.view())?;
                for r in 0..l {
                    for i in 0..t {
                        errors[r] += bit_errors(d.symbols[i], classes[r * t + i]) as u64;
                    }
                }
            }
            (Combining::Mrc, DetectorMode::Dnn) => {
                let net = self.destination(CombiningMode::Mrc);
                let mut x = Array2::zeros((t, 2));
                for i in 0..t {
                    let (ymrc, _) = mrc(l, i, gains, &y);
                    x[[i, 0]] = ymrc.re;
                    x[[i, 1]] = ymrc.im;
                }
                let classes = net.predict_classes(x.view())?;
                for i in 0..t {
                    errors[0] += bit_errors(d.symbols[i], classes[i]) as u64;
                }
            }
        }
        Ok(errors)
    }

    fn run_block(&self, block: u64, cells: &[Cell]) -> Result<Vec<Vec<u64>>> {
        let active = || cells.iter().filter(|c| c.active);
        let need_ideal = active().any(|c| c.scheme.phase_mode() == PhaseMode::Ideal);
        let need_dnn = active().any(|c| c.scheme.phase_mode() == PhaseMode::Dnn);
        let draws = self.draws(block, need_ideal, need_dnn)?;
        cells
            .iter()
            .map(|c| {
                if c.active {
                    self.evaluate(c, &draws)
                } else {
                    Ok(Vec::new())
                }
            })
            .collect()
    }
}

fn mrc(
    l: usize,
    i: usize,
    gains: &[Vec<Complex64>],
    y: &impl Fn(usize, usize) -> Complex64,
) -> (Complex64, Complex64) {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut coef = 0.0;
    for r in 0..l {
        acc += gains[r][i].conj() * y(r, i);
        coef += gains[r][i].norm_sqr();
    }
    (acc, Complex64::new(coef, 0.0))
}

fn check_models(setup: &SimulationSetup, schemes: &[Scheme], models: Option<&ModelSet>) -> Result<()> {
    let classes = setup.m;
    for s in schemes {
        if s.phase_mode() == PhaseMode::Dnn {
            let n = models.map(|m| m.relay.len()).unwrap_or(0);
            if n != setup.relays.len() {
                return Err(Error::MissingModel(format!(
                    "{s} needs {} relay networks, {n} available",
                    setup.relays.len()
                )));
            }
        }
        if let Some(mode) = s.destination_model() {
            let net = models
                .and_then(|m| m.destination(mode))
                .ok_or_else(|| Error::MissingModel(format!("{s} needs a destination network")))?;
            if net.output_dim() != classes || net.input_dim() != 2 {
                return Err(Error::MissingModel(format!(
                    "{s}: destination network has {} inputs and {} classes, expected 2 and {classes}",
                    net.input_dim(),
                    net.output_dim()
                )));
            }
        }
    }
    Ok(())
}

/// Simulates every (scheme, SNR) combination and returns one row per cell,
/// ordered by scheme (as given) then SNR.
pub fn simulate(
    setup: &SimulationSetup,
    schemes: &[Scheme],
    snr_grid_db: &[f64],
    models: Option<&ModelSet>,
    options: &EngineOptions,
    pool: &rayon::ThreadPool,
) -> Result<Vec<BerRow>> {
    if snr_grid_db.is_empty() {
        return Err(Error::invalid("empty SNR grid"));
    }
    if schemes.is_empty() {
        return Err(Error::invalid("no schemes to simulate"));
    }
    if setup.relays.is_empty() {
        return Err(Error::invalid("no relays"));
    }
    if setup.min_bit_errors == 0 || setup.max_bits == 0 || options.block_trials == 0 || options.blocks_per_round == 0
    {
        return Err(Error::invalid("stopping thresholds and block sizes must be positive"));
    }
    check_models(setup, schemes, models)?;
    let ctx = Context {
        setup,
        constellation: Constellation::new(setup.m)?,
        models,
        block_trials: options.block_trials,
    };
    let bits_per_trial = ctx.constellation.bits_per_symbol() as u64;
    let l = setup.relays.len();

    let mut cells = Vec::new();
    for &scheme in schemes {
        for &snr_db in snr_grid_db {
            let units = if scheme.combining() == Combining::RelaySelection { l } else { 1 };
            cells.push(Cell {
                scheme,
                snr_db,
                sigma: noise_power(snr_db)?.sqrt(),
                errors: vec![0; units],
                bits: 0,
                active: true,
            });
        }
    }

    let mut next_block = 0u64;
    while cells.iter().any(|c| c.active) {
        let blocks: Vec<u64> = (next_block..next_block + options.blocks_per_round as u64).collect();
        next_block += options.blocks_per_round as u64;
        let results: Vec<Result<Vec<Vec<u64>>>> =
            pool.install(|| blocks.par_iter().map(|&b| ctx.run_block(b, &cells)).collect());
        for res in results {
            let per_cell = res?;
            for (cell, errs) in cells.iter_mut().zip(per_cell) {
                if cell.active {
                    for (acc, e) in cell.errors.iter_mut().zip(errs) {
                        *acc += e;
                    }
                    cell.bits += bits_per_trial * options.block_trials as u64;
                }
            }
        }
        for cell in cells.iter_mut().filter(|c| c.active) {
            let min_errors = *cell.errors.iter().min().expect("at least one unit");
            if min_errors >= setup.min_bit_errors || cell.bits >= setup.max_bits {
                cell.active = false;
            }
        }
    }

    cells
        .into_iter()
        .map(|c| {
            let (relay, errors) = if c.scheme.combining() == Combining::RelaySelection {
                let bers: Vec<f64> = c.errors.iter().map(|&e| e as f64 / c.bits as f64).collect();
                let best = select_best_relay(&bers)?;
                (format!("R{}", best + 1), c.errors[best])
            } else {
                ("combined".to_string(), c.errors[0])
            };
            Ok(BerRow {
                m: setup.m,
                snr_db: c.snr_db,
                scheme: c.scheme,
                relay,
                ber: errors as f64 / c.bits as f64,
                bits_simulated: c.bits,
                bit_errors: errors,
                censored: errors < setup.min_bit_errors,
            })
        })
        .collect()
}

/// BER of one scheme at one SNR.
pub fn run_ber_point(
    setup: &SimulationSetup,
    scheme: Scheme,
    snr_db: f64,
    models: Option<&ModelSet>,
    options: &EngineOptions,
    pool: &rayon::ThreadPool,
) -> Result<BerRow> {
    let mut rows = simulate(setup, &[scheme], &[snr_db], models, options, pool)?;
    Ok(rows.remove(0))
}

/// Every scheme of `cfg` over its whole SNR grid.
pub fn run_sweep(
    cfg: &ScenarioConfig,
    models: Option<&ModelSet>,
    options: &EngineOptions,
    pool: &rayon::ThreadPool,
) -> Result<Vec<BerRow>> {
    cfg.validate()?;
    simulate(&SimulationSetup::from_config(cfg)?, &cfg.schemes, &cfg.snr_grid_db, models, options, pool)
}

pub const BER_CSV_HEADER: [&str; 8] = [
    "m",
    "snr_db",
    "scheme",
    "relay",
    "ber",
    "bits_simulated",
    "bit_errors",
    "censored",
];

pub fn write_ber_csv<W: Write>(rows: &[BerRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BER_CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.m.to_string(),
            r.snr_db.to_string(),
            r.scheme.to_string(),
            r.relay.clone(),
            r.ber.to_string(),
            r.bits_simulated.to_string(),
            r.bit_errors.to_string(),
            r.censored.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<ber>", e))
}

pub fn save_ber_csv(rows: &[BerRow], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ber_csv(rows, std::io::BufWriter::new(f))
}

/// Rows of one scheme, in SNR order.
pub fn curve(rows: &[BerRow], scheme: Scheme) -> Vec<&BerRow> {
    let mut c: Vec<&BerRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
    c.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    c
}

/// SNR at which a curve crosses `target` BER, interpolating linearly in
/// (SNR dB, log10 BER) between the first bracketing pair of points.
pub fn snr_at_ber(points: &[(f64, f64)], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (s0, b0) = w[0];
        let (s1, b1) = w[1];
        if b0 >= target && b1 <= target && b0 > 0.0 {
            if b1 <= 0.0 || b0 == b1 {
                return Some(if b1 <= 0.0 { s1 } else { s0 });
            }
            let (l0, l1, lt) = (b0.log10(), b1.log10(), target.log10());
            Some(s0 + (s1 - s0) * (l0 - lt) / (l0 - l1))
        } else {
            None
        }
    })
}
