//! Training data for the relay phase-regression networks and the destination
//! symbol classifier.
//!
//! A relay sample describes one reflector: features `[Re h, Im h, Re g, Im g]`
//! and target `(cos phi, sin phi)`, the unit-modulus reflection factor that
//! aligns the path. A relay network is applied to each of its reflectors in
//! turn. A destination sample is a received value `[Re y, Im y]` labelled
//! with the index of the transmitted symbol.

use std::io::Write;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_channel, ChannelRealization, Purpose, RngStream};
use crate::detection::mrc_combine;
use crate::error::{Error, Result};
use crate::geometry::RelaySite;
use crate::modem::Constellation;
use crate::neural::{Dataset, DenseNetwork};
use crate::rislink::{noise_power, optimal_phases, receive, BranchObservation, PhaseVector};

pub const RELAY_FEATURES: usize = 4;
pub const RELAY_TARGETS: usize = 2;
pub const DESTINATION_FEATURES: usize = 2;

/// Rows per forward pass when running a relay network over many reflectors.
const INFERENCE_CHUNK: usize = 2048;

pub fn relay_features(h: Complex64, g: Complex64) -> [f64; RELAY_FEATURES] {
    [h.re, h.im, g.re, g.im]
}

/// `(cos phi, sin phi)` for the phase that makes `h exp(j phi) g` real and positive.
pub fn phase_target(h: Complex64, g: Complex64) -> [f64; RELAY_TARGETS] {
    let single = ChannelRealization {
        h: vec![h],
        g: vec![g],
        relay_index: 0,
    };
    let phi = optimal_phases(&single).as_slice()[0];
    [phi.cos(), phi.sin()]
}

/// `samples` reflector samples for relay `relay_index`, each drawn from its own stream.
pub fn build_relay_dataset(samples: usize, relay_index: usize, seed: u64) -> Result<Dataset> {
    if samples == 0 {
        return Err(Error::invalid("a dataset needs at least one sample"));
    }
    let mut x = Array2::zeros((samples, RELAY_FEATURES));
    let mut t = Array2::zeros((samples, RELAY_TARGETS));
    for i in 0..samples {
        let mut rng = RngStream::derive(seed, Purpose::RelayDataset, &[relay_index as u64, i as u64]).rng();
        let ch = sample_channel(1, relay_index, &mut rng)?;
        let f = relay_features(ch.h[0], ch.g[0]);
        let p = phase_target(ch.h[0], ch.g[0]);
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&f));
        t.row_mut(i).assign(&ndarray::ArrayView1::from(&p));
    }
    Dataset::new(x, t)
}

/// Phases produced by a relay network for each realization. The network's
/// two outputs per reflector are read as a reflection factor and projected
/// onto the unit circle.
pub fn relay_dnn_phases(net: &DenseNetwork, realizations: &[&ChannelRealization]) -> Result<Vec<PhaseVector>> {
    let rows: Vec<[f64; RELAY_FEATURES]> = realizations
        .iter()
        .flat_map(|r| r.h.iter().zip(&r.g).map(|(&h, &g)| relay_features(h, g)))
        .collect();
    let mut factors: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(INFERENCE_CHUNK) {
        let x = Array2::from_shape_vec((chunk.len(), RELAY_FEATURES), chunk.concat())
            .expect("rows have fixed width");
        let out = net.forward_batch(x.view())?;
        if out.ncols() != RELAY_TARGETS {
            return Err(Error::DimensionMismatch {
                expected: RELAY_TARGETS,
                actual: out.ncols(),
            });
        }
        factors.extend(out.axis_iter(Axis(0)).map(|r| (r[0], r[1])));
    }
    let mut out = Vec::with_capacity(realizations.len());
    let mut start = 0;
    for r in realizations {
        let n = r.n_reflectors();
        out.push(PhaseVector::from_factors(factors[start..start + n].iter().copied()));
        start += n;
    }
    Ok(out)
}

/// How the relays set their reflection phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    /// Closed-form optimum.
    Ideal,
    /// Relay network output.
    Dnn,
}

/// What the destination classifier sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombiningMode {
    /// The observation of a single relay branch, chosen uniformly per sample.
    Branch,
    /// The maximum-ratio combination of all branches.
    Mrc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DestinationScenario {
    pub m: usize,
    pub relays: Vec<RelaySite>,
    /// SNR points in dB; each sample uses one drawn uniformly.
    pub snr_db: Vec<f64>,
    pub phase_mode: PhaseMode,
    pub combining: CombiningMode,
}

/// `samples` received values with one-hot symbol targets.
///
/// `relay_nets` holds one network per relay and is required in
/// [`PhaseMode::Dnn`].
pub fn build_destination_dataset(
    samples: usize,
    scenario: &DestinationScenario,
    relay_nets: &[DenseNetwork],
    seed: u64,
) -> Result<Dataset> {
    if samples == 0 {
        return Err(Error::invalid("a dataset needs at least one sample"));
    }
    if scenario.relays.is_empty() {
        return Err(Error::invalid("scenario needs at least one relay"));
    }
    if scenario.snr_db.is_empty() {
        return Err(Error::invalid("scenario needs at least one SNR point"));
    }
    if scenario.phase_mode == PhaseMode::Dnn && relay_nets.len() != scenario.relays.len() {
        return Err(Error::MissingModel(format!(
            "{} relay networks for {} relays",
            relay_nets.len(),
            scenario.relays.len()
        )));
    }
    let constellation = Constellation::new(scenario.m)?;
    let n0s = scenario
        .snr_db
        .iter()
        .map(|&s| noise_power(s))
        .collect::<Result<Vec<_>>>()?;
    let l = scenario.relays.len();

    struct Draw {
        symbol: usize,
        n0: f64,
        relays: Vec<usize>,
    }
    let mut draws = Vec::with_capacity(samples);
    let mut channels: Vec<Vec<(usize, ChannelRealization)>> = vec![Vec::new(); l];
    for i in 0..samples {
        let mut rng = RngStream::derive(seed, Purpose::DestinationDataset, &[i as u64, 0]).rng();
        let symbol = rng.random_range(0..scenario.m);
        let n0 = n0s[rng.random_range(0..n0s.len())];
        let relays: Vec<usize> = match scenario.combining {
            CombiningMode::Branch => vec![rng.random_range(0..l)],
            CombiningMode::Mrc => (0..l).collect(),
        };
        for &r in &relays {
            let mut crng = RngStream::derive(seed, Purpose::DestinationDataset, &[i as u64, 1, r as u64]).rng();
            channels[r].push((i, sample_channel(scenario.relays[r].n_reflectors, r, &mut crng)?));
        }
        draws.push(Draw { symbol, n0, relays });
    }

    let mut phases: Vec<Vec<PhaseVector>> = Vec::with_capacity(l);
    for (r, list) in channels.iter().enumerate() {
        let refs: Vec<&ChannelRealization> = list.iter().map(|(_, c)| c).collect();
        phases.push(match scenario.phase_mode {
            PhaseMode::Ideal => refs.iter().map(|c| optimal_phases(c)).collect(),
            PhaseMode::Dnn => relay_dnn_phases(&relay_nets[r], &refs)?,
        });
    }

    let mut cursor = vec![0usize; l];
    let mut x = Array2::zeros((samples, DESTINATION_FEATURES));
    let mut t = Array2::zeros((samples, scenario.m));
    for (i, d) in draws.iter().enumerate() {
        let sym = constellation.points()[d.symbol];
        let mut obs: Vec<BranchObservation> = Vec::with_capacity(d.relays.len());
        for &r in &d.relays {
            let (owner, ch) = &channels[r][cursor[r]];
            debug_assert_eq!(*owner, i);
            let ph = &phases[r][cursor[r]];
            cursor[r] += 1;
            let mut nrng = RngStream::derive(seed, Purpose::DestinationDataset, &[i as u64, 2, r as u64]).rng();
            obs.push(receive(sym, ch, ph, &scenario.relays[r].geometry, d.n0, &mut nrng)?);
        }
        let y = match scenario.combining {
            CombiningMode::Branch => obs[0].y,
            CombiningMode::Mrc => mrc_combine(&obs)?,
        };
        x[[i, 0]] = y.re;
        x[[i, 1]] = y.im;
        t[[i, d.symbol]] = 1.0;
    }
    Dataset::new(x, t)
}

/// Shuffled `(train, validation)` split, reproducible per seed.
pub fn split_validation(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    data.split(fraction, &mut RngStream::derive(seed, Purpose::Split, &[]).rng())
}

/// Writes a relay dataset as CSV: `h_re,h_im,g_re,g_im,cos_phi,sin_phi`.
pub fn write_relay_csv<W: Write>(data: &Dataset, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["h_re", "h_im", "g_re", "g_im", "cos_phi", "sin_phi"])?;
    for (f, t) in data.features.axis_iter(Axis(0)).zip(data.targets.axis_iter(Axis(0))) {
        out.write_record(f.iter().chain(t.iter()).map(|v| v.to_string()))?;
    }
    out.flush().map_err(|e| Error::io("<dataset>", e))
}

/// Writes a destination dataset as CSV: `y_re,y_im,class`.
pub fn write_destination_csv<W: Write>(data: &Dataset, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["y_re", "y_im", "class"])?;
    for (f, label) in data.features.axis_iter(Axis(0)).zip(data.labels()) {
        out.write_record([f[0].to_string(), f[1].to_string(), label.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<dataset>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn scenario(m: usize, snr: f64, combining: CombiningMode) -> DestinationScenario {
        DestinationScenario {
            m,
            relays: vec![
                RelaySite::new(0.2, FRAC_PI_2, 4.0, 8).unwrap(),
                RelaySite::new(0.5, FRAC_PI_2, 4.0, 8).unwrap(),
            ],
            snr_db: vec![snr],
            phase_mode: PhaseMode::Ideal,
            combining,
        }
    }

    #[test]
    fn relay_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(relay_features(one, one), [1.0, 0.0, 1.0, 0.0]);
        let t = phase_target(one, one);
        assert!((t[0] - 1.0).abs() < 1e-15 && t[1].abs() < 1e-15);
        let f = relay_features(Complex64::new(0.3, 0.4), Complex64::new(0.1, -0.2));
        assert_eq!(f, [0.3, 0.4, 0.1, -0.2]);
    }

    #[test]
    fn relay_targets_align_paths() {
        let d = build_relay_dataset(2000, 0, 7).unwrap();
        assert_eq!(d.features.dim(), (2000, 4));
        for (f, t) in d.features.axis_iter(Axis(0)).zip(d.targets.axis_iter(Axis(0))) {
            assert!((t[0].hypot(t[1]) - 1.0).abs() < 1e-9);
            let h = Complex64::new(f[0], f[1]);
            let g = Complex64::new(f[2], f[3]);
            let z = h * Complex64::new(t[0], t[1]) * g;
            assert!(z.im.abs() < 1e-9 * z.norm().max(1.0) && z.re >= 0.0);
        }
    }

    #[test]
    fn relay_targets_beat_quantized_sweep() {
        let d = build_relay_dataset(500, 1, 8).unwrap();
        for (f, t) in d.features.axis_iter(Axis(0)).zip(d.targets.axis_iter(Axis(0))) {
            let h = Complex64::new(f[0], f[1]);
            let g = Complex64::new(f[2], f[3]);
            let target = (h * Complex64::new(t[0], t[1]) * g).norm();
            let best = (0..64)
                .map(|k| (h * Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0) * g).re)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(target >= best - 1e-12);
        }
    }

    #[test]
    fn relay_dataset_is_reproducible() {
        assert_eq!(build_relay_dataset(50, 0, 3).unwrap(), build_relay_dataset(50, 0, 3).unwrap());
        assert_ne!(build_relay_dataset(50, 0, 3).unwrap(), build_relay_dataset(50, 1, 3).unwrap());
        assert!(build_relay_dataset(0, 0, 3).is_err());
    }

    #[test]
    fn noiseless_branch_samples_lie_on_symbol_rays() {
        let c = Constellation::new(4).unwrap();
        let d = build_destination_dataset(2000, &scenario(4, f64::INFINITY, CombiningMode::Branch), &[], 1).unwrap();
        for (f, label) in d.features.axis_iter(Axis(0)).zip(d.labels()) {
            let angle = f[1].atan2(f[0]);
            assert!((angle - c.points()[label].arg()).abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_nearest_cluster_is_accurate() {
        for combining in [CombiningMode::Branch, CombiningMode::Mrc] {
            let c = Constellation::new(4).unwrap();
            let d = build_destination_dataset(5000, &scenario(4, 200.0, combining), &[], 2).unwrap();
            let hits = d
                .features
                .axis_iter(Axis(0))
                .zip(d.labels())
                .filter(|(f, label)| {
                    let y = Complex64::new(f[0], f[1]) / Complex64::new(f[0], f[1]).norm();
                    let nearest = (0..4)
                        .min_by(|&a, &b| {
                            let da = (y - c.points()[a] / c.points()[a].norm()).norm();
                            let db = (y - c.points()[b] / c.points()[b].norm()).norm();
                            da.total_cmp(&db)
                        })
                        .unwrap();
                    nearest == *label
                })
                .count();
            assert!(hits as f64 / 5000.0 >= 0.999);
        }
    }

    #[test]
    fn class_histogram_is_uniform() {
        let n = 100_000;
        let d = build_destination_dataset(n, &scenario(4, 0.0, CombiningMode::Branch), &[], 3).unwrap();
        let mut counts = [0f64; 4];
        for l in d.labels() {
            counts[l] += 1.0;
        }
        let expect = n as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|c| (c - expect).powi(2) / expect).sum();
        // 99th percentile of chi-square with 3 degrees of freedom
        assert!(chi2 < 11.345, "chi2 = {chi2}");
        assert!(counts.iter().all(|c| (c / expect - 1.0).abs() < 0.02));
    }

    #[test]
    fn dnn_mode_requires_networks() {
        let mut s = scenario(4, 0.0, CombiningMode::Mrc);
        s.phase_mode = PhaseMode::Dnn;
        assert!(matches!(build_destination_dataset(10, &s, &[], 0), Err(Error::MissingModel(_))));
        let mut empty = scenario(4, 0.0, CombiningMode::Mrc);
        empty.snr_db.clear();
        assert!(build_destination_dataset(10, &empty, &[], 0).is_err());
    }

    #[test]
    fn split_examples() {
        let d = build_relay_dataset(1000, 0, 1).unwrap();
        let (a, b) = split_validation(&d, 0.1, 5).unwrap();
        assert_eq!((a.len(), b.len()), (900, 100));
        assert_eq!(split_validation(&d, 0.1, 5).unwrap(), (a, b));
        assert!(split_validation(&d, 1.0, 5).is_err());
    }

    #[test]
    fn csv_export() {
        let d = build_relay_dataset(3, 0, 1).unwrap();
        let mut buf = Vec::new();
        write_relay_csv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "h_re,h_im,g_re,g_im,cos_phi,sin_phi");
        assert_eq!(text.lines().count(), 4);

        let d = build_destination_dataset(5, &scenario(8, 10.0, CombiningMode::Mrc), &[], 1).unwrap();
        let mut buf = Vec::new();
        write_destination_csv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "y_re,y_im,class");
        assert_eq!(text.lines().count(), 6);
    }
}
