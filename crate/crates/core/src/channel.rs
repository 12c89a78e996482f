//! Rayleigh-fading channel draws, additive noise and reproducible random streams.
//!
//! Every random quantity in the simulator comes from an [`RngStream`]: a
//! ChaCha8 generator keyed by the run seed and positioned on a stream that is
//! derived from what the numbers are for (channel, symbol, noise, ...) and the
//! indices involved (relay, trial, SNR point). Two workers never share a
//! generator, so results do not depend on how trials are scheduled.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a random stream is used for. Part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Channel = 1,
    Symbol = 2,
    Noise = 3,
    RelayDataset = 4,
    DestinationDataset = 5,
    Split = 6,
    Init = 7,
    Shuffle = 8,
    Misc = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one independent, reproducible sequence of random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Derives the stream for `purpose` at the given indices.
    pub fn derive(seed: u64, purpose: Purpose, indices: &[u64]) -> Self {
        let mut id = splitmix64(purpose as u64);
        for &i in indices {
            id = splitmix64(id ^ splitmix64(i.wrapping_add(0x632B_E59B_D9B4_E019)));
        }
        RngStream { seed, stream_id: id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// One draw of the source->relay (`h`) and relay->destination (`g`)
/// coefficients of a relay's reflectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub relay_index: usize,
}

impl ChannelRealization {
    pub fn new(h: Vec<Complex64>, g: Vec<Complex64>, relay_index: usize) -> Result<Self> {
        crate::error::check_len(h.len(), g.len())?;
        if h.is_empty() {
            return Err(Error::invalid("a relay needs at least one reflector"));
        }
        Ok(ChannelRealization { h, g, relay_index })
    }

    pub fn n_reflectors(&self) -> usize {
        self.h.len()
    }
}

/// Circularly-symmetric complex Gaussian with unit total variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `n_reflectors` independent CN(0,1) coefficients for each hop.
pub fn sample_channel<R: Rng + ?Sized>(
    n_reflectors: usize,
    relay_index: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if n_reflectors == 0 {
        return Err(Error::invalid("a relay needs at least one reflector"));
    }
    let h = (0..n_reflectors).map(|_| complex_normal(rng)).collect();
    let g = (0..n_reflectors).map(|_| complex_normal(rng)).collect();
    Ok(ChannelRealization { h, g, relay_index })
}

/// One complex noise sample with variance `n0 / 2` per real dimension.
///
/// Two normals are always consumed, so the stream position does not depend on `n0`.
pub fn sample_awgn<R: Rng + ?Sized>(n0: f64, rng: &mut R) -> Result<Complex64> {
    if !(n0 >= 0.0) {
        return Err(Error::invalid(format!("noise power must be >= 0, got {n0}")));
    }
    let w = complex_normal(rng);
    if n0 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(w * n0.sqrt())
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    if p <= -PI {
        p += 2.0 * PI;
    }
    p
}

/// Magnitude and phase of `coeff` under the `coeff = magnitude * exp(-j * phase)`
/// convention used for channel coefficients. The phase lies in `(-pi, pi]`;
/// a zero coefficient has phase 0.
pub fn polar(coeff: Complex64) -> (f64, f64) {
    let magnitude = coeff.norm();
    if magnitude == 0.0 {
        return (0.0, 0.0);
    }
    (magnitude, wrap_phase(-coeff.arg()))
}
