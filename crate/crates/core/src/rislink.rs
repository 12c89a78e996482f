//! Reflection model of one RIS relay.
//!
//! A relay with `N` reflectors applies `exp(j * phi_n)` to each path, so the
//! destination sees `sqrt(G_SR * G_RD) * sum_n h_n exp(j phi_n) g_n * x + w`.
//! With channel phases written as `h = a exp(-j p)`, `g = b exp(-j q)`, the
//! choice `phi_n = p_n + q_n` makes every term real and positive.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{polar, sample_awgn, wrap_phase, ChannelRealization};
use crate::error::{check_len, Error, Result};
use crate::geometry::RelayGeometry;

/// Per-reflector phase adjustments of one RIS, stored wrapped to `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    phases: Vec<f64>,
}

impl PhaseVector {
    pub fn new(phases: Vec<f64>) -> Self {
        PhaseVector {
            phases: phases.into_iter().map(wrap_phase).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        PhaseVector { phases: vec![0.0; n] }
    }

    /// Phases from reflection factors `(re, im)` of arbitrary modulus; the
    /// factor is projected onto the unit circle. A zero factor maps to phase 0.
    pub fn from_factors(factors: impl IntoIterator<Item = (f64, f64)>) -> Self {
        PhaseVector {
            phases: factors
                .into_iter()
                .map(|(re, im)| if re == 0.0 && im == 0.0 { 0.0 } else { im.atan2(re) })
                .map(wrap_phase)
                .collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// What the destination receives through one relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchObservation {
    pub y: Complex64,
    /// `sqrt(G_SR G_RD) * h Phi g^T` for the phases actually applied.
    pub effective_gain: Complex64,
    pub noise: Complex64,
    pub relay_index: usize,
}

/// The phase rule that aligns every reflected path.
pub fn optimal_phases(realization: &ChannelRealization) -> PhaseVector {
    PhaseVector {
        phases: realization
            .h
            .iter()
            .zip(&realization.g)
            .map(|(&h, &g)| wrap_phase(polar(h).1 + polar(g).1))
            .collect(),
    }
}

/// `sum_n h_n exp(j phi_n) g_n`, without path loss.
pub fn cascaded_response(realization: &ChannelRealization, phases: &PhaseVector) -> Result<Complex64> {
    check_len(realization.n_reflectors(), phases.len())?;
    Ok(realization
        .h
        .iter()
        .zip(&realization.g)
        .zip(phases.as_slice())
        .map(|((&h, &g), &phi)| h * Complex64::from_polar(1.0, phi) * g)
        .sum())
}

pub fn effective_gain(
    realization: &ChannelRealization,
    phases: &PhaseVector,
    geometry: &RelayGeometry,
) -> Result<Complex64> {
    Ok(cascaded_response(realization, phases)? * geometry.amplitude_gain())
}

/// Passes symbol `x` through the relay and adds noise of power `n0`.
pub fn receive<R: Rng + ?Sized>(
    x: Complex64,
    realization: &ChannelRealization,
    phases: &PhaseVector,
    geometry: &RelayGeometry,
    n0: f64,
    rng: &mut R,
) -> Result<BranchObservation> {
    let gain = effective_gain(realization, phases, geometry)?;
    let noise = sample_awgn(n0, rng)?;
    Ok(BranchObservation {
        y: gain * x + noise,
        effective_gain: gain,
        noise,
        relay_index: realization.relay_index,
    })
}

/// Instantaneous SNR of one relay branch at the destination.
pub fn branch_snr(
    realization: &ChannelRealization,
    phases: &PhaseVector,
    geometry: &RelayGeometry,
    es: f64,
    n0: f64,
) -> Result<f64> {
    if !(es > 0.0) {
        return Err(Error::invalid(format!("symbol energy must be positive, got {es}")));
    }
    if !(n0 > 0.0) {
        return Err(Error::invalid(format!("noise power must be positive, got {n0}")));
    }
    let z = cascaded_response(realization, phases)?;
    Ok(z.norm_sqr() * geometry.g_sr * geometry.g_rd * es / n0)
}

pub fn total_snr(branches: &[f64]) -> Result<f64> {
    if let Some(bad) = branches.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::invalid(format!("branch SNR must be >= 0, got {bad}")));
    }
    Ok(branches.iter().sum())
}

/// Achievable rate `log2(1 + snr)` in bit/s/Hz.
pub fn throughput(total_snr: f64) -> Result<f64> {
    if !(total_snr >= 0.0) {
        return Err(Error::invalid(format!("SNR must be >= 0, got {total_snr}")));
    }
    Ok((1.0 + total_snr).log2())
}

/// Noise power `N0` for unit symbol energy at `snr_db = 10 log10(Es / N0)`.
/// An infinite SNR gives a noiseless link.
pub fn noise_power(snr_db: f64) -> Result<f64> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("SNR must be a number above -inf, got {snr_db}")));
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(10f64.powf(-snr_db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, Purpose, RngStream};
    use crate::geometry::place_relay;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit_geometry() -> RelayGeometry {
        RelayGeometry {
            d_sr: 1.0,
            d_rd: 1.0,
            theta: FRAC_PI_2,
            c: 4.0,
            g_sr: 1.0,
            g_rd: 1.0,
        }
    }

    fn ones(n: usize) -> ChannelRealization {
        let one = Complex64::new(1.0, 0.0);
        ChannelRealization::new(vec![one; n], vec![one; n], 0).unwrap()
    }

    fn random_channel(n: usize, i: u64) -> ChannelRealization {
        sample_channel(n, 0, &mut RngStream::derive(9, Purpose::Misc, &[i]).rng()).unwrap()
    }

    #[test]
    fn zero_phase_channels_need_no_adjustment() {
        let p = optimal_phases(&ones(5));
        assert!(p.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn optimal_phases_make_terms_real_positive() {
        for i in 0..50 {
            let ch = random_channel(8, i);
            let p = optimal_phases(&ch);
            for ((h, g), phi) in ch.h.iter().zip(&ch.g).zip(p.as_slice()) {
                let t = h * Complex64::from_polar(1.0, *phi) * g;
                assert!(t.im.abs() < 1e-12 && t.re > 0.0);
            }
            let chi: f64 = ch.h.iter().zip(&ch.g).map(|(h, g)| h.norm() * g.norm()).sum();
            let z = cascaded_response(&ch, &p).unwrap();
            assert!((z.re - chi).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_beats_random_phases() {
        use rand::Rng;
        let mut rng = RngStream::derive(9, Purpose::Misc, &[999]).rng();
        for i in 0..5 {
            let ch = random_channel(4, 100 + i);
            let best = cascaded_response(&ch, &optimal_phases(&ch)).unwrap().norm();
            for _ in 0..10_000 {
                let p = PhaseVector::new((0..4).map(|_| rng.random_range(-PI..PI)).collect());
                assert!(cascaded_response(&ch, &p).unwrap().norm() <= best + 1e-12);
            }
        }
    }

    #[test]
    fn effective_gain_examples() {
        let g = effective_gain(&ones(1), &PhaseVector::zeros(1), &unit_geometry()).unwrap();
        assert_eq!(g, Complex64::new(1.0, 0.0));

        // alpha = beta = 1 with random phases: aligned sum is N.
        let h: Vec<_> = (0..8).map(|k| Complex64::from_polar(1.0, 0.3 * k as f64)).collect();
        let gg: Vec<_> = (0..8).map(|k| Complex64::from_polar(1.0, -1.1 * k as f64 + 0.2)).collect();
        let ch = ChannelRealization::new(h, gg, 0).unwrap();
        let g = effective_gain(&ch, &optimal_phases(&ch), &unit_geometry()).unwrap();
        assert!((g - Complex64::new(8.0, 0.0)).norm() < 1e-12);
        let snr = branch_snr(&ch, &optimal_phases(&ch), &unit_geometry(), 1.0, 1.0).unwrap();
        assert!((snr - 64.0).abs() < 1e-10);

        assert!(effective_gain(&ch, &PhaseVector::zeros(3), &unit_geometry()).is_err());
    }

    #[test]
    fn effective_gain_matches_polar_loop() {
        let geo = place_relay(0.3, 2.0, 3.0).unwrap();
        for i in 0..20 {
            let ch = random_channel(6, 200 + i);
            let p = PhaseVector::new((0..6).map(|k| 0.7 * k as f64 - 1.0).collect());
            let got = effective_gain(&ch, &p, &geo).unwrap();
            let (mut re, mut im) = (0.0, 0.0);
            for n in 0..6 {
                let (a, pa) = polar(ch.h[n]);
                let (b, pb) = polar(ch.g[n]);
                let ang = p.as_slice()[n] - pa - pb;
                re += a * b * ang.cos();
                im += a * b * ang.sin();
            }
            let amp = (geo.g_sr * geo.g_rd).sqrt();
            assert!((got - Complex64::new(re * amp, im * amp)).norm() < 1e-12 * amp.max(1.0));
        }
    }

    #[test]
    fn noiseless_receive_inverts() {
        let geo = place_relay(0.2, FRAC_PI_2, 4.0).unwrap();
        let ch = random_channel(8, 300);
        let p = optimal_phases(&ch);
        let mut rng = RngStream::derive(1, Purpose::Noise, &[0]).rng();
        let x = Complex64::new(0.7, -0.7);
        let obs = receive(x, &ch, &p, &geo, 0.0, &mut rng).unwrap();
        assert!((obs.y / obs.effective_gain - x).norm() < 1e-14);
        let obs = receive(Complex64::new(0.0, 0.0), &ch, &p, &geo, 0.0, &mut rng).unwrap();
        assert_eq!(obs.y, Complex64::new(0.0, 0.0));

        let a = receive(x, &ch, &p, &geo, 0.5, &mut RngStream::derive(1, Purpose::Noise, &[7]).rng()).unwrap();
        let b = receive(x, &ch, &p, &geo, 0.5, &mut RngStream::derive(1, Purpose::Noise, &[7]).rng()).unwrap();
        assert_eq!(a, b);
        assert!((a.y - (a.effective_gain * x + a.noise)).norm() < 1e-12);
    }

    #[test]
    fn branch_snr_properties() {
        use rand::Rng;
        let geo = unit_geometry();
        let mut rng = RngStream::derive(3, Purpose::Misc, &[0]).rng();
        for i in 0..10 {
            let ch = random_channel(5, 400 + i);
            let best = branch_snr(&ch, &optimal_phases(&ch), &geo, 1.0, 0.1).unwrap();
            for _ in 0..1000 {
                let p = PhaseVector::new((0..5).map(|_| rng.random_range(-PI..PI)).collect());
                assert!(branch_snr(&ch, &p, &geo, 1.0, 0.1).unwrap() <= best * (1.0 + 1e-12));
            }
            // scaling h by k scales the SNR by k^2
            let scaled = ChannelRealization::new(ch.h.iter().map(|h| h * 3.0).collect(), ch.g.clone(), 0).unwrap();
            let s2 = branch_snr(&scaled, &optimal_phases(&scaled), &geo, 1.0, 0.1).unwrap();
            assert!((s2 / best - 9.0).abs() < 1e-9);
        }
        // single reflector, zero phases: no cross term
        let ch = random_channel(1, 500);
        let s = branch_snr(&ch, &PhaseVector::zeros(1), &geo, 2.0, 0.5).unwrap();
        let expect = ch.h[0].norm_sqr() * ch.g[0].norm_sqr() * 4.0;
        assert!((s - expect).abs() < 1e-12 * expect);

        assert!(branch_snr(&ch, &PhaseVector::zeros(1), &geo, 0.0, 1.0).is_err());
        assert!(branch_snr(&ch, &PhaseVector::zeros(1), &geo, 1.0, 0.0).is_err());
    }

    #[test]
    fn coherent_sum_identity() {
        use rand::Rng;
        let mut rng = RngStream::derive(4, Purpose::Misc, &[0]).rng();
        for _ in 0..200 {
            let n = rng.random_range(1..10);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
            let xi: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
            let lhs = v
                .iter()
                .zip(&xi)
                .map(|(&a, &x)| Complex64::from_polar(a, x))
                .sum::<Complex64>()
                .norm_sqr();
            let mut rhs: f64 = v.iter().map(|a| a * a).sum();
            for i in 0..n {
                for t in i + 1..n {
                    rhs += 2.0 * v[i] * v[t] * (xi[i] - xi[t]).cos();
                }
            }
            assert!((lhs - rhs).abs() < 1e-9 * rhs.max(1.0));
        }
    }

    #[test]
    fn snr_sum_and_throughput() {
        assert_eq!(total_snr(&[]).unwrap(), 0.0);
        assert_eq!(throughput(total_snr(&[0.0]).unwrap()).unwrap(), 0.0);
        assert_eq!(throughput(total_snr(&[3.0]).unwrap()).unwrap(), 2.0);
        assert_eq!(total_snr(&[1.5, 2.25]).unwrap(), 3.75);
        assert!(total_snr(&[1.0, -0.1]).is_err());
        assert!(throughput(-1.0).is_err());
    }

    #[test]
    fn noise_power_examples() {
        assert_eq!(noise_power(0.0).unwrap(), 1.0);
        assert!((noise_power(-30.0).unwrap() - 1000.0).abs() < 1e-9);
        assert!((noise_power(10.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(noise_power(f64::INFINITY).unwrap(), 0.0);
        assert!(noise_power(f64::NAN).is_err());
    }

    #[test]
    fn factors_project_to_unit_circle() {
        let p = PhaseVector::from_factors([(2.0, 0.0), (0.0, -0.5), (0.0, 0.0), (-1.0, 0.0)]);
        assert_eq!(p.as_slice(), &[0.0, -FRAC_PI_2, 0.0, PI]);
    }
}
