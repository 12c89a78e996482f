//! Relay placement inside the source/destination half circle.
//!
//! Distances are normalized so that the source-destination distance is 1 and
//! the direct link has unity path loss. A relay is described by its distance
//! from the source and the angle at the relay between the two hops; the
//! relay-destination distance follows from the law of cosines.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placement and path-loss gains of one source -> relay -> destination hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayGeometry {
    pub d_sr: f64,
    pub d_rd: f64,
    /// Angle at the relay between the two hops, radians.
    pub theta: f64,
    /// Path-loss exponent.
    pub c: f64,
    pub g_sr: f64,
    pub g_rd: f64,
}

impl RelayGeometry {
    /// `sqrt(G_SR * G_RD)`, the amplitude factor applied to the cascaded channel.
    pub fn amplitude_gain(&self) -> f64 {
        (self.g_sr * self.g_rd).sqrt()
    }
}

/// A placed relay together with the size of its surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaySite {
    pub geometry: RelayGeometry,
    pub n_reflectors: usize,
}

impl RelaySite {
    pub fn new(d_sr: f64, theta: f64, c: f64, n_reflectors: usize) -> Result<Self> {
        if n_reflectors == 0 {
            return Err(Error::invalid("a relay needs at least one reflector"));
        }
        Ok(RelaySite {
            geometry: place_relay(d_sr, theta, c)?,
            n_reflectors,
        })
    }
}

/// Relative gain `(1/d)^c` of a link of normalized length `d`.
pub fn path_gain(d: f64, c: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!("distance must be positive, got {d}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!(
            "path-loss exponent must be positive, got {c}"
        )));
    }
    Ok(d.recip().powf(c))
}

/// Places a relay at distance `d_sr` from the source with angle `theta` at the
/// relay, solving the triangle with unit base for the relay-destination leg.
///
/// `theta = pi/2` puts the relay on the circle arc, `theta = pi` on the
/// source-destination line.
pub fn place_relay(d_sr: f64, theta: f64, c: f64) -> Result<RelayGeometry> {
    if !(d_sr > 0.0 && d_sr < 1.0) {
        return Err(Error::invalid(format!("d_sr must lie in (0, 1), got {d_sr}")));
    }
    let slack = 1e-12;
    if !(theta >= FRAC_PI_2 - slack && theta <= PI + slack) {
        return Err(Error::invalid(format!(
            "theta must lie in [pi/2, pi], got {theta}"
        )));
    }
    let theta = theta.clamp(FRAC_PI_2, PI);
    // 1 = d_sr^2 + d_rd^2 - 2 d_sr d_rd cos(theta), positive root.
    let cos_t = theta.cos();
    let d_rd = d_sr * cos_t + (1.0 - d_sr * d_sr * (1.0 - cos_t * cos_t)).sqrt();
    let g_sr = path_gain(d_sr, c)?;
    let g_rd = path_gain(d_rd, c)?;
    Ok(RelayGeometry {
        d_sr,
        d_rd,
        theta,
        c,
        g_sr,
        g_rd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Left-hand side of the law of cosines written in gains.
    fn cosine_law_in_gains(g: &RelayGeometry) -> f64 {
        let a = g.g_sr.powf(-1.0 / g.c);
        let b = g.g_rd.powf(-1.0 / g.c);
        a * a + b * b - 2.0 * a * b * g.theta.cos()
    }

    #[test]
    fn arc_placement_matches_reported_distances() {
        let g = place_relay(0.2, FRAC_PI_2, 4.0).unwrap();
        assert!((g.d_rd - 0.979_795_897_113_271_2).abs() < 1e-12);
        assert!((g.d_rd - 0.98).abs() < 5e-3);

        let g = place_relay(0.5, FRAC_PI_2, 4.0).unwrap();
        assert!((g.d_rd - 0.866_025_403_784_438_6).abs() < 1e-12);
        assert!((g.g_sr - 16.0).abs() < 1e-12);
        // (1/0.8660254)^4 = 16/9
        assert!((g.g_rd - 16.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_relay() {
        let g = place_relay(0.5, PI, 4.0).unwrap();
        assert!((g.d_rd - 0.5).abs() < 1e-12);
    }

    #[test]
    fn path_gain_values() {
        assert_eq!(path_gain(1.0, 4.0).unwrap(), 1.0);
        assert!((path_gain(0.5, 4.0).unwrap() - 16.0).abs() < 1e-12);
        assert!((path_gain(0.7, 3.0).unwrap() - 2.915_451_895_043_731_6).abs() < 1e-12);
        assert!(path_gain(0.0, 4.0).is_err());
        assert!(path_gain(-1.0, 4.0).is_err());
        assert!(path_gain(0.5, 0.0).is_err());
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        assert!(place_relay(0.0, FRAC_PI_2, 4.0).is_err());
        assert!(place_relay(1.0, FRAC_PI_2, 4.0).is_err());
        assert!(place_relay(0.5, 1.0, 4.0).is_err());
        assert!(place_relay(0.5, 3.2, 4.0).is_err());
        assert!(place_relay(0.5, PI, 0.0).is_err());
        assert!(place_relay(0.5, PI, -2.0).is_err());
    }

    proptest! {
        #[test]
        fn gains_satisfy_cosine_law(d in 0.01f64..0.99, theta in FRAC_PI_2..PI, c in 2.0f64..5.0) {
            let g = place_relay(d, theta, c).unwrap();
            prop_assert!((cosine_law_in_gains(&g) - 1.0).abs() < 1e-9);
            prop_assert!(g.d_rd > 0.0 && g.d_rd <= 1.0);
        }

        #[test]
        fn gain_decreases_with_distance(d in 0.01f64..0.9, step in 0.001f64..0.09, theta in FRAC_PI_2..PI) {
            let near = place_relay(d, theta, 4.0).unwrap();
            let far = place_relay(d + step, theta, 4.0).unwrap();
            prop_assert!(far.g_sr < near.g_sr);
        }

        #[test]
        fn straight_line_distances_add_up(d in 0.01f64..0.99) {
            let g = place_relay(d, PI, 3.0).unwrap();
            prop_assert!((g.d_sr + g.d_rd - 1.0).abs() < 1e-12);
        }
    }
}
