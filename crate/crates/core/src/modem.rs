//! Gray-coded M-QAM constellations with unit average symbol energy.
//!
//! Symbol indices double as bit labels: the `log2(M)` bits carried by symbol
//! `v` are the binary digits of `v` (most significant first). The Gray code
//! lives in the index -> point placement. Destination classifiers use the same
//! index as their class label.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Class identifier used by the destination classifier; one per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassLabel(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    m: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl Constellation {
    /// Builds square 4-/16-QAM or rectangular 8-QAM (4 x 2 grid).
    pub fn new(m: usize) -> Result<Self> {
        let (i_bits, q_bits) = match m {
            4 => (1, 1),
            8 => (2, 1),
            16 => (2, 2),
            _ => {
                return Err(Error::invalid(format!(
                    "unsupported modulation order {m}; expected 4, 8 or 16"
                )))
            }
        };
        let i_levels = 1usize << i_bits;
        let q_levels = 1usize << q_bits;
        let level = |code: usize, levels: usize| (2 * gray_decode(code)) as f64 - (levels - 1) as f64;

        let mut points: Vec<Complex64> = (0..m)
            .map(|v| {
                let i_code = v >> q_bits;
                let q_code = v & (q_levels - 1);
                Complex64::new(level(i_code, i_levels), level(q_code, q_levels))
            })
            .collect();
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
        let scale = energy.sqrt().recip();
        for p in &mut points {
            *p *= scale;
        }
        Ok(Constellation {
            m,
            bits_per_symbol: i_bits + q_bits,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Result<Complex64> {
        self.points
            .get(index)
            .copied()
            .ok_or_else(|| Error::invalid(format!("symbol index {index} out of range for M={}", self.m)))
    }

    /// Maps `log2(M)` bits (each 0 or 1, MSB first) to a symbol index.
    pub fn index_of_bits(&self, bits: &[u8]) -> Result<usize> {
        crate::error::check_len(self.bits_per_symbol, bits.len())?;
        bits.iter().try_fold(0usize, |acc, &b| match b {
            0 | 1 => Ok((acc << 1) | b as usize),
            _ => Err(Error::invalid(format!("bit values must be 0 or 1, got {b}"))),
        })
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<Complex64> {
        let v = self.index_of_bits(bits)?;
        Ok(self.points[v])
    }

    /// The bits carried by symbol `index`.
    pub fn demap(&self, index: usize) -> Result<Vec<u8>> {
        if index >= self.m {
            return Err(Error::invalid(format!("symbol index {index} out of range for M={}", self.m)));
        }
        Ok((0..self.bits_per_symbol)
            .rev()
            .map(|k| ((index >> k) & 1) as u8)
            .collect())
    }

    pub fn class_of(&self, index: usize) -> Result<ClassLabel> {
        if index >= self.m {
            return Err(Error::invalid(format!("symbol index {index} out of range for M={}", self.m)));
        }
        Ok(ClassLabel(index))
    }

    pub fn symbol_of(&self, class: ClassLabel) -> Result<Complex64> {
        self.point(class.0)
    }

    pub fn class_count(&self) -> usize {
        self.m
    }
}

/// Number of differing bits between the labels of two symbol indices.
pub fn bit_errors(sent: usize, detected: usize) -> u32 {
    (sent ^ detected).count_ones()
}
