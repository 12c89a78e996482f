//! Named end-to-end transmission schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datasets::{CombiningMode, PhaseMode};
use crate::detection::Combining;
use crate::error::Error;

/// Which detector runs at the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorMode {
    /// Minimum-distance decision with known effective gains.
    Ml,
    /// Destination classifier network.
    Dnn,
}

/// An end-to-end transmission scheme. The name prefix fixes how phases are
/// set and how symbols are detected:
///
/// * `CRIS`: closed-form phases, coherent detection;
/// * `DNNR`: relay-network phases, coherent detection;
/// * `DNNRD`: relay-network phases, destination-network detection.
///
/// The suffix names the combining at the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    CrisRs,
    CrisMl,
    CrisMrc,
    DnnrRs,
    DnnrMrc,
    DnnrdRs,
    DnnrdMrc,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::CrisRs,
        Scheme::CrisMl,
        Scheme::CrisMrc,
        Scheme::DnnrRs,
        Scheme::DnnrMrc,
        Scheme::DnnrdRs,
        Scheme::DnnrdMrc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::CrisRs => "CRIS-RS",
            Scheme::CrisMl => "CRIS-ML",
            Scheme::CrisMrc => "CRIS-MRC",
            Scheme::DnnrRs => "DNNR-RS",
            Scheme::DnnrMrc => "DNNR-MRC",
            Scheme::DnnrdRs => "DNNRD-RS",
            Scheme::DnnrdMrc => "DNNRD-MRC",
        }
    }

    pub fn phase_mode(self) -> PhaseMode {
        match self {
            Scheme::CrisRs | Scheme::CrisMl | Scheme::CrisMrc => PhaseMode::Ideal,
            _ => PhaseMode::Dnn,
        }
    }

    pub fn detector_mode(self) -> DetectorMode {
        match self {
            Scheme::DnnrdRs | Scheme::DnnrdMrc => DetectorMode::Dnn,
            _ => DetectorMode::Ml,
        }
    }

    pub fn combining(self) -> Combining {
        match self {
            Scheme::CrisRs | Scheme::DnnrRs | Scheme::DnnrdRs => Combining::RelaySelection,
            Scheme::CrisMl => Combining::MlVector,
            Scheme::CrisMrc | Scheme::DnnrMrc | Scheme::DnnrdMrc => Combining::Mrc,
        }
    }

    /// The destination network this scheme needs, if any.
    pub fn destination_model(self) -> Option<CombiningMode> {
        match self {
            Scheme::DnnrdRs => Some(CombiningMode::Branch),
            Scheme::DnnrdMrc => Some(CombiningMode::Mrc),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let upper = s.trim().to_ascii_uppercase();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == upper)
            .ok_or_else(|| {
                let names: Vec<&str> = Scheme::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown scheme '{s}'; expected one of {}", names.join(", ")))
            })
    }
}

impl TryFrom<String> for Scheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.name().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("dnnrd-mrc".parse::<Scheme>().unwrap(), Scheme::DnnrdMrc);
        assert!("CRIS-XYZ".parse::<Scheme>().is_err());
    }

    #[test]
    fn modes_follow_prefix() {
        assert_eq!(Scheme::CrisMl.phase_mode(), PhaseMode::Ideal);
        assert_eq!(Scheme::DnnrMrc.phase_mode(), PhaseMode::Dnn);
        assert_eq!(Scheme::DnnrMrc.detector_mode(), DetectorMode::Ml);
        assert_eq!(Scheme::DnnrdRs.detector_mode(), DetectorMode::Dnn);
        assert_eq!(Scheme::DnnrdRs.destination_model(), Some(CombiningMode::Branch));
        assert_eq!(Scheme::CrisRs.combining(), Combining::RelaySelection);
    }
}
