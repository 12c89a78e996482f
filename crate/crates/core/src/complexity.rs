//! Real-multiplication counts of the destination detectors.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DetectorScheme {
    Rs,
    Mrc,
    Ml,
    Dnn,
}

impl DetectorScheme {
    pub fn name(self) -> &'static str {
        match self {
            DetectorScheme::Rs => "RS",
            DetectorScheme::Mrc => "MRC",
            DetectorScheme::Ml => "ML",
            DetectorScheme::Dnn => "DNN",
        }
    }
}

/// Input size, hidden widths and output size of a dense network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnnProfile {
    pub name: String,
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub outputs: usize,
}

impl DnnProfile {
    pub fn new(name: &str, inputs: usize, hidden: Vec<usize>, outputs: usize) -> Self {
        DnnProfile {
            name: name.to_string(),
            inputs,
            hidden,
            outputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityQuery {
    pub scheme: DetectorScheme,
    pub l: usize,
    pub m: usize,
    pub n: usize,
    pub dnn_profile: Option<DnnProfile>,
}

/// Multiplications per detected symbol:
///
/// * RS: `N + 4M`
/// * MRC: `L(N + 1) + 4M`
/// * ML: `LN + 4 L^2 M`
/// * DNN: `p n_1 + o n_K + sum_k n_k n_{k+1}`
pub fn op_count(q: &ComplexityQuery) -> Result<u64> {
    let (l, m, n) = (q.l as u64, q.m as u64, q.n as u64);
    match q.scheme {
        DetectorScheme::Rs | DetectorScheme::Mrc | DetectorScheme::Ml if l == 0 || m == 0 || n == 0 => {
            Err(Error::invalid("L, M and N must be positive"))
        }
        DetectorScheme::Rs => Ok(n + 4 * m),
        DetectorScheme::Mrc => Ok(l * (n + 1) + 4 * m),
        DetectorScheme::Ml => Ok(l * n + 4 * l * l * m),
        DetectorScheme::Dnn => {
            let p = q
                .dnn_profile
                .as_ref()
                .ok_or_else(|| Error::invalid("DNN complexity needs a network profile"))?;
            if p.inputs == 0 || p.outputs == 0 || p.hidden.is_empty() || p.hidden.contains(&0) {
                return Err(Error::invalid("DNN profile sizes must be positive with at least one hidden layer"));
            }
            let first = p.inputs as u64 * p.hidden[0] as u64;
            let last = p.outputs as u64 * *p.hidden.last().expect("non-empty") as u64;
            let inner: u64 = p.hidden.windows(2).map(|w| w[0] as u64 * w[1] as u64).sum();
            Ok(first + last + inner)
        }
    }
}

/// A named `(L, M, N)` operating point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub l: usize,
    pub m: usize,
    pub n: usize,
}

/// The three reference scenarios of the complexity comparison.
pub fn reference_scenarios() -> Vec<Scenario> {
    [("S1", 4, 4, 16), ("S2", 6, 8, 32), ("S3", 24, 16, 128)]
        .into_iter()
        .map(|(name, l, m, n)| Scenario {
            name: name.to_string(),
            l,
            m,
            n,
        })
        .collect()
}

/// Destination network profiles DNN-1..3 with `p = 2` inputs and `o` outputs.
pub fn reference_dnn_profiles(outputs: usize) -> Vec<DnnProfile> {
    vec![
        DnnProfile::new("DNN-1", 2, vec![256; 4], outputs),
        DnnProfile::new("DNN-2", 2, vec![16; 2], outputs),
        DnnProfile::new("DNN-3", 2, vec![8; 2], outputs),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub scheme: String,
    pub scenario: String,
    pub parameters: String,
    pub count: u64,
}

/// One row per (scenario, RS/MRC/ML) followed by one row per network profile.
pub fn complexity_table(scenarios: &[Scenario], profiles: &[DnnProfile]) -> Result<Vec<ComplexityRow>> {
    let mut rows = Vec::new();
    for s in scenarios {
        for scheme in [DetectorScheme::Rs, DetectorScheme::Mrc, DetectorScheme::Ml] {
            let q = ComplexityQuery {
                scheme,
                l: s.l,
                m: s.m,
                n: s.n,
                dnn_profile: None,
            };
            rows.push(ComplexityRow {
                scheme: scheme.name().to_string(),
                scenario: s.name.clone(),
                parameters: format!("L={} M={} N={}", s.l, s.m, s.n),
                count: op_count(&q)?,
            });
        }
    }
    for p in profiles {
        let q = ComplexityQuery {
            scheme: DetectorScheme::Dnn,
            l: 0,
            m: 0,
            n: 0,
            dnn_profile: Some(p.clone()),
        };
        let hidden: Vec<String> = p.hidden.iter().map(|h| h.to_string()).collect();
        rows.push(ComplexityRow {
            scheme: p.name.clone(),
            scenario: "-".to_string(),
            parameters: format!("p={} hidden={} o={}", p.inputs, hidden.join("x"), p.outputs),
            count: op_count(&q)?,
        });
    }
    Ok(rows)
}

pub fn write_complexity_csv<W: Write>(rows: &[ComplexityRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(|e| Error::io("<complexity>", e))
}
