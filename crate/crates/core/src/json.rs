//! JSON literals for measures and couplings.
//!
//! A measure literal is `{"atoms": [[x, w], ...], "uniform": [[a, b, w], ...]}`
//! where `w` is the total mass of the atom or block. Both arrays are
//! optional; the parser validates `w > 0` and `a < b`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curtain::{Coupling, CouplingSource};
use crate::measure::Measure;

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("invalid measure literal: {0}")]
    Schema(String),
    #[error(transparent)]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MeasureLiteral {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub uniform: Vec<[f64; 3]>,
}

impl MeasureLiteral {
    pub fn to_measure(&self) -> Result<Measure, JsonError> {
        let mut terms: Vec<Measure> = Vec::new();
        for &[x, w] in &self.atoms {
            if !(w > 0.0) || !x.is_finite() {
                return Err(JsonError::Schema(format!("atom [{x}, {w}] needs finite x, w > 0")));
            }
            terms.push(Measure::dirac(x, w));
        }
        for &[a, b, w] in &self.uniform {
            if !(w > 0.0) || !(a < b) {
                return Err(JsonError::Schema(format!(
                    "uniform block [{a}, {b}, {w}] needs a < b and w > 0"
                )));
            }
            terms.push(Measure::uniform(a, b, w));
        }
        if terms.is_empty() {
            return Err(JsonError::Schema("measure literal has no mass".into()));
        }
        let refs: Vec<(f64, &Measure)> = terms.iter().map(|m| (1.0, m)).collect();
        Ok(Measure::combine(&refs))
    }

    pub fn from_measure(mu: &Measure) -> MeasureLiteral {
        let sf = mu.spatial_form();
        MeasureLiteral {
            atoms: sf.atoms.iter().map(|&(x, w)| [x, w]).collect(),
            uniform: sf.blocks.iter().map(|&(a, b, d)| [a, b, d * (b - a)]).collect(),
        }
    }
}

pub fn measure_from_json(text: &str) -> Result<Measure, JsonError> {
    let lit: MeasureLiteral = serde_json::from_str(text)?;
    lit.to_measure()
}

pub fn measure_to_json(mu: &Measure) -> String {
    serde_json::to_string_pretty(&MeasureLiteral::from_measure(mu)).expect("measure serializes")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingSourceLiteral {
    pub x: f64,
    pub w: f64,
    pub target: MeasureLiteral,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingLiteral {
    pub sources: Vec<CouplingSourceLiteral>,
    pub residual: f64,
    pub cost: f64,
}

impl CouplingLiteral {
    pub fn from_coupling(pi: &Coupling) -> CouplingLiteral {
        let (residual, cost) = crate::curtain::martingale_cost(pi);
        CouplingLiteral {
            sources: pi
                .sources
                .iter()
                .map(|s| CouplingSourceLiteral {
                    x: s.x,
                    w: s.weight,
                    target: MeasureLiteral::from_measure(&s.target),
                })
                .collect(),
            residual,
            cost,
        }
    }

    pub fn to_coupling(&self) -> Result<Coupling, JsonError> {
        Ok(Coupling {
            sources: self
                .sources
                .iter()
                .map(|s| {
                    Ok(CouplingSource { x: s.x, weight: s.w, target: s.target.to_measure()? })
                })
                .collect::<Result<_, JsonError>>()?,
        })
    }
}
