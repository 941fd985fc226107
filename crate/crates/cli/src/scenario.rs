//! Scenario construction from command-line arguments and JSON files.

use curtain_core::json::MeasureLiteral;
use curtain_core::peacock::{Curve, Peacock};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
struct CurvesFile {
    curves: Vec<CurveLiteral>,
    domain: [f64; 2],
}

#[derive(Debug, Deserialize)]
struct CurveLiteral {
    x: Vec<f64>,
    a: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct GridFile {
    times: Vec<f64>,
    measures: Vec<MeasureLiteral>,
}

/// Builds a scenario from the `--scenario` arguments: a name, optionally
/// followed by a file path for `curves` and `grid`.
pub fn load(args: &[String], level: usize) -> Result<Peacock, CliError> {
    let name = args.first().map(String::as_str).unwrap_or("");
    match name {
        "uniform" => Ok(Peacock::UniformExp),
        "threepoint" => Ok(Peacock::ThreePoint),
        "stocking" => Ok(Peacock::stocking(level)),
        "curves" => {
            let path = args
                .get(1)
                .ok_or_else(|| CliError::schema("curves scenario needs a file argument"))?;
            let text = std::fs::read_to_string(path).map_err(CliError::io)?;
            let parsed: CurvesFile =
                serde_json::from_str(&text).map_err(|e| CliError::schema(e.to_string()))?;
            if parsed.domain[1] <= parsed.domain[0] {
                return Err(CliError::schema("curves domain must be increasing"));
            }
            if parsed.curves.is_empty() {
                return Err(CliError::schema("curves scenario needs at least one curve"));
            }
            Ok(Peacock::FiniteCurves {
                curves: parsed
                    .curves
                    .into_iter()
                    .map(|c| Curve { x: c.x, a: c.a })
                    .collect(),
                domain: (parsed.domain[0], parsed.domain[1]),
            })
        }
        "grid" => {
            let path = args
                .get(1)
                .ok_or_else(|| CliError::schema("grid scenario needs a file argument"))?;
            let text = std::fs::read_to_string(path).map_err(CliError::io)?;
            let parsed: GridFile =
                serde_json::from_str(&text).map_err(|e| CliError::schema(e.to_string()))?;
            if parsed.times.len() != parsed.measures.len() || parsed.times.len() < 2 {
                return Err(CliError::schema("grid needs matching times and measures"));
            }
            let measures = parsed
                .measures
                .iter()
                .map(|m| m.to_measure().map_err(|e| CliError::schema(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Peacock::Grid { times: parsed.times, measures })
        }
        other => Err(CliError::schema(format!("unknown scenario '{other}'"))),
    }
}
