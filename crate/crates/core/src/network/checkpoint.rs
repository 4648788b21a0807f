//! Text checkpoint format.
//!
//! ```text
//! #smlp-checkpoint v1
//! seed 7
//! architecture 28-64-6
//! layer 0 0 28 64 relu
//! W <row-major weights>
//! b <biases>
//! ...
//! #mean <28 reals>      (optional normalizer)
//! #std <28 reals>
//! ```
//!
//! Reals are written in shortest round-trip form, so loading reproduces
//! every parameter bit for bit.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{parse_architecture, Activation, Dense, LayerSpec, MlpUnit, SmlpModel};
use crate::datamodel::{join_reals, FeatureStats, FEATURE_COUNT};
use crate::error::{Error, Result};

const HEADER: &str = "#smlp-checkpoint v1";

/// A trained model plus the normalizer its inputs expect.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: SmlpModel,
    pub stats: Option<FeatureStats>,
}

fn parse_list(s: &str, what: &str, expected: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = s
        .split_ascii_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::data(format!("checkpoint: bad real '{t}' in {what}"))))
        .collect::<Result<_>>()?;
    if values.len() != expected {
        return Err(Error::data(format!(
            "checkpoint: {what} has {} values, expected {expected}",
            values.len()
        )));
    }
    Ok(values)
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<checkpoint>", e);
        writeln!(w, "{HEADER}").map_err(io)?;
        writeln!(w, "seed {}", self.model.seed()).map_err(io)?;
        writeln!(w, "architecture {}", super::format_architecture(&self.model.architecture())).map_err(io)?;
        for (u, unit) in self.model.units().iter().enumerate() {
            for (l, layer) in unit.layers.iter().enumerate() {
                let s = layer.spec;
                writeln!(w, "layer {u} {l} {} {} {}", s.input_dim, s.output_dim, s.activation.name()).map_err(io)?;
                writeln!(w, "W {}", join_reals(&layer.weights)).map_err(io)?;
                writeln!(w, "b {}", join_reals(&layer.bias)).map_err(io)?;
            }
        }
        if let Some(stats) = &self.stats {
            writeln!(w, "#mean {}", join_reals(&stats.mean)).map_err(io)?;
            writeln!(w, "#std {}", join_reals(&stats.std)).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let lines: Vec<String> = r
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io("<checkpoint>", e))?;
        let mut it = lines.iter().map(|l| l.trim_end()).filter(|l| !l.is_empty());
        if it.next() != Some(HEADER) {
            return Err(Error::data(format!("checkpoint must start with '{HEADER}'")));
        }
        let seed: u64 = it
            .next()
            .and_then(|l| l.strip_prefix("seed "))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::data("checkpoint: missing 'seed' line"))?;
        let arch = it
            .next()
            .and_then(|l| l.strip_prefix("architecture "))
            .ok_or_else(|| Error::data("checkpoint: missing 'architecture' line"))
            .and_then(|a| parse_architecture(a).map_err(|e| Error::data(e.to_string())))?;

        let mut units: Vec<MlpUnit> = arch.iter().map(|_| MlpUnit { layers: vec![] }).collect();
        let mut mean = None;
        let mut std = None;
        while let Some(line) = it.next() {
            if let Some(rest) = line.strip_prefix("layer ") {
                let f: Vec<&str> = rest.split_ascii_whitespace().collect();
                let bad = || Error::data(format!("checkpoint: malformed layer line '{line}'"));
                if f.len() != 5 {
                    return Err(bad());
                }
                let nums: Vec<usize> = f[..4].iter().map(|v| v.parse().map_err(|_| bad())).collect::<Result<_>>()?;
                let spec = LayerSpec {
                    input_dim: nums[2],
                    output_dim: nums[3],
                    activation: Activation::parse(f[4])?,
                };
                let unit = units.get_mut(nums[0]).ok_or_else(bad)?;
                if unit.layers.len() != nums[1] {
                    return Err(bad());
                }
                let weights = it
                    .next()
                    .and_then(|l| l.strip_prefix("W "))
                    .ok_or_else(|| Error::data("checkpoint: missing W line"))?;
                let bias = it
                    .next()
                    .and_then(|l| l.strip_prefix("b "))
                    .ok_or_else(|| Error::data("checkpoint: missing b line"))?;
                unit.layers.push(Dense {
                    spec,
                    weights: parse_list(weights, "W", spec.input_dim * spec.output_dim)?,
                    bias: parse_list(bias, "b", spec.output_dim)?,
                });
            } else if let Some(rest) = line.strip_prefix("#mean ") {
                mean = Some(parse_list(rest, "#mean", FEATURE_COUNT)?);
            } else if let Some(rest) = line.strip_prefix("#std ") {
                std = Some(parse_list(rest, "#std", FEATURE_COUNT)?);
            } else if !line.starts_with('#') {
                return Err(Error::data(format!("checkpoint: unexpected line '{line}'")));
            }
        }
        let model = SmlpModel::from_units(units, seed).map_err(|e| Error::data(e.to_string()))?;
        if model.architecture() != arch {
            return Err(Error::data("checkpoint: layers disagree with the declared architecture"));
        }
        let stats = match (mean, std) {
            (Some(m), Some(s)) => Some(FeatureStats {
                mean: m.try_into().expect("length checked"),
                std: s.try_into().expect("length checked"),
            }),
            (None, None) => None,
            _ => return Err(Error::data("checkpoint: #mean and #std must appear together")),
        };
        Ok(Checkpoint { model, stats })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}
