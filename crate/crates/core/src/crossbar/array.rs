use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::quantizer::QuantSpec;
use crate::scalar::Scalar;
use crate::seed::Rng;

use super::config::CrossbarConfig;

/// Weight array after programming: one signed effective conductance per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgrammedArray<S> {
    g_eff: Matrix<S>,
    source_codes: Vec<u32>,
    /// Weight-unit values the conductances represent.
    weights: Matrix<S>,
}

/// Quantizes `weights` with the array's weight grid and maps them to conductances.
pub fn program<S: Scalar>(weights: &Matrix<S>, cfg: &CrossbarConfig<S>) -> Result<ProgrammedArray<S>> {
    if weights.shape() != (cfg.rows, cfg.cols) {
        return Err(Error::dim(
            "weight matrix",
            format!("{}x{}", cfg.rows, cfg.cols),
            format!("{}x{}", weights.rows(), weights.cols()),
        ));
    }
    if !weights.is_finite() {
        return Err(Error::NonFinite("weights to program"));
    }
    let spec = &cfg.weight_spec;
    let source_codes: Vec<u32> = weights.as_slice().iter().map(|&w| spec.code(w)).collect();
    let quantized: Vec<S> = source_codes.iter().map(|&k| spec.value(k)).collect();
    let weights = Matrix::from_vec(cfg.rows, cfg.cols, quantized).expect("shape preserved");
    let per_weight = cfg.conductance_per_weight();
    let g_eff = weights.map(|w| w * per_weight);
    Ok(ProgrammedArray { g_eff, source_codes, weights })
}

impl<S: Scalar> ProgrammedArray<S> {
    pub fn g_eff(&self) -> &Matrix<S> {
        &self.g_eff
    }

    pub fn source_codes(&self) -> &[u32] {
        &self.source_codes
    }

    pub fn shape(&self) -> (usize, usize) {
        self.g_eff.shape()
    }

    pub(crate) fn weights(&self) -> &Matrix<S> {
        &self.weights
    }

    /// Inverse conductance map, snapped to the nearest weight level.
    pub fn read_back(&self, cfg: &CrossbarConfig<S>) -> Matrix<S> {
        let per_weight = cfg.conductance_per_weight();
        self.g_eff.map(|g| cfg.weight_spec.quantize(g / per_weight))
    }

    /// Copy with one fixed Gaussian perturbation of every weight, `σ` in weight units.
    ///
    /// Models programming error; the perturbed array is reused for every read.
    pub fn perturbed(&self, cfg: &CrossbarConfig<S>, sigma: S, rng: &mut Rng) -> Self {
        let weights = self.weights.map(|w| w + sigma * S::standard_normal(rng));
        let per_weight = cfg.conductance_per_weight();
        Self { g_eff: weights.map(|w| w * per_weight), source_codes: self.source_codes.clone(), weights }
    }

    /// Writes the array in the text format described in `docs/array-format.md`.
    pub fn write_to<W: Write>(&self, cfg: &CrossbarConfig<S>, mut out: W) -> Result<()> {
        let io = |e| Error::Format(format!("write failed: {e}"));
        let (rows, cols) = self.shape();
        let spec = &cfg.weight_spec;
        writeln!(out, "{MAGIC}").map_err(io)?;
        writeln!(out, "rows {rows}").map_err(io)?;
        writeln!(out, "cols {cols}").map_err(io)?;
        writeln!(out, "weight_bits {}", spec.bits()).map_err(io)?;
        writeln!(out, "w_min {:?}", spec.v_min().as_f64()).map_err(io)?;
        writeln!(out, "w_max {:?}", spec.v_max().as_f64()).map_err(io)?;
        writeln!(out, "g_min {:?}", cfg.g_min.as_f64()).map_err(io)?;
        writeln!(out, "g_max {:?}", cfg.g_max.as_f64()).map_err(io)?;
        writeln!(out, "codes").map_err(io)?;
        for r in 0..rows {
            let line: Vec<String> = self.source_codes[r * cols..(r + 1) * cols].iter().map(u32::to_string).collect();
            writeln!(out, "{}", line.join(" ")).map_err(io)?;
        }
        writeln!(out, "conductances").map_err(io)?;
        for r in 0..rows {
            let line: Vec<String> = self.g_eff.row(r).iter().map(|g| format!("{:?}", g.as_f64())).collect();
            writeln!(out, "{}", line.join(" ")).map_err(io)?;
        }
        Ok(())
    }

    /// Reads an array written by [`ProgrammedArray::write_to`].
    pub fn read_from<R: BufRead>(input: R) -> Result<(ArrayHeader<S>, Self)> {
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Format("unexpected end of file".into()))?
                .map_err(|e| Error::Format(e.to_string()))
        };
        if next()?.trim() != MAGIC {
            return Err(Error::Format(format!("missing `{MAGIC}` header")));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = next()?;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(v), None) if k == name => Ok(v.to_string()),
                _ => Err(Error::Format(format!("expected `{name} <value>`, found `{line}`"))),
            }
        };
        let num = |s: String| s.parse::<f64>().map_err(|e| Error::Format(format!("{s}: {e}")));
        let int = |s: String| s.parse::<usize>().map_err(|e| Error::Format(format!("{s}: {e}")));
        let rows = int(field("rows")?)?;
        let cols = int(field("cols")?)?;
        let bits = int(field("weight_bits")?)? as u32;
        let w_min = num(field("w_min")?)?;
        let w_max = num(field("w_max")?)?;
        let g_min = num(field("g_min")?)?;
        let g_max = num(field("g_max")?)?;
        let weight_spec = QuantSpec::new(bits, S::lit(w_min), S::lit(w_max))?;

        let mut section = |name: &str| -> Result<Vec<String>> {
            let head = next()?;
            if head.trim() != name {
                return Err(Error::Format(format!("expected section `{name}`, found `{head}`")));
            }
            let mut tokens = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                let line = next()?;
                let row: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                if row.len() != cols {
                    return Err(Error::Format(format!("{name} row {r} has {} entries, expected {cols}", row.len())));
                }
                tokens.extend(row);
            }
            Ok(tokens)
        };
        let source_codes = section("codes")?
            .into_iter()
            .map(|t| t.parse::<u32>().map_err(|e| Error::Format(format!("{t}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&bad) = source_codes.iter().find(|&&k| k >= weight_spec.levels()) {
            return Err(Error::CodeOutOfRange { code: bad, bits });
        }
        let g = section("conductances")?.into_iter().map(|t| num(t).map(S::lit)).collect::<Result<Vec<_>>>()?;
        let g_eff = Matrix::from_vec(rows, cols, g).expect("row count checked");
        let g_min = S::lit(g_min);
        let g_max = S::lit(g_max);
        let scale = weight_spec.v_min().abs().max(weight_spec.v_max().abs());
        let per_weight = (g_max - g_min) / scale;
        let weights = g_eff.map(|g| g / per_weight);
        let header = ArrayHeader { rows, cols, weight_spec, g_min, g_max };
        Ok((header, Self { g_eff, source_codes, weights }))
    }
}

const MAGIC: &str = "nvm-crossbar v1";

/// Metadata stored alongside a dumped array.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrayHeader<S> {
    pub rows: usize,
    pub cols: usize,
    pub weight_spec: QuantSpec<S>,
    pub g_min: S,
    pub g_max: S,
}
