//! Plain-text file formats.
//!
//! ```text
//! tensor N I₁ … I_N          factor rows cols        cpmodel N F
//! v v v …  (vec order)        row-major values         N factor blocks
//!
//! measurements M
//! one value per line
//! ```
//!
//! Values are written with 17 significant digits so they round-trip exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sensing::MeasurementVector;
use crate::tensor::{CpModel, DenseTensor, Shape};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")
}

pub fn tensor_to_text(x: &DenseTensor) -> String {
    let dims: Vec<String> = x.shape().dims().iter().map(ToString::to_string).collect();
    let mut out = format!("tensor {} {}\n", x.shape().order(), dims.join(" "));
    let last = *x.shape().dims().last().expect("order >= 2");
    for chunk in x.values().chunks(last) {
        out.push_str(&join(chunk));
        out.push('\n');
    }
    out
}

fn factor_block(a: &Matrix, out: &mut String) {
    out.push_str(&format!("factor {} {}\n", a.rows(), a.cols()));
    for i in 0..a.rows() {
        out.push_str(&join(a.row(i)));
        out.push('\n');
    }
}

pub fn factor_to_text(a: &Matrix) -> String {
    let mut out = String::new();
    factor_block(a, &mut out);
    out
}

pub fn model_to_text(model: &CpModel) -> String {
    let mut out = format!("cpmodel {} {}\n", model.order(), model.rank());
    for a in model.factors() {
        factor_block(a, &mut out);
    }
    out
}

pub fn measurements_to_text(y: &MeasurementVector) -> String {
    let mut out = format!("measurements {}\n", y.len());
    for &v in y.values() {
        out.push_str(&fmt_f64(v));
        out.push('\n');
    }
    out
}

/// Token stream over a text file that remembers line numbers for errors.
struct Tokens<'a> {
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let tokens = text
            .lines()
            .enumerate()
            .flat_map(|(n, line)| line.split_whitespace().map(move |t| (n + 1, t)))
            .collect();
        Self { tokens, pos: 0 }
    }

    fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map_or(1, |t| t.0)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line(),
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        let tok = self
            .tokens
            .get(self.pos)
            .map(|t| t.1)
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let tok = self.next()?;
        if tok != kw {
            self.pos -= 1;
            return Err(self.err(format!("expected `{kw}`, found `{tok}`")));
        }
        Ok(())
    }

    fn usize(&mut self) -> Result<usize> {
        let tok = self.next()?;
        tok.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected a nonnegative integer, found `{tok}`"))
        })
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n)
            .map(|_| {
                let tok = self.next()?;
                match tok.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => {
                        self.pos -= 1;
                        Err(self.err(format!("expected a finite number, found `{tok}`")))
                    }
                }
            })
            .collect()
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.tokens.len() {
            return Err(self.err(format!("trailing data `{}`", self.tokens[self.pos].1)));
        }
        Ok(())
    }
}

fn parse_factor(t: &mut Tokens<'_>) -> Result<Matrix> {
    t.keyword("factor")?;
    let rows = t.usize()?;
    let cols = t.usize()?;
    let values = t.f64s(rows * cols)?;
    Matrix::new(rows, cols, values)
}

pub fn tensor_from_text(text: &str) -> Result<DenseTensor> {
    let mut t = Tokens::new(text);
    t.keyword("tensor")?;
    let order = t.usize()?;
    let dims = (0..order).map(|_| t.usize()).collect::<Result<Vec<_>>>()?;
    let shape = Shape::new(dims)?;
    let values = t.f64s(shape.numel())?;
    t.finish()?;
    DenseTensor::new(shape, values)
}

pub fn factor_from_text(text: &str) -> Result<Matrix> {
    let mut t = Tokens::new(text);
    let a = parse_factor(&mut t)?;
    t.finish()?;
    Ok(a)
}

pub fn model_from_text(text: &str) -> Result<CpModel> {
    let mut t = Tokens::new(text);
    t.keyword("cpmodel")?;
    let order = t.usize()?;
    let rank = t.usize()?;
    let factors = (0..order)
        .map(|_| parse_factor(&mut t))
        .collect::<Result<Vec<_>>>()?;
    t.finish()?;
    if let Some(a) = factors.iter().find(|a| a.cols() != rank) {
        return Err(Error::DimensionMismatch(format!(
            "header declares rank {rank}, factor has {} columns",
            a.cols()
        )));
    }
    CpModel::new(factors)
}

pub fn measurements_from_text(text: &str) -> Result<MeasurementVector> {
    let mut t = Tokens::new(text);
    t.keyword("measurements")?;
    let m = t.usize()?;
    let values = t.f64s(m)?;
    t.finish()?;
    Ok(MeasurementVector(values))
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor> {
    tensor_from_text(&fs::read_to_string(path)?)
}

pub fn write_tensor(path: &Path, x: &DenseTensor) -> Result<()> {
    Ok(fs::write(path, tensor_to_text(x))?)
}

pub fn read_model(path: &Path) -> Result<CpModel> {
    model_from_text(&fs::read_to_string(path)?)
}

pub fn write_model(path: &Path, model: &CpModel) -> Result<()> {
    Ok(fs::write(path, model_to_text(model))?)
}

pub fn read_measurements(path: &Path) -> Result<MeasurementVector> {
    measurements_from_text(&fs::read_to_string(path)?)
}

pub fn write_measurements(path: &Path, y: &MeasurementVector) -> Result<()> {
    Ok(fs::write(path, measurements_to_text(y))?)
}
