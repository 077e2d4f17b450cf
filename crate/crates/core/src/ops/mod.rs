//! Sparse operators and states on composite spaces of truncated bosonic
//! modes and qubits.
//!
//! Basis conventions: qubit `|0⟩` is the ground state with `σ_z = −1`, and
//! `σ_y = [[0, i], [−i, 0]]`, so that `σ_x σ_y = i σ_z` and `σ_+ = |1⟩⟨0|`.
//! Composite indices are row-major over the subsystem list, first slot most
//! significant.

mod hilbert;
mod operator;
pub(crate) mod state;

use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub use hilbert::{HilbertSpec, Subsystem};
pub use operator::{sum_operators, Operator};
pub use state::{expect, expect_real, partial_trace, QuantumState, StateDiagnostics};

use crate::error::{Error, Result};

#[cfg(test)]
pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Truncated annihilation operator with `d` Fock levels.
pub fn destroy(d: usize) -> Result<Operator> {
    if d < 2 {
        return Err(Error::InvalidCutoff(d));
    }
    Ok(Operator::from_triplets(
        HilbertSpec::single(d),
        (0..d - 1).map(|k| (k, k + 1, C64::new(((k + 1) as f64).sqrt(), 0.0))),
    ))
}

/// Truncated number operator `a†a`.
pub fn number(d: usize) -> Result<Operator> {
    let diag: Vec<f64> = (0..d).map(|k| k as f64).collect();
    if d < 2 {
        return Err(Error::InvalidCutoff(d));
    }
    Operator::diagonal(HilbertSpec::single(d), &diag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl FromStr for PauliAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(PauliAxis::X),
            "y" => Ok(PauliAxis::Y),
            "z" => Ok(PauliAxis::Z),
            "plus" | "+" => Ok(PauliAxis::Plus),
            "minus" | "-" => Ok(PauliAxis::Minus),
            _ => Err(Error::UnknownAxis(s.to_string())),
        }
    }
}

pub fn pauli(axis: PauliAxis) -> Operator {
    let spec = HilbertSpec::single(2);
    let entries: Vec<(usize, usize, C64)> = match axis {
        PauliAxis::X => vec![(0, 1, ONE), (1, 0, ONE)],
        PauliAxis::Y => vec![(0, 1, I), (1, 0, -I)],
        PauliAxis::Z => vec![(0, 0, -ONE), (1, 1, ONE)],
        PauliAxis::Plus => vec![(1, 0, ONE)],
        PauliAxis::Minus => vec![(0, 1, ONE)],
    };
    Operator::from_triplets(spec, entries)
}

/// Lift a single-factor operator into `spec`, acting as identity elsewhere.
pub fn embed(op: &Operator, slot: usize, spec: &HilbertSpec) -> Result<Operator> {
    spec.check_slot(slot)?;
    let d = spec.dims()[slot];
    if op.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "embed",
            expected: d,
            found: op.dim(),
        });
    }
    let left: usize = spec.dims()[..slot].iter().product();
    let right: usize = spec.dims()[slot + 1..].iter().product();
    let mut entries = Vec::with_capacity(op.nnz() * left * right);
    for l in 0..left {
        for (i, j, v) in op.iter() {
            let row0 = (l * d + i) * right;
            let col0 = (l * d + j) * right;
            for r in 0..right {
                entries.push((row0 + r, col0 + r, v));
            }
        }
    }
    Ok(Operator::from_triplets(spec.clone(), entries))
}

/// Dense-path size limit for [`matrix_exp_small`].
pub const DENSE_EXP_LIMIT: usize = 64;

/// `exp(scale · A)` by scaling and squaring with a Taylor core.
pub fn matrix_exp_small(op: &Operator, scale: C64) -> Result<Operator> {
    if op.dim() > DENSE_EXP_LIMIT {
        return Err(Error::TooLarge {
            dim: op.dim(),
            limit: DENSE_EXP_LIMIT,
            hint: "use an iterative propagator for large operators",
        });
    }
    let a = op.to_dense() * scale;
    Operator::from_dense(op.spec().clone(), &expm_dense(&a))
}

pub(crate) fn expm_dense(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|c| a.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.5 {
        squarings = (norm1 / 0.5).log2().ceil() as u32;
    }
    let scaled = a / C64::new(2f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    // ‖A‖ ≤ 1/2: order 24 is far below machine precision.
    for k in 1..=24 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
