use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::hilbert::HilbertSpec;
use crate::error::{Error, Result};

/// Sparse complex operator on a [`HilbertSpec`], stored row-compressed with
/// column indices sorted inside each row. Construction goes through an
/// ordered map so identical inputs always produce identical storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    spec: HilbertSpec,
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Operator {
    pub fn from_triplets<I>(spec: HilbertSpec, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let dim = spec.total_dim();
        let mut map: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            *map.entry((r, c)).or_default() += v;
        }
        Self::from_sorted(spec, map.into_iter().filter(|(_, v)| *v != C64::new(0.0, 0.0)))
    }

    fn from_sorted<I>(spec: HilbertSpec, sorted: I) -> Self
    where
        I: IntoIterator<Item = ((usize, usize), C64)>,
    {
        let dim = spec.total_dim();
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for ((r, c), v) in sorted {
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            spec,
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn zeros(spec: HilbertSpec) -> Self {
        Self::from_triplets(spec, std::iter::empty())
    }

    pub fn identity(spec: HilbertSpec) -> Self {
        let dim = spec.total_dim();
        Self::from_triplets(spec, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(spec: HilbertSpec, diag: &[f64]) -> Result<Self> {
        if diag.len() != spec.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "diagonal",
                expected: spec.total_dim(),
                found: diag.len(),
            });
        }
        Ok(Self::from_triplets(
            spec,
            diag.iter().enumerate().map(|(i, &d)| (i, i, C64::new(d, 0.0))),
        ))
    }

    pub fn from_dense(spec: HilbertSpec, m: &DMatrix<C64>) -> Result<Self> {
        let dim = spec.total_dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch {
                context: "from_dense",
                expected: dim,
                found: m.nrows(),
            });
        }
        let mut entries = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    entries.push(((r, c), v));
                }
            }
        }
        Ok(Self::from_sorted(spec, entries))
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[C64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Iterate `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.spec.clone(), self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        if s == C64::new(0.0, 0.0) {
            return Self::zeros(self.spec.clone());
        }
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch("operator sum"));
        }
        Ok(Self::from_triplets(self.spec.clone(), self.iter().chain(other.iter())))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch("operator product"));
        }
        let mut entries = Vec::new();
        let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
        for r in 0..self.dim {
            acc.clear();
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (cols2, vals2) = other.row(k);
                for (&c, &b) in cols2.iter().zip(vals2) {
                    *acc.entry(c).or_default() += a * b;
                }
            }
            entries.extend(
                acc.iter()
                    .filter(|(_, v)| **v != C64::new(0.0, 0.0))
                    .map(|(&c, &v)| ((r, c), v)),
            );
        }
        Ok(Self::from_sorted(self.spec.clone(), entries))
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(&self.checked_mul(other)? - &other.checked_mul(self)?)
    }

    /// Kronecker product; the result lives on `self.spec ⊗ other.spec`.
    pub fn kron(&self, other: &Self) -> Self {
        let spec = self.spec.tensor(&other.spec);
        let d2 = other.dim;
        let mut entries = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.iter() {
            for (r2, c2, v2) in other.iter() {
                entries.push((r1 * d2 + r2, c1 * d2 + c2, v1 * v2));
            }
        }
        Self::from_triplets(spec, entries)
    }

    /// Same matrix relabelled onto another space of equal total dimension.
    pub fn with_spec(&self, spec: HilbertSpec) -> Result<Self> {
        if spec.total_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "with_spec",
                expected: self.dim,
                found: spec.total_dim(),
            });
        }
        let mut out = self.clone();
        out.spec = spec;
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise `|A − A†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() < 1e-12
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *out = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.apply(x, &mut y);
        y
    }

    pub(crate) fn raw(&self) -> (&[usize], &[usize], &[C64]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }
}

impl Add for &Operator {
    type Output = Operator;

    /// Panics if the operands live on different spaces.
    fn add(self, rhs: &Operator) -> Operator {
        self.checked_add(rhs).expect("operator sum on mismatched spaces")
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        self.checked_add(&rhs.scale_real(-1.0))
            .expect("operator difference on mismatched spaces")
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.checked_mul(rhs).expect("operator product on mismatched spaces")
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

/// Sum of operators on a shared space; `None` for an empty list.
pub fn sum_operators<'a, I>(ops: I) -> Option<Operator>
where
    I: IntoIterator<Item = &'a Operator>,
{
    let mut it = ops.into_iter();
    let first = it.next()?;
    let spec = first.spec().clone();
    let entries: Vec<_> = std::iter::once(first)
        .chain(it)
        .flat_map(|op| {
            assert_eq!(op.spec(), &spec, "operator sum on mismatched spaces");
            op.iter()
        })
        .collect();
    Some(Operator::from_triplets(spec, entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn product_matches_dense() {
        let spec = HilbertSpec::single(3);
        let a = Operator::from_triplets(
            spec.clone(),
            [(0, 1, c(1.0, 2.0)), (2, 0, c(-1.0, 0.5)), (1, 1, c(0.0, 1.0))],
        );
        let b = Operator::from_triplets(spec, [(1, 2, c(3.0, 0.0)), (0, 0, c(0.5, -1.0))]);
        let dense = a.to_dense() * b.to_dense();
        let sparse = (&a * &b).to_dense();
        assert!((dense - sparse).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn adjoint_and_hermiticity() {
        let spec = HilbertSpec::single(2);
        let a = Operator::from_triplets(spec, [(0, 1, c(1.0, 1.0))]);
        assert!(!a.is_hermitian());
        assert!((&a + &a.adjoint()).is_hermitian());
        assert_eq!(a.adjoint().get(1, 0), c(1.0, -1.0));
    }

    #[test]
    fn cancellation_drops_entries() {
        let spec = HilbertSpec::single(2);
        let a = Operator::from_triplets(spec, [(0, 1, c(1.0, 0.0))]);
        assert_eq!((&a - &a).nnz(), 0);
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let a = Operator::identity(HilbertSpec::single(2));
        let b = Operator::identity(HilbertSpec::single(3));
        assert!(matches!(a.checked_mul(&b), Err(Error::SpecMismatch(_))));
    }
}
