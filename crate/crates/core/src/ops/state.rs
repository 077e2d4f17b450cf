use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::hilbert::HilbertSpec;
use super::operator::Operator;
use crate::error::{Error, Result};

/// Pure or mixed state on a composite space.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure { spec: HilbertSpec, psi: DVector<C64> },
    Mixed { spec: HilbertSpec, rho: DMatrix<C64> },
}

/// Tolerances a state must satisfy at reported sample times.
pub const NORM_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    /// `|‖ψ‖² − 1|` or `|tr ρ − 1|`.
    pub normalization_error: f64,
    pub hermiticity_residual: f64,
    /// Smallest eigenvalue of ρ; `None` for pure states or when skipped.
    pub min_eigenvalue: Option<f64>,
}

impl StateDiagnostics {
    pub fn check(&self, t: f64) -> Result<()> {
        if self.normalization_error > NORM_TOL {
            return Err(Error::InvariantViolation {
                t,
                what: format!("normalization error {:e}", self.normalization_error),
            });
        }
        if self.hermiticity_residual > HERMITICITY_TOL {
            return Err(Error::InvariantViolation {
                t,
                what: format!("hermiticity residual {:e}", self.hermiticity_residual),
            });
        }
        if let Some(ev) = self.min_eigenvalue {
            if ev < -POSITIVITY_TOL {
                return Err(Error::InvariantViolation {
                    t,
                    what: format!("negative eigenvalue {ev:e}"),
                });
            }
        }
        Ok(())
    }
}

impl QuantumState {
    pub fn pure(spec: HilbertSpec, psi: DVector<C64>) -> Result<Self> {
        if psi.len() != spec.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "pure state",
                expected: spec.total_dim(),
                found: psi.len(),
            });
        }
        Ok(QuantumState::Pure { spec, psi })
    }

    pub fn mixed(spec: HilbertSpec, rho: DMatrix<C64>) -> Result<Self> {
        let d = spec.total_dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "density matrix",
                expected: d,
                found: rho.nrows(),
            });
        }
        Ok(QuantumState::Mixed { spec, rho })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(spec: HilbertSpec, index: usize) -> Result<Self> {
        let d = spec.total_dim();
        if index >= d {
            return Err(Error::DimensionMismatch {
                context: "basis index",
                expected: d,
                found: index,
            });
        }
        let mut psi = DVector::zeros(d);
        psi[index] = C64::new(1.0, 0.0);
        Ok(QuantumState::Pure { spec, psi })
    }

    /// Tensor product of factors in order. Pure if every factor is pure.
    pub fn product(factors: &[QuantumState]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::param("factors", "empty product"))?;
        let mut acc = first.clone();
        for f in rest {
            acc = acc.tensor(f);
        }
        Ok(acc)
    }

    pub fn tensor(&self, other: &QuantumState) -> QuantumState {
        let spec = self.spec().tensor(other.spec());
        match (self, other) {
            (QuantumState::Pure { psi: a, .. }, QuantumState::Pure { psi: b, .. }) => QuantumState::Pure {
                spec,
                psi: a.kronecker(b),
            },
            _ => QuantumState::Mixed {
                spec,
                rho: self.density().kronecker(&other.density()),
            },
        }
    }

    pub fn spec(&self) -> &HilbertSpec {
        match self {
            QuantumState::Pure { spec, .. } | QuantumState::Mixed { spec, .. } => spec,
        }
    }

    pub fn dim(&self) -> usize {
        self.spec().total_dim()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure { .. })
    }

    /// Density matrix (`|ψ⟩⟨ψ|` for pure states).
    pub fn density(&self) -> DMatrix<C64> {
        match self {
            QuantumState::Pure { psi, .. } => psi * psi.adjoint(),
            QuantumState::Mixed { rho, .. } => rho.clone(),
        }
    }

    pub fn into_mixed(self) -> QuantumState {
        match self {
            QuantumState::Pure { ref spec, .. } => QuantumState::Mixed {
                spec: spec.clone(),
                rho: self.density(),
            },
            m => m,
        }
    }

    /// Normalization, Hermiticity and (optionally) positivity measures.
    pub fn diagnostics(&self, with_eigenvalues: bool) -> StateDiagnostics {
        match self {
            QuantumState::Pure { psi, .. } => StateDiagnostics {
                normalization_error: (psi.norm_squared() - 1.0).abs(),
                hermiticity_residual: 0.0,
                min_eigenvalue: None,
            },
            QuantumState::Mixed { rho, .. } => {
                let tr: C64 = rho.diagonal().iter().sum();
                let n = rho.nrows();
                let mut herm = 0.0f64;
                for i in 0..n {
                    for j in i..n {
                        herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
                    }
                }
                let min_eigenvalue = with_eigenvalues.then(|| min_hermitian_eigenvalue(rho));
                StateDiagnostics {
                    normalization_error: (tr - C64::new(1.0, 0.0)).norm(),
                    hermiticity_residual: herm,
                    min_eigenvalue,
                }
            }
        }
    }
}

pub(crate) fn min_hermitian_eigenvalue(rho: &DMatrix<C64>) -> f64 {
    let sym = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `⟨ψ|A|ψ⟩` or `tr(Aρ)`. Pure states are not renormalized.
pub fn expect(op: &Operator, state: &QuantumState) -> Result<C64> {
    if op.spec() != state.spec() {
        return Err(Error::SpecMismatch("expect"));
    }
    Ok(match state {
        QuantumState::Pure { psi, .. } => {
            let x = psi.as_slice();
            (0..op.dim())
                .map(|r| {
                    let (cols, vals) = op.row(r);
                    let ax: C64 = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
                    x[r].conj() * ax
                })
                .sum()
        }
        QuantumState::Mixed { rho, .. } => op.iter().map(|(r, c, v)| v * rho[(c, r)]).sum(),
    })
}

/// Real expectation of a Hermitian observable and the discarded imaginary
/// residual.
pub fn expect_real(op: &Operator, state: &QuantumState) -> Result<(f64, f64)> {
    let z = expect(op, state)?;
    Ok((z.re, z.im.abs()))
}

/// Reduced density matrix on the slots in `keep` (kept in ascending slot
/// order).
pub fn partial_trace(state: &QuantumState, keep: &[usize]) -> Result<QuantumState> {
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    let spec = state.spec();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    for &s in &keep {
        spec.check_slot(s)?;
    }
    let traced: Vec<usize> = (0..spec.len()).filter(|s| !keep.contains(s)).collect();
    let reduced_spec = spec.subspace(&keep)?;
    let traced_spec = if traced.is_empty() {
        None
    } else {
        Some(spec.subspace(&traced)?)
    };
    let dk = reduced_spec.total_dim();
    let dt = traced_spec.as_ref().map_or(1, |s| s.total_dim());

    // (kept index, traced index) for every full index.
    let split: Vec<(usize, usize)> = (0..spec.total_dim())
        .map(|i| {
            let digits = spec.digits(i);
            let k: Vec<usize> = keep.iter().map(|&s| digits[s]).collect();
            let t: Vec<usize> = traced.iter().map(|&s| digits[s]).collect();
            (
                reduced_spec.index_of(&k),
                traced_spec.as_ref().map_or(0, |ts| ts.index_of(&t)),
            )
        })
        .collect();

    let mut out = DMatrix::<C64>::zeros(dk, dk);
    match state {
        QuantumState::Pure { psi, .. } => {
            let mut m = DMatrix::<C64>::zeros(dk, dt);
            for (i, &(k, t)) in split.iter().enumerate() {
                m[(k, t)] = psi[i];
            }
            out = &m * m.adjoint();
        }
        QuantumState::Mixed { rho, .. } => {
            let mut by_traced: Vec<Vec<(usize, usize)>> = vec![Vec::new(); dt];
            for (i, &(k, t)) in split.iter().enumerate() {
                by_traced[t].push((i, k));
            }
            for group in &by_traced {
                for &(i, ki) in group {
                    for &(j, kj) in group {
                        out[(ki, kj)] += rho[(i, j)];
                    }
                }
            }
        }
    }
    QuantumState::mixed(reduced_spec, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{destroy, embed, pauli, PauliAxis, Subsystem};

    fn qubit_spec() -> HilbertSpec {
        HilbertSpec::new(vec![2], vec![Subsystem::Qubit(1)]).unwrap()
    }

    #[test]
    fn expectation_basics() {
        let ground = QuantumState::basis(HilbertSpec::single(2), 0).unwrap();
        let z = pauli(PauliAxis::Z);
        assert_eq!(expect(&z, &ground).unwrap(), C64::new(-1.0, 0.0));
        let id = Operator::identity(HilbertSpec::single(2));
        let plus = QuantumState::pure(
            HilbertSpec::single(2),
            DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]),
        )
        .unwrap();
        assert!((expect(&id, &plus).unwrap().re - 1.0).abs() < 1e-15);
        let wrong = Operator::identity(HilbertSpec::single(3));
        assert!(matches!(expect(&wrong, &plus), Err(Error::SpecMismatch(_))));
    }

    #[test]
    fn thermal_photon_number() {
        // Geometric-series oracle: ρ_kk ∝ r^k with r = n̄/(1+n̄), d = 12.
        let nbar: f64 = 0.3;
        let d = 12;
        let r = nbar / (1.0 + nbar);
        let weights: Vec<f64> = (0..d).map(|k| r.powi(k as i32)).collect();
        let z: f64 = weights.iter().sum();
        let rho = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(weights[i] / z, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let state = QuantumState::mixed(HilbertSpec::single(d), rho).unwrap();
        let a = destroy(d).unwrap();
        let n = &a.adjoint() * &a;
        let val = expect(&n, &state).unwrap().re;
        // Truncated mean: Σ k r^k / Σ r^k, which tends to n̄.
        let oracle: f64 = (0..d).map(|k| k as f64 * weights[k]).sum::<f64>() / z;
        assert!((val - oracle).abs() < 1e-14);
        assert!((val - nbar).abs() < 1e-4);
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let q = QuantumState::pure(
            qubit_spec(),
            DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]),
        )
        .unwrap();
        let r = QuantumState::basis(HilbertSpec::single(3), 1).unwrap();
        let prod = r.tensor(&q).into_mixed();
        let red = partial_trace(&prod, &[1]).unwrap();
        assert!((red.density() - q.density()).iter().all(|z| z.norm() < 1e-15));
        let tr: C64 = red.density().diagonal().iter().sum();
        assert!((tr.re - 1.0).abs() < 1e-12);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let spec = HilbertSpec::new(vec![2, 2], vec![Subsystem::Qubit(1), Subsystem::Qubit(2)]).unwrap();
        let bell = QuantumState::pure(
            spec,
            DVector::from_vec(vec![
                C64::new(s, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(s, 0.0),
            ]),
        )
        .unwrap();
        for st in [bell.clone(), bell.into_mixed()] {
            let red = partial_trace(&st, &[0]).unwrap().density();
            assert!((red[(0, 0)].re - 0.5).abs() < 1e-15);
            assert!((red[(1, 1)].re - 0.5).abs() < 1e-15);
            assert!(red[(0, 1)].norm() < 1e-15);
        }
        assert!(matches!(partial_trace(&q, &[]), Err(Error::EmptyKeep)));
    }

    #[test]
    fn embedded_expectation_matches_reduced() {
        let spec = HilbertSpec::network(1, 2).unwrap();
        let qslot = spec.qubit_slot(1).unwrap();
        let x = embed(&pauli(PauliAxis::X), qslot, &spec).unwrap();
        let vac = QuantumState::basis(
            HilbertSpec::new(vec![2; 4], (1..=4).map(Subsystem::Resonator).collect()).unwrap(),
            0,
        )
        .unwrap();
        let q = QuantumState::pure(
            qubit_spec(),
            DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0)]),
        )
        .unwrap();
        let full = vac.tensor(&q);
        assert_eq!(full.spec(), &spec);
        let v = expect(&x, &full).unwrap().re;
        assert!((v - 0.96).abs() < 1e-14);
    }

    #[test]
    fn diagnostics_flag_violations() {
        let rho = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.1, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-0.1, 0.0),
            ],
        );
        let s = QuantumState::mixed(HilbertSpec::single(2), rho).unwrap();
        let d = s.diagnostics(true);
        assert!(d.normalization_error < 1e-12);
        assert!((d.min_eigenvalue.unwrap() + 0.1).abs() < 1e-12);
        assert!(d.check(0.0).is_err());
    }
}
