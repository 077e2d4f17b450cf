//! Exact reduction to the basis states reachable from the initial support.
//!
//! If the non-Hermitian generator and every jump operator map the span of a
//! set of basis states into itself, the dynamics never leaves that span. For
//! excitation-conserving models this removes most of the space.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::ops::{HilbertSpec, Operator};

#[derive(Debug, Clone)]
pub struct Subspace {
    full: HilbertSpec,
    indices: Vec<usize>,
    position: Vec<usize>,
}

const OUTSIDE: usize = usize::MAX;

impl Subspace {
    /// Closure of `seed` under the sparsity patterns of `generators`.
    pub fn reachable(full: &HilbertSpec, generators: &[&Operator], seed: &[usize]) -> Self {
        let dim = full.total_dim();
        let mut seen = vec![false; dim];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in seed {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        // Column adjacency: state j feeds every row i with op[i, j] ≠ 0.
        let transposed: Vec<Operator> = generators.iter().map(|g| g.adjoint()).collect();
        while let Some(j) = queue.pop_front() {
            for g in &transposed {
                let (cols, _) = g.row(j);
                for &i in cols {
                    if !seen[i] {
                        seen[i] = true;
                        queue.push_back(i);
                    }
                }
            }
        }
        let indices: Vec<usize> = (0..dim).filter(|&i| seen[i]).collect();
        Self::from_indices(full, indices)
    }

    pub fn full(full: &HilbertSpec) -> Self {
        Self::from_indices(full, (0..full.total_dim()).collect())
    }

    fn from_indices(full: &HilbertSpec, indices: Vec<usize>) -> Self {
        let mut position = vec![OUTSIDE; full.total_dim()];
        for (k, &i) in indices.iter().enumerate() {
            position[i] = k;
        }
        Self {
            full: full.clone(),
            indices,
            position,
        }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn full_spec(&self) -> &HilbertSpec {
        &self.full
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.full.total_dim()
    }

    /// Block of `op` on this subspace, as an operator on an unstructured
    /// space of dimension [`Subspace::dim`].
    pub fn restrict(&self, op: &Operator) -> Operator {
        let entries = op.iter().filter_map(|(r, c, v)| {
            let (pr, pc) = (self.position[r], self.position[c]);
            (pr != OUTSIDE && pc != OUTSIDE).then_some((pr, pc, v))
        });
        Operator::from_triplets(HilbertSpec::single(self.dim()), entries)
    }

    pub fn restrict_vec(&self, psi: &[C64]) -> Vec<C64> {
        self.indices.iter().map(|&i| psi[i]).collect()
    }

    pub fn restrict_density(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| rho[(self.indices[i], self.indices[j])])
    }

    pub fn lift_vec(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.full.total_dim()];
        for (k, &i) in self.indices.iter().enumerate() {
            out[i] = psi[k];
        }
        out
    }

    pub fn lift_density(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.full.total_dim();
        let mut out = DMatrix::zeros(n, n);
        for (a, &i) in self.indices.iter().enumerate() {
            for (b, &j) in self.indices.iter().enumerate() {
                out[(i, j)] = rho[(a, b)];
            }
        }
        out
    }

    /// Whether every nonzero entry of `vector` lies inside the subspace.
    pub fn contains_support(&self, support: &[usize]) -> bool {
        support.iter().all(|&i| self.position[i] != OUTSIDE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{destroy, embed, pauli, PauliAxis};

    #[test]
    fn jaynes_cummings_manifold() {
        // a†σ_− + h.c. on (mode d=4) ⊗ qubit from |0,1⟩ stays in {|0,1⟩, |1,0⟩}.
        let spec = HilbertSpec::new(
            vec![4, 2],
            vec![crate::ops::Subsystem::Resonator(1), crate::ops::Subsystem::Qubit(1)],
        )
        .unwrap();
        let a = embed(&destroy(4).unwrap(), 0, &spec).unwrap();
        let sm = embed(&pauli(PauliAxis::Minus), 1, &spec).unwrap();
        let h = &(&a.adjoint() * &sm) + &(&sm.adjoint() * &a);
        let sub = Subspace::reachable(&spec, &[&h], &[spec.index_of(&[0, 1])]);
        assert_eq!(sub.indices(), &[1, 2]);
        // Adding loss reaches the ground state too.
        let sub = Subspace::reachable(&spec, &[&h, &a], &[spec.index_of(&[0, 1])]);
        assert_eq!(sub.indices(), &[0, 1, 2]);
        let hr = sub.restrict(&h);
        assert_eq!(hr.dim(), 3);
        assert!(hr.is_hermitian());
        let psi = vec![C64::new(0.1, 0.0), C64::new(0.2, 0.0), C64::new(0.3, 0.0)];
        assert_eq!(sub.restrict_vec(&sub.lift_vec(&psi)), psi);
        assert!(sub.contains_support(&[0, 2]) && !sub.contains_support(&[3]));
    }
}
