use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ops::{HilbertSpec, QuantumState};

/// Product of independent per-subsystem ensembles of pure states.
///
/// The mixed state is `⊗_s Σ_k w_sk |ψ_sk⟩⟨ψ_sk|`; a trajectory draws one
/// member per subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductEnsemble {
    spec: HilbertSpec,
    factors: Vec<Vec<(f64, DVector<C64>)>>,
}

impl ProductEnsemble {
    /// `factors[s]` lists `(weight, state)` for slot `s`; weights are
    /// normalized per factor.
    pub fn new(spec: HilbertSpec, factors: Vec<Vec<(f64, DVector<C64>)>>) -> Result<Self> {
        if factors.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                context: "ensemble factors",
                expected: spec.len(),
                found: factors.len(),
            });
        }
        let mut normalized = Vec::with_capacity(factors.len());
        for (slot, members) in factors.into_iter().enumerate() {
            let total: f64 = members.iter().map(|m| m.0).sum();
            if members.is_empty() || !(total > 0.0) || members.iter().any(|m| !(m.0 >= 0.0)) {
                return Err(Error::param("initial", format!("invalid weights for slot {slot}")));
            }
            let mut out = Vec::with_capacity(members.len());
            for (w, psi) in members {
                if psi.len() != spec.dims()[slot] {
                    return Err(Error::DimensionMismatch {
                        context: "ensemble member",
                        expected: spec.dims()[slot],
                        found: psi.len(),
                    });
                }
                let norm = psi.norm();
                if !(norm > 0.0) {
                    return Err(Error::param("initial", "zero state vector"));
                }
                if w > 0.0 {
                    out.push((w / total, psi / C64::new(norm, 0.0)));
                }
            }
            normalized.push(out);
        }
        Ok(Self {
            spec,
            factors: normalized,
        })
    }

    /// A single product state.
    pub fn pure_product(spec: HilbertSpec, states: Vec<DVector<C64>>) -> Result<Self> {
        Self::new(spec, states.into_iter().map(|s| vec![(1.0, s)]).collect())
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn is_pure(&self) -> bool {
        self.factors.iter().all(|f| f.len() == 1)
    }

    pub fn density(&self) -> QuantumState {
        let mut rho = DMatrix::<C64>::from_element(1, 1, C64::new(1.0, 0.0));
        for members in &self.factors {
            let d = members[0].1.len();
            let mut local = DMatrix::<C64>::zeros(d, d);
            for (w, psi) in members {
                local += psi * psi.adjoint() * C64::new(*w, 0.0);
            }
            rho = rho.kronecker(&local);
        }
        QuantumState::Mixed {
            spec: self.spec.clone(),
            rho,
        }
    }

    /// Draw one product member.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<C64> {
        let mut psi = DVector::<C64>::from_element(1, C64::new(1.0, 0.0));
        for members in &self.factors {
            let chosen = if members.len() == 1 {
                &members[0].1
            } else {
                let r: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = &members[members.len() - 1].1;
                for (w, s) in members {
                    acc += w;
                    if r < acc {
                        pick = s;
                        break;
                    }
                }
                pick
            };
            psi = psi.kronecker(chosen);
        }
        psi
    }

    /// Basis indices that any member can populate.
    pub fn support(&self) -> Vec<usize> {
        let mut support = vec![0usize];
        for (slot, members) in self.factors.iter().enumerate() {
            let d = self.spec.dims()[slot];
            let local: Vec<usize> = (0..d)
                .filter(|&k| members.iter().any(|(_, s)| s[k].norm() > 0.0))
                .collect();
            support = support
                .iter()
                .flat_map(|&base| local.iter().map(move |&k| base * d + k))
                .collect();
        }
        support
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn mixture_and_support() {
        let spec = HilbertSpec::new(
            vec![3, 2],
            vec![crate::ops::Subsystem::Resonator(1), crate::ops::Subsystem::Qubit(1)],
        )
        .unwrap();
        let vac = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let up = DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let down = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let e = ProductEnsemble::new(spec, vec![vec![(1.0, vac)], vec![(1.0, up), (1.0, down)]]).unwrap();
        assert!(!e.is_pure());
        assert_eq!(e.support(), vec![0, 1]);
        let rho = e.density().density();
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-15 && (rho[(1, 1)].re - 0.5).abs() < 1e-15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<bool> = (0..200).map(|_| e.sample(&mut rng)[1].norm() > 0.5).collect();
        let ups = draws.iter().filter(|&&b| b).count();
        assert!(ups > 70 && ups < 130);
    }
}
