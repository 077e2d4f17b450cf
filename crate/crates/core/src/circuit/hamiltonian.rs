use super::modes::{coupling_coefficients, Branch};
use super::{angular, rotated_ladder, rotated_pauli, CircuitParams, DriveSetting, QubitTarget};
use crate::error::{Error, Result};
use crate::ops::{destroy, embed, number, pauli, sum_operators, HilbertSpec, Operator, PauliAxis};

/// Resonators `1..=2N+2` then qubits `1..=N`.
pub fn network_space(params: &CircuitParams) -> Result<HilbertSpec> {
    HilbertSpec::network(params.n_qubits, params.fock_levels)
}

/// Rotated Pauli triple of qubit `n` (1-based) lifted into `spec`.
pub fn embedded_rotated_pauli(spec: &HilbertSpec, n: usize, target: QubitTarget) -> Result<[Operator; 3]> {
    let slot = spec.qubit_slot(n)?;
    let [x, y, z] = rotated_pauli(target);
    Ok([embed(&x, slot, spec)?, embed(&y, slot, spec)?, embed(&z, slot, spec)?])
}

/// The network Hamiltonian in the frame rotating at the drive frequency,
/// after dropping counter-rotating drive terms.
pub fn build_h1(params: &CircuitParams, drives: &[DriveSetting]) -> Result<Operator> {
    params.validate()?;
    if drives.len() != params.n_qubits {
        return Err(Error::DimensionMismatch {
            context: "build_h1 drives",
            expected: params.n_qubits,
            found: drives.len(),
        });
    }
    let spec = network_space(params)?;
    let d = params.fock_levels;
    let a = destroy(d)?;
    let ad = a.adjoint();
    let res = |m: usize, op: &Operator| -> Result<Operator> { embed(op, spec.resonator_slot(m)?, &spec) };
    let mut terms = Vec::new();

    let dw = angular(params.delta_omega_mhz());
    let num = number(d)?;
    for m in 1..=params.n_resonators() {
        terms.push(res(m, &num)?.scale_real(dw));
    }

    let v = angular(params.v_mhz);
    for k in 1..=params.n_qubits + 1 {
        let hop = &res(2 * k - 1, &a)? * &res(2 * k, &ad)?;
        terms.push((&hop + &hop.adjoint()).scale_real(v));
    }

    let g = angular(params.g_mhz);
    let sm = pauli(PauliAxis::Minus);
    for (idx, drive) in drives.iter().enumerate() {
        let n = idx + 1;
        let slot = spec.qubit_slot(n)?;
        let local = &(&pauli(PauliAxis::X).scale_real(drive.omega_re)
            + &pauli(PauliAxis::Y).scale_real(drive.omega_im))
            + &pauli(PauliAxis::Z).scale_real(0.5 * drive.delta_varpi);
        terms.push(embed(&local, slot, &spec)?.scale_real(std::f64::consts::TAU));

        let lower = embed(&sm, slot, &spec)?;
        let raise = &res(2 * n, &ad)? + &res(2 * n + 1, &ad)?;
        let coupling = &raise * &lower;
        terms.push((&coupling + &coupling.adjoint()).scale_real(g));
    }
    Ok(sum_operators(&terms).unwrap_or_else(|| Operator::zeros(spec)))
}

/// Time-independent resonant interaction `Σ Θ^{−1}_{mn} a_m† σ_−^{n(z)} + h.c.`
/// between every qubit and the lower hopping branch.
///
/// For a nonzero reset-mode detuning Δ (MHz) the explicit time dependence
/// `e^{iΔt}` is removed by moving each qubit into a frame rotating at Δ,
/// which adds `−(Δ/2) σ_z^{n(z)}`. The sign of this term does not affect
/// populations since the resonator response is symmetric in Δ.
pub fn build_effective_interaction(
    params: &CircuitParams,
    targets: &[QubitTarget],
    detuning_mhz: f64,
) -> Result<Operator> {
    params.validate()?;
    if targets.len() != params.n_qubits {
        return Err(Error::DimensionMismatch {
            context: "build_effective_interaction targets",
            expected: params.n_qubits,
            found: targets.len(),
        });
    }
    let spec = network_space(params)?;
    let table = coupling_coefficients(params, targets)?;
    let ad = destroy(params.fock_levels)?.adjoint();
    let mut terms = Vec::new();
    for (idx, target) in targets.iter().enumerate() {
        let n = idx + 1;
        let slot = spec.qubit_slot(n)?;
        let (_, sm_z) = rotated_ladder(*target);
        let lower = embed(&sm_z, slot, &spec)?;
        for m in table.support(n) {
            let theta = table.theta(Branch::Lower, m, n);
            if theta.norm() == 0.0 {
                continue;
            }
            let raise = embed(&ad, spec.resonator_slot(m)?, &spec)?;
            let coupling = (&raise * &lower).scale(theta);
            terms.push(&coupling + &coupling.adjoint());
        }
        if detuning_mhz != 0.0 {
            let [_, _, z] = rotated_pauli(*target);
            terms.push(embed(&z, slot, &spec)?.scale_real(-0.5 * angular(detuning_mhz)));
        }
    }
    Ok(sum_operators(&terms).unwrap_or_else(|| Operator::zeros(spec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::calibrate_drive;
    use crate::ops::QuantumState;
    use num_complex::Complex64 as C64;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn drives(params: &CircuitParams, targets: &[QubitTarget]) -> Vec<DriveSetting> {
        targets
            .iter()
            .map(|t| calibrate_drive(*t, params.omega_bar_mhz, params.f_l_ghz).unwrap())
            .collect()
    }

    #[test]
    fn h1_shape_and_vacuum_energy() {
        let params = CircuitParams::reference(1);
        let target = QubitTarget::new(0.4, 1.0).unwrap();
        let ds = drives(&params, &[target]);
        let h = build_h1(&params, &ds).unwrap();
        assert_eq!(h.dim(), 32);
        assert!(h.is_hermitian());
        // Vacuum with the qubit in |0⟩: only the σ_z drive term contributes.
        let e = h.get(0, 0);
        assert!((e.re - (-0.5 * TAU * ds[0].delta_varpi)).abs() < 1e-9);
        assert!(build_h1(&params, &[]).is_err());
    }

    #[test]
    fn hopping_block_spectrum() {
        // Dense diagonalization of the resonator single-excitation block,
        // with the coupling switched off by taking the qubit in |0⟩ and
        // restricting to states with one photon and no qubit excitation.
        let params = CircuitParams::reference(1);
        let ds = drives(&params, &[QubitTarget::new(0.0, 0.0).unwrap()]);
        let h = build_h1(&params, &ds).unwrap();
        let spec = h.spec().clone();
        let single: Vec<usize> = (0..spec.total_dim())
            .filter(|&i| {
                let dg = spec.digits(i);
                dg[..4].iter().sum::<usize>() == 1 && dg[4] == 0
            })
            .collect();
        assert_eq!(single.len(), 4);
        let dense = h.to_dense();
        let block = nalgebra::DMatrix::from_fn(4, 4, |i, j| dense[(single[i], single[j])]);
        let shift = -0.5 * TAU * ds[0].delta_varpi;
        let mut ev: Vec<f64> = block
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|e| (e - shift) / TAU)
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in ev.iter().zip([200.0, 200.0, 400.0, 400.0]) {
            assert!((got - want).abs() < 1e-9, "{ev:?}");
        }
    }

    fn formula_oracle(params: &CircuitParams, targets: &[QubitTarget]) -> nalgebra::DMatrix<C64> {
        // Coefficients written out by hand: signs (−,+,+,−)/2 on resonators
        // 2n−1..2n+2 times g e^{iφ}(1+cos θ)/2.
        let spec = network_space(params).unwrap();
        let dim = spec.total_dim();
        let mut h = nalgebra::DMatrix::<C64>::zeros(dim, dim);
        let ad = destroy(params.fock_levels).unwrap().adjoint().to_dense();
        for (idx, t) in targets.iter().enumerate() {
            let n = idx + 1;
            let (_, sm) = rotated_ladder(*t);
            let sm = sm.to_dense();
            let amp = C64::from_polar(TAU * params.g_mhz * (1.0 + t.theta.cos()) / 2.0, t.phi);
            for (off, sign) in [(0usize, -0.5), (1, 0.5), (2, 0.5), (3, -0.5)] {
                let m = 2 * n - 1 + off;
                let mut factors: Vec<nalgebra::DMatrix<C64>> =
                    spec.dims().iter().map(|&d| nalgebra::DMatrix::identity(d, d)).collect();
                factors[m - 1] = ad.clone();
                factors[spec.qubit_slot(n).unwrap()] = sm.clone();
                let mut op = factors[0].clone();
                for f in &factors[1..] {
                    op = op.kronecker(f);
                }
                let term = op * (amp * sign);
                h += &term + term.adjoint();
            }
        }
        h
    }

    #[test]
    fn effective_matches_formula_oracle() {
        let params = CircuitParams::reference(2);
        let targets = [
            QubitTarget::new(0.8, 2.5).unwrap(),
            QubitTarget::new(FRAC_PI_2, PI).unwrap(),
        ];
        let h = build_effective_interaction(&params, &targets, 0.0).unwrap();
        assert!(h.is_hermitian());
        let diff = h.to_dense() - formula_oracle(&params, &targets);
        assert!(diff.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn effective_edge_targets() {
        let params = CircuitParams::reference(1);
        let h = build_effective_interaction(&params, &[QubitTarget::new(PI, 0.0).unwrap()], 0.0).unwrap();
        assert_eq!(h.nnz(), 0);

        let h = build_effective_interaction(&params, &[QubitTarget::new(0.0, 0.0).unwrap()], 0.0).unwrap();
        // |vac, 1⟩ → a_m† |vac⟩ ⊗ |0⟩ with magnitude g/2 per resonator.
        let spec = h.spec().clone();
        let excited = spec.index_of(&[0, 0, 0, 0, 1]);
        for m in 0..4 {
            let mut dg = vec![0; 5];
            dg[m] = 1;
            let amp = h.get(spec.index_of(&dg), excited).norm();
            assert!((amp - TAU * params.g_mhz / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_detuning_term() {
        let params = CircuitParams::reference(1);
        let t = QubitTarget::new(0.0, 0.0).unwrap();
        let h0 = build_effective_interaction(&params, &[t], 0.0).unwrap();
        let h1 = build_effective_interaction(&params, &[t], 10.0).unwrap();
        let diff = &h1 - &h0;
        let spec = h0.spec().clone();
        let ground = QuantumState::basis(spec.clone(), 0).unwrap();
        let e = crate::ops::expect(&diff, &ground).unwrap();
        assert!((e.re - 0.5 * TAU * 10.0).abs() < 1e-9);
    }
}
