use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{angular, CircuitParams, QubitTarget};
use crate::error::{Error, Result};
use crate::ops::{destroy, embed, matrix_exp_small, number, pauli, HilbertSpec, Operator, PauliAxis, Subsystem};

/// Normal-mode branch of a hopping pair: antisymmetric (`δω − v`) or
/// symmetric (`δω + v`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Lower,
    Upper,
}

impl Branch {
    pub fn sign(self) -> i32 {
        match self {
            Branch::Lower => -1,
            Branch::Upper => 1,
        }
    }

    fn index(self) -> usize {
        match self {
            Branch::Lower => 0,
            Branch::Upper => 1,
        }
    }
}

/// Frequencies `ω_lk = δω + l v + 2k Ω̄` (MHz) of the six interaction-picture
/// oscillations, for `l ∈ {−1, +1}` and `k ∈ {−1, 0, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub entries: Vec<(i32, i32, f64)>,
    /// `Δ = δω − v − 2Ω̄` (MHz).
    pub delta: f64,
}

impl ModeSpectrum {
    pub fn omega(&self, l: i32, k: i32) -> Option<f64> {
        self.entries
            .iter()
            .find(|&&(ll, kk, _)| ll == l && kk == k)
            .map(|e| e.2)
    }

    /// Largest `|ω_lk|` (MHz).
    pub fn max_frequency(&self) -> f64 {
        self.entries.iter().map(|e| e.2.abs()).fold(0.0, f64::max)
    }
}

pub fn mode_frequencies(params: &CircuitParams, omega_bar: f64) -> ModeSpectrum {
    let dw = params.delta_omega_mhz();
    let v = params.v_mhz;
    let mut entries = Vec::with_capacity(6);
    for l in [-1, 1] {
        for k in [-1, 0, 1] {
            entries.push((l, k, dw + l as f64 * v + 2.0 * k as f64 * omega_bar));
        }
    }
    ModeSpectrum {
        entries,
        delta: dw - v - 2.0 * omega_bar,
    }
}

/// Branch-resolved coupling coefficients of every qubit to the resonators.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    n_qubits: usize,
    n_resonators: usize,
    /// `a[branch][n−1][m−1]`.
    a: [Vec<Vec<f64>>; 2],
    /// `Θ^l_{mn}` in angular units (rad/μs), same layout as `a`.
    theta: [Vec<Vec<C64>>; 2],
    theta_pm: Vec<(C64, C64)>,
}

impl CouplingTable {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_resonators(&self) -> usize {
        self.n_resonators
    }

    /// `A^l_{mn}` with 1-based `m`, `n`.
    pub fn a(&self, l: Branch, m: usize, n: usize) -> f64 {
        self.a[l.index()][n - 1][m - 1]
    }

    /// `Θ^l_{mn} = g A^l_{mn} Θ_−^n` (rad/μs).
    pub fn theta(&self, l: Branch, m: usize, n: usize) -> C64 {
        self.theta[l.index()][n - 1][m - 1]
    }

    /// `(Θ_+^n, Θ_−^n)`.
    pub fn theta_pm(&self, n: usize) -> (C64, C64) {
        self.theta_pm[n - 1]
    }

    /// Resonators (1-based) with a nonzero coefficient on either branch.
    pub fn support(&self, n: usize) -> Vec<usize> {
        (1..=self.n_resonators)
            .filter(|&m| self.a(Branch::Lower, m, n) != 0.0 || self.a(Branch::Upper, m, n) != 0.0)
            .collect()
    }

    /// `Σ_m |Θ^l_{mn}|²` (rad²/μs²).
    pub fn weight(&self, l: Branch, n: usize) -> f64 {
        self.theta[l.index()][n - 1].iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Split each qubit's coupling `g(a_{2n} + a_{2n+1})` onto the two normal-mode
/// branches of the hopping chain.
///
/// The hopping matrix is diagonalized as a whole and the branch projectors
/// are built from its eigenvectors, so the result does not depend on how
/// the degenerate eigenvectors are chosen.
pub fn coupling_coefficients(params: &CircuitParams, targets: &[QubitTarget]) -> Result<CouplingTable> {
    params.validate()?;
    if targets.len() != params.n_qubits {
        return Err(Error::DimensionMismatch {
            context: "coupling_coefficients targets",
            expected: params.n_qubits,
            found: targets.len(),
        });
    }
    let nr = params.n_resonators();
    let v = params.v_mhz;
    let mut hop = DMatrix::<f64>::zeros(nr, nr);
    for k in 1..=params.n_qubits + 1 {
        hop[(2 * k - 2, 2 * k - 1)] = v;
        hop[(2 * k - 1, 2 * k - 2)] = v;
    }
    let eig = hop.symmetric_eigen();
    let mut projectors = [DMatrix::<f64>::zeros(nr, nr), DMatrix::<f64>::zeros(nr, nr)];
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let branch = if (lambda + v).abs() < 1e-9 * v {
            Branch::Lower
        } else if (lambda - v).abs() < 1e-9 * v {
            Branch::Upper
        } else {
            return Err(Error::NumericalFailure(format!(
                "hopping eigenvalue {lambda} is not ±v"
            )));
        };
        let u = eig.eigenvectors.column(i);
        projectors[branch.index()] += u * u.transpose();
    }

    let g = angular(params.g_mhz);
    let mut a: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    let mut theta: [Vec<Vec<C64>>; 2] = [Vec::new(), Vec::new()];
    let theta_pm: Vec<(C64, C64)> = targets.iter().map(|t| t.theta_pm()).collect();
    for (idx, _) in targets.iter().enumerate() {
        let n = idx + 1;
        for b in [Branch::Lower, Branch::Upper] {
            let p = &projectors[b.index()];
            let row: Vec<f64> = (0..nr)
                .map(|m| {
                    let x = p[(m, 2 * n - 1)] + p[(m, 2 * n)];
                    if x.abs() < 1e-12 {
                        0.0
                    } else {
                        x
                    }
                })
                .collect();
            theta[b.index()].push(row.iter().map(|&x| theta_pm[idx].1 * (g * x)).collect());
            a[b.index()].push(row);
        }
    }
    Ok(CouplingTable {
        n_qubits: params.n_qubits,
        n_resonators: nr,
        a,
        theta,
        theta_pm,
    })
}

/// Largest entrywise deviation of each frame-transformed operator from its
/// closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameResiduals {
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// First resonator of a hopping pair.
    pub a_first: f64,
    /// Second resonator of a hopping pair.
    pub a_second: f64,
}

impl FrameResiduals {
    pub fn max(&self) -> f64 {
        self.sigma_x.max(self.sigma_y).max(self.a_first).max(self.a_second)
    }
}

/// Conjugate qubit and resonator operators by `e^{itR}` with
/// `R = δω Σ a†a + v(a_1 a_2† + h.c.) + Ω̄ σ_z` on one hopping pair and one
/// qubit (all MHz, `t` in μs), and compare with the closed-form rotations.
///
/// Resonators are truncated at three levels; resonator residuals are taken
/// over input states with at most one photon, where truncation is exact.
pub fn frame_transform_oracle(omega_bar: f64, v: f64, delta_omega: f64, t: f64) -> Result<FrameResiduals> {
    let spec = HilbertSpec::new(
        vec![3, 3, 2],
        vec![Subsystem::Resonator(1), Subsystem::Resonator(2), Subsystem::Qubit(1)],
    )?;
    let a = destroy(3)?;
    let ad = a.adjoint();
    let n = number(3)?;
    let a1d = embed(&ad, 0, &spec)?;
    let a2d = embed(&ad, 1, &spec)?;
    let hop = &embed(&a, 0, &spec)? * &a2d;
    let r = &(&(&embed(&n, 0, &spec)? + &embed(&n, 1, &spec)?).scale_real(angular(delta_omega))
        + &(&hop + &hop.adjoint()).scale_real(angular(v)))
        + &embed(&pauli(PauliAxis::Z), 2, &spec)?.scale_real(angular(omega_bar));
    let u = matrix_exp_small(&r, C64::new(0.0, t))?.to_dense();
    let u_dag = u.adjoint();
    let conj = |x: &Operator| &u * x.to_dense() * &u_dag;

    let q = |axis| embed(&pauli(axis), 2, &spec);
    let sp = q(PauliAxis::Plus)?.to_dense();
    let sm = q(PauliAxis::Minus)?.to_dense();
    let e2 = C64::from_polar(1.0, 2.0 * t * angular(omega_bar));
    let x_closed = &sp * e2 + &sm * e2.conj();
    let y_closed = (&sm * e2.conj() - &sp * e2) * C64::new(0.0, 1.0);

    let up = C64::from_polar(0.5, t * angular(delta_omega + v));
    let down = C64::from_polar(0.5, t * angular(delta_omega - v));
    let sym = (&a1d + &a2d).to_dense();
    let anti = (&a1d - &a2d).to_dense();
    let a1_closed = &sym * up + &anti * down;
    let a2_closed = &sym * up - &anti * down;

    let all = |m: DMatrix<C64>| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let low_photon: Vec<usize> = (0..spec.total_dim())
        .filter(|&i| {
            let d = spec.digits(i);
            d[0] + d[1] <= 1
        })
        .collect();
    let cols = |m: DMatrix<C64>| {
        low_photon
            .iter()
            .flat_map(|&c| m.column(c).iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    };

    Ok(FrameResiduals {
        sigma_x: all(conj(&q(PauliAxis::X)?) - x_closed),
        sigma_y: all(conj(&q(PauliAxis::Y)?) - y_closed),
        a_first: cols(conj(&a1d) - a1_closed),
        a_second: cols(conj(&a2d) - a2_closed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, TAU};

    #[test]
    fn reference_spectrum() {
        let p = CircuitParams::reference(1);
        let s = mode_frequencies(&p, 100.0);
        assert!(s.delta.abs() < 1e-9);
        assert!((s.omega(-1, -1).unwrap() - s.delta).abs() < 1e-12);
        assert!((s.omega(1, 1).unwrap() - 600.0).abs() < 1e-9);
        assert!((s.omega(-1, 0).unwrap() - 200.0).abs() < 1e-9);
        assert!((s.omega(1, -1).unwrap() - 200.0).abs() < 1e-9);
        assert!((s.max_frequency() - 600.0).abs() < 1e-9);
        assert_eq!(s.entries.len(), 6);
    }

    #[test]
    fn pair_mode_coefficients() {
        // Pair-mode oracle: a_{2n} = (s − d)/√2 on pair n and
        // a_{2n+1} = (s' + d')/√2 on pair n+1, where s, d are the symmetric
        // and antisymmetric modes; projecting onto d gives (−½, ½) and (½, −½).
        let p = CircuitParams::reference(3);
        let targets = vec![QubitTarget::new(0.0, 0.0).unwrap(); 3];
        let table = coupling_coefficients(&p, &targets).unwrap();
        for n in 1..=3 {
            assert_eq!(table.support(n), vec![2 * n - 1, 2 * n, 2 * n + 1, 2 * n + 2]);
            let lower: Vec<f64> = (2 * n - 1..=2 * n + 2).map(|m| table.a(Branch::Lower, m, n)).collect();
            let upper: Vec<f64> = (2 * n - 1..=2 * n + 2).map(|m| table.a(Branch::Upper, m, n)).collect();
            for (got, want) in lower.iter().zip([-0.5, 0.5, 0.5, -0.5]) {
                assert!((got - want).abs() < 1e-12, "{lower:?}");
            }
            for got in &upper {
                assert!((got - 0.5).abs() < 1e-12, "{upper:?}");
            }
            let norm: f64 = lower.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lorentzian_weight_matches_closed_form() {
        // Σ_m 2η|Θ|² with η = (κ/2)/((κ/2)² + Δ²) against
        // (1 + cos θ)² g² / (κ (1 + 4Δ²/κ²)).
        let p = CircuitParams::reference(2);
        let kappa = angular(p.kappa_mhz);
        let g = angular(p.g_mhz);
        for &(theta, phi) in &[(0.0, 0.0), (FRAC_PI_2, PI), (2.5, 4.0)] {
            let targets = vec![QubitTarget::new(theta, phi).unwrap(); 2];
            let table = coupling_coefficients(&p, &targets).unwrap();
            for delta_over_kappa in [0.0, 0.5, 1.0] {
                let delta = delta_over_kappa * kappa;
                let eta = (kappa / 2.0) / (kappa * kappa / 4.0 + delta * delta);
                let gamma = 2.0 * eta * table.weight(Branch::Lower, 1);
                let closed =
                    (1.0 + theta.cos()).powi(2) * g * g / (kappa * (1.0 + 4.0 * delta_over_kappa * delta_over_kappa));
                assert!((gamma - closed).abs() <= 1e-10 * closed.max(1e-300));
            }
        }
    }

    #[test]
    fn frame_oracle_examples() {
        assert!(frame_transform_oracle(100.0, 100.0, 300.0, 0.0).unwrap().max() < 1e-13);
        // Ω̄t = π/4 in angular units.
        let t = FRAC_PI_4 / angular(100.0);
        assert!(frame_transform_oracle(100.0, 100.0, 300.0, t).unwrap().max() < 1e-10);
        // vt = π/3.
        let t = FRAC_PI_3 / angular(100.0);
        let r = frame_transform_oracle(100.0, 100.0, 300.0, t).unwrap();
        assert!(r.a_first < 1e-10 && r.a_second < 1e-10);
    }

    #[test]
    fn frame_oracle_random_draws() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let ob = rng.random_range(10.0..200.0);
            let v = rng.random_range(10.0..200.0);
            let dw = rng.random_range(50.0..400.0);
            let t = rng.random_range(0.0..0.02);
            let r = frame_transform_oracle(ob, v, dw, t).unwrap();
            assert!(r.max() < 1e-10, "{r:?} at ({ob}, {v}, {dw}, {t})");
        }
        let _ = TAU;
    }
}
