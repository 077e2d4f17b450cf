//! Network parameters, drive calibration, and the rotating-frame
//! Hamiltonians of the reset network.
//!
//! Configuration values are frequencies divided by 2π (GHz for carrier
//! frequencies, MHz for everything else). Operators built here are in
//! angular units, rad/μs, so that `exp(−iHt)` takes `t` in μs.

mod hamiltonian;
mod modes;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops::{pauli, Operator, PauliAxis};

pub use hamiltonian::{build_effective_interaction, build_h1, embedded_rotated_pauli, network_space};
pub use modes::{
    coupling_coefficients, frame_transform_oracle, mode_frequencies, Branch, CouplingTable, FrameResiduals,
    ModeSpectrum,
};

/// MHz (as ω/2π) to rad/μs.
pub fn angular(mhz: f64) -> f64 {
    TAU * mhz
}

/// How the bath temperature is turned into a photon occupancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TempConvention {
    /// Bose-Einstein with `x = h f / k_B T`.
    #[default]
    Physical,
    /// An extra factor 2π in the exponent: ⟨σ_z⟩ = −0.995 at 0.3 K and 6 GHz
    /// instead of −0.446.
    Paper,
}

impl FromStr for TempConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "physical" => Ok(TempConvention::Physical),
            "paper" => Ok(TempConvention::Paper),
            other => Err(Error::param(
                "temp_convention",
                format!("`{other}` (expected physical or paper)"),
            )),
        }
    }
}

impl fmt::Display for TempConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TempConvention::Physical => "physical",
            TempConvention::Paper => "paper",
        })
    }
}

/// Static description of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    pub n_qubits: usize,
    /// Resonator frequency (GHz).
    pub f_c_ghz: f64,
    /// Frame (drive) frequency (GHz).
    pub f_l_ghz: f64,
    /// Filter-filter hopping (MHz).
    pub v_mhz: f64,
    /// Effective Rabi frequency shared by every qubit drive (MHz).
    pub omega_bar_mhz: f64,
    /// Qubit-filter coupling (MHz).
    pub g_mhz: f64,
    /// Resonator energy decay rate (MHz).
    pub kappa_mhz: f64,
    /// Bath temperature (K).
    #[serde(default)]
    pub t_c_kelvin: f64,
    pub fock_levels: usize,
    #[serde(default)]
    pub temp_convention: TempConvention,
}

impl CircuitParams {
    /// Reference operating point: ω_c/2π = 6 GHz,
    /// ω_L/2π = 5.7 GHz, v/2π = Ω̄/2π = 100 MHz, g/2π = 2 MHz,
    /// κ/2π = 20 MHz, zero temperature.
    pub fn reference(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            f_c_ghz: 6.0,
            f_l_ghz: 5.7,
            v_mhz: 100.0,
            omega_bar_mhz: 100.0,
            g_mhz: 2.0,
            kappa_mhz: 20.0,
            t_c_kelvin: 0.0,
            fock_levels: 2,
            temp_convention: TempConvention::Paper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::param("n_qubits", "must be at least 1"));
        }
        if self.fock_levels < 2 {
            return Err(Error::InvalidCutoff(self.fock_levels));
        }
        for (name, value) in [
            ("f_c_ghz", self.f_c_ghz),
            ("f_l_ghz", self.f_l_ghz),
            ("v_mhz", self.v_mhz),
            ("omega_bar_mhz", self.omega_bar_mhz),
            ("g_mhz", self.g_mhz),
            ("kappa_mhz", self.kappa_mhz),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {value}")));
            }
        }
        if !self.t_c_kelvin.is_finite() {
            return Err(Error::param("t_c_kelvin", "must be finite"));
        }
        if self.t_c_kelvin < 0.0 {
            return Err(Error::NegativeTemperature(self.t_c_kelvin));
        }
        if self.delta_omega_mhz() <= 0.0 {
            return Err(Error::param(
                "f_l_ghz",
                "frame frequency must lie below the resonator frequency",
            ));
        }
        Ok(())
    }

    /// Resonator detuning from the frame, δω/2π (MHz).
    pub fn delta_omega_mhz(&self) -> f64 {
        self.f_c_ghz * 1000.0 - self.f_l_ghz * 1000.0
    }

    /// Reset-mode detuning Δ/2π = (δω − v − 2Ω̄)/2π (MHz).
    pub fn detuning_mhz(&self) -> f64 {
        self.delta_omega_mhz() - self.v_mhz - 2.0 * self.omega_bar_mhz
    }

    pub fn n_resonators(&self) -> usize {
        2 * self.n_qubits + 2
    }
}

/// Bloch-sphere direction of the state a qubit should be reset to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitTarget {
    pub theta: f64,
    pub phi: f64,
}

impl QubitTarget {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let t = Self { theta, phi };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::param("theta", format!("{} not in [0, π]", self.theta)));
        }
        if !(0.0..TAU).contains(&self.phi) {
            return Err(Error::param("phi", format!("{} not in [0, 2π)", self.phi)));
        }
        Ok(())
    }

    /// Rows are the rotated axes (x, y, z) expressed in the lab axes.
    pub fn rotation_matrix(&self) -> [[f64; 3]; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [[ct * cp, -ct * sp, st], [sp, cp, 0.0], [-st * cp, st * sp, ct]]
    }

    /// `Θ_± = e^{iφ}(cos θ ∓ 1)/2`, the weights of `σ_±^(z)` in the lab
    /// lowering operator.
    pub fn theta_pm(&self) -> (C64, C64) {
        let e = C64::from_polar(0.5, self.phi);
        let c = self.theta.cos();
        (e * (c - 1.0), e * (c + 1.0))
    }
}

/// Drive parameters of one qubit in the frame rotating at ω_L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSetting {
    /// Re Ω/2π (MHz).
    pub omega_re: f64,
    /// Im Ω/2π (MHz).
    pub omega_im: f64,
    /// Qubit-drive detuning δϖ/2π (MHz).
    pub delta_varpi: f64,
    /// Qubit frequency ω_n/2π (GHz).
    pub f_n: f64,
    /// Effective Rabi frequency Ω̄/2π (MHz).
    pub omega_bar: f64,
}

impl DriveSetting {
    pub fn omega(&self) -> C64 {
        C64::new(self.omega_re, self.omega_im)
    }
}

/// Drive that makes `target` the ground state of the dressed qubit.
pub fn calibrate_drive(target: QubitTarget, omega_bar: f64, f_l_ghz: f64) -> Result<DriveSetting> {
    if !(omega_bar.is_finite() && omega_bar > 0.0) {
        return Err(Error::param("omega_bar_mhz", "must be positive"));
    }
    let (st, ct) = target.theta.sin_cos();
    let omega = C64::from_polar(omega_bar * st, PI - target.phi);
    let delta_varpi = 2.0 * omega_bar * ct;
    Ok(DriveSetting {
        omega_re: omega.re,
        omega_im: omega.im,
        delta_varpi,
        f_n: f_l_ghz + delta_varpi / 1000.0,
        omega_bar,
    })
}

/// `√(|Ω|² + δϖ²/4)` in MHz.
pub fn effective_rabi(d: &DriveSetting) -> f64 {
    (d.omega().norm_sqr() + 0.25 * d.delta_varpi * d.delta_varpi).sqrt()
}

/// `(σ_x^(z), σ_y^(z), σ_z^(z))` on a single qubit.
pub fn rotated_pauli(target: QubitTarget) -> [Operator; 3] {
    let lab = [pauli(PauliAxis::X), pauli(PauliAxis::Y), pauli(PauliAxis::Z)];
    target.rotation_matrix().map(|row| {
        let mut acc = Operator::zeros(lab[0].spec().clone());
        for (w, p) in row.iter().zip(&lab) {
            if *w != 0.0 {
                acc = &acc + &p.scale_real(*w);
            }
        }
        acc
    })
}

/// Rotated ladder operators `(σ_+^(z), σ_−^(z)) = (σ_x^(z) ± iσ_y^(z))/2`.
pub fn rotated_ladder(target: QubitTarget) -> (Operator, Operator) {
    let [x, y, _] = rotated_pauli(target);
    let iy = y.scale(C64::new(0.0, 1.0));
    ((&x + &iy).scale_real(0.5), (&x - &iy).scale_real(0.5))
}

/// The −1 eigenvector of `σ_z^(z)` (first non-negligible amplitude real and
/// positive) together with `‖σ_z^(z)ψ + ψ‖`.
pub fn verify_target_eigenstate(target: QubitTarget) -> (DVector<C64>, f64) {
    let [_, _, z] = rotated_pauli(target);
    let eig = z.to_dense().symmetric_eigen();
    let idx = if eig.eigenvalues[0] < eig.eigenvalues[1] { 0 } else { 1 };
    let mut psi: DVector<C64> = eig.eigenvectors.column(idx).into_owned();
    if let Some(first) = psi.iter().find(|a| a.norm() > 1e-12).copied() {
        let phase = first.conj() / first.norm();
        psi *= phase;
    }
    psi /= C64::new(psi.norm(), 0.0);
    let residual = (z.to_dense() * &psi + &psi).norm();
    (psi, residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        (a.to_dense() - b.to_dense()).iter().all(|z| z.norm() < tol)
    }

    #[test]
    fn reference_point() {
        let p = CircuitParams::reference(3);
        p.validate().unwrap();
        assert!((p.delta_omega_mhz() - 300.0).abs() < 1e-9);
        assert!(p.detuning_mhz().abs() < 1e-9);
        assert_eq!(p.n_resonators(), 8);
        let mut bad = p.clone();
        bad.t_c_kelvin = -1.0;
        assert!(matches!(bad.validate(), Err(Error::NegativeTemperature(_))));
        bad = p.clone();
        bad.fock_levels = 1;
        assert!(matches!(bad.validate(), Err(Error::InvalidCutoff(1))));
    }

    #[test]
    fn calibration_examples() {
        let d = calibrate_drive(QubitTarget::new(0.0, 0.0).unwrap(), 100.0, 5.7).unwrap();
        assert!(d.omega().norm() < 1e-12);
        assert!((d.delta_varpi - 200.0).abs() < 1e-12);
        assert!((d.f_n - 5.9).abs() < 1e-12);

        let d = calibrate_drive(QubitTarget::new(FRAC_PI_2, PI).unwrap(), 100.0, 5.7).unwrap();
        assert!((d.omega() - C64::new(100.0, 0.0)).norm() < 1e-12);
        assert!((d.f_n - 5.7).abs() < 1e-12);

        let d = calibrate_drive(QubitTarget::new(FRAC_PI_2, FRAC_PI_2).unwrap(), 100.0, 5.7).unwrap();
        assert!((d.omega() - C64::new(0.0, 100.0)).norm() < 1e-12);
        assert!((d.f_n - 5.7).abs() < 1e-12);

        assert!(calibrate_drive(QubitTarget::new(0.0, 0.0).unwrap(), 0.0, 5.7).is_err());
    }

    #[test]
    fn effective_rabi_examples() {
        let d = |re: f64, dv: f64| DriveSetting {
            omega_re: re,
            omega_im: 0.0,
            delta_varpi: dv,
            f_n: 0.0,
            omega_bar: 0.0,
        };
        assert_eq!(effective_rabi(&d(100.0, 0.0)), 100.0);
        assert_eq!(effective_rabi(&d(0.0, 200.0)), 100.0);
    }

    #[test]
    fn target_ranges() {
        assert!(QubitTarget::new(-0.1, 0.0).is_err());
        assert!(QubitTarget::new(PI + 1e-9, 0.0).is_err());
        assert!(QubitTarget::new(0.0, TAU).is_err());
        assert!(QubitTarget::new(PI, 0.0).is_ok());
    }

    #[test]
    fn rotated_pauli_examples() {
        let [x, y, z] = rotated_pauli(QubitTarget::new(0.0, 0.0).unwrap());
        assert!(close(&x, &pauli(PauliAxis::X), 1e-15));
        assert!(close(&y, &pauli(PauliAxis::Y), 1e-15));
        assert!(close(&z, &pauli(PauliAxis::Z), 1e-15));
        let [_, _, z] = rotated_pauli(QubitTarget::new(FRAC_PI_2, 0.0).unwrap());
        assert!(close(&z, &pauli(PauliAxis::X).scale_real(-1.0), 1e-15));
    }

    #[test]
    fn rotation_is_orthogonal() {
        // R Rᵀ computed by explicit triple loop.
        for &(t, p) in &[(0.3, 1.1), (2.0, 5.5), (PI, 0.2), (FRAC_PI_2, PI)] {
            let r = QubitTarget::new(t, p).unwrap().rotation_matrix();
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn target_eigenstates() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (psi, res) = verify_target_eigenstate(QubitTarget::new(0.0, 1.3).unwrap());
        assert!(res < 1e-14);
        assert!((psi[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        let (psi, res) = verify_target_eigenstate(QubitTarget::new(FRAC_PI_2, 0.0).unwrap());
        assert!(res < 1e-14);
        assert!((psi[0] - C64::new(s, 0.0)).norm() < 1e-14);
        assert!((psi[1] - C64::new(s, 0.0)).norm() < 1e-14);
        let (psi, _) = verify_target_eigenstate(QubitTarget::new(FRAC_PI_2, FRAC_PI_2).unwrap());
        assert!((psi[0] - C64::new(s, 0.0)).norm() < 1e-14);
        assert!((psi[1] - C64::new(0.0, s)).norm() < 1e-14);
    }

    #[test]
    fn lab_lowering_decomposition() {
        // σ_− = Θ_+ σ_+^(z) + Θ_− σ_−^(z) − ½ e^{iφ} sinθ σ_z^(z)
        for &(t, p) in &[(0.0, 0.0), (0.7, 2.1), (FRAC_PI_2, PI), (3.0, 4.0)] {
            let target = QubitTarget::new(t, p).unwrap();
            let (tp, tm) = target.theta_pm();
            let (sp, sm) = rotated_ladder(target);
            let [_, _, z] = rotated_pauli(target);
            let rebuilt = &(&sp.scale(tp) + &sm.scale(tm)) - &z.scale(C64::from_polar(0.5 * t.sin(), p));
            assert!(close(&rebuilt, &pauli(PauliAxis::Minus), 1e-14));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rotated_paulis_are_a_pauli_triple(t in 0.0..=PI, p in 0.0..TAU) {
                let target = QubitTarget::new(t, p).unwrap();
                let [x, y, z] = rotated_pauli(target);
                let id = Operator::identity(x.spec().clone());
                for s in [&x, &y, &z] {
                    prop_assert!(s.is_hermitian());
                    prop_assert!(close(&(s * s), &id, 1e-12));
                }
                prop_assert!(close(&(&(&x * &y) + &(&y * &x)), &Operator::zeros(id.spec().clone()), 1e-12));
                prop_assert!(close(&(&x * &y), &z.scale(C64::new(0.0, 1.0)), 1e-12));
                let eig = z.to_dense().symmetric_eigen().eigenvalues;
                let (lo, hi) = (eig.min(), eig.max());
                prop_assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
            }

            #[test]
            fn calibration_ratios(t in 0.0..=PI, p in 0.0..TAU, ob in 1.0..500.0f64) {
                let d = calibrate_drive(QubitTarget::new(t, p).unwrap(), ob, 5.7).unwrap();
                let rel = (effective_rabi(&d) - ob).abs() / ob;
                prop_assert!(rel < 1e-12);
                let (st, ct) = t.sin_cos();
                let (sp, cp) = p.sin_cos();
                if (st * cp).abs() > 1e-3 {
                    prop_assert!((-d.omega_re / (st * cp) - ob).abs() / ob < 1e-12);
                }
                if (st * sp).abs() > 1e-3 {
                    prop_assert!((d.omega_im / (st * sp) - ob).abs() / ob < 1e-12);
                }
                if ct.abs() > 1e-3 {
                    prop_assert!((d.delta_varpi / (2.0 * ct) - ob).abs() / ob < 1e-12);
                }
                let (_, res) = verify_target_eigenstate(QubitTarget::new(t, p).unwrap());
                prop_assert!(res < 1e-12);
            }
        }
    }
}
