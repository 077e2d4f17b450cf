//! Open-system dynamics: Lindblad master equation on density matrices and
//! its quantum-jump unraveling on pure states.
//!
//! A collapse channel `(c, γ)` contributes `γ (c ρ c† − ½{c†c, ρ})`, i.e. a
//! jump operator `√γ c`. Both solvers first restrict the problem to the
//! basis states reachable from the initial support, which is exact.

mod ensemble;
mod master;
pub mod ode;
mod subspace;
mod trajectories;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuit::{angular, rotated_ladder, rotated_pauli, CircuitParams, QubitTarget, TempConvention};
use crate::error::{Error, Result};
use crate::ops::{destroy, embed, partial_trace, pauli, HilbertSpec, Operator, PauliAxis, QuantumState};

pub use ensemble::ProductEnsemble;
pub use master::{evolve_master, evolve_master_with_state, lindblad_rhs};
pub use subspace::Subspace;
pub use trajectories::{evolve_trajectories, evolve_trajectory_ensemble};

const PLANCK: f64 = 6.626_070_15e-34;
const BOLTZMANN: f64 = 1.380_649e-23;

/// Mean photon number of a mode at `f_c_ghz` in a bath at `t_c` kelvin.
pub fn thermal_occupancy(f_c_ghz: f64, t_c: f64, convention: TempConvention) -> Result<f64> {
    if t_c < 0.0 {
        return Err(Error::NegativeTemperature(t_c));
    }
    if t_c == 0.0 {
        return Ok(0.0);
    }
    let mut x = PLANCK * f_c_ghz * 1e9 / (BOLTZMANN * t_c);
    if convention == TempConvention::Paper {
        x *= std::f64::consts::TAU;
    }
    Ok(1.0 / x.exp_m1())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseChannel {
    pub op: Operator,
    /// Rate γ in 1/μs.
    pub rate: f64,
    pub label: String,
}

/// Basis in which qubit decay and dephasing act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DissipationBasis {
    /// Along the rotated operators `σ_−^(z)`, `σ_z^(z)`.
    #[default]
    Rotated,
    /// Along the bare `σ_−`, `σ_z`.
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationParams {
    #[serde(default)]
    pub enabled: bool,
    /// Qubit decay time T_θ (μs).
    #[serde(default = "default_t")]
    pub t_theta_us: f64,
    /// Qubit dephasing time T_φ (μs).
    #[serde(default = "default_t")]
    pub t_phi_us: f64,
    #[serde(default)]
    pub basis: DissipationBasis,
}

fn default_t() -> f64 {
    f64::INFINITY
}

impl Default for DissipationParams {
    fn default() -> Self {
        Self {
            enabled: false,
            t_theta_us: f64::INFINITY,
            t_phi_us: f64::INFINITY,
            basis: DissipationBasis::Rotated,
        }
    }
}

impl DissipationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t_theta_us", self.t_theta_us), ("t_phi_us", self.t_phi_us)] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Resonator loss and heating for every resonator, plus qubit decay and
/// dephasing when enabled. Zero-rate channels are omitted.
pub fn collapse_channels(
    params: &CircuitParams,
    targets: &[QubitTarget],
    diss: &DissipationParams,
) -> Result<Vec<CollapseChannel>> {
    params.validate()?;
    diss.validate()?;
    if targets.len() != params.n_qubits {
        return Err(Error::DimensionMismatch {
            context: "collapse_channels targets",
            expected: params.n_qubits,
            found: targets.len(),
        });
    }
    let spec = HilbertSpec::network(params.n_qubits, params.fock_levels)?;
    let nbar = thermal_occupancy(params.f_c_ghz, params.t_c_kelvin, params.temp_convention)?;
    let kappa = angular(params.kappa_mhz);
    let a = destroy(params.fock_levels)?;
    let mut out = Vec::new();
    for m in 1..=params.n_resonators() {
        let am = embed(&a, spec.resonator_slot(m)?, &spec)?;
        if nbar > 0.0 {
            out.push(CollapseChannel {
                op: am.adjoint(),
                rate: kappa * nbar,
                label: format!("heat a{m}"),
            });
        }
        out.push(CollapseChannel {
            op: am,
            rate: kappa * (1.0 + nbar),
            label: format!("loss a{m}"),
        });
    }
    if diss.enabled {
        for (idx, t) in targets.iter().enumerate() {
            let n = idx + 1;
            let slot = spec.qubit_slot(n)?;
            let (lower, z) = match diss.basis {
                DissipationBasis::Rotated => (rotated_ladder(*t).1, rotated_pauli(*t)[2].clone()),
                DissipationBasis::Lab => (pauli(PauliAxis::Minus), pauli(PauliAxis::Z)),
            };
            let decay = 2.0 / diss.t_theta_us;
            if decay > 0.0 {
                out.push(CollapseChannel {
                    op: embed(&lower, slot, &spec)?,
                    rate: decay,
                    label: format!("decay q{n}"),
                });
            }
            let dephase = 1.0 / diss.t_phi_us;
            if dephase > 0.0 {
                out.push(CollapseChannel {
                    op: embed(&z, slot, &spec)?,
                    rate: dephase,
                    label: format!("dephase q{n}"),
                });
            }
        }
    }
    Ok(out)
}

/// A labelled observable. `qubit` is set for single-qubit observables.
#[derive(Debug, Clone)]
pub struct Observable {
    pub label: String,
    pub qubit: Option<usize>,
    pub op: Operator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub t_final: f64,
    /// Upper bound on the integrator step (μs); `None` leaves it to the
    /// error control alone.
    pub dt_max: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub sample_times: Vec<f64>,
    /// Largest reduced dimension accepted by the density-matrix solver.
    pub dim_limit: usize,
    /// Largest reduced dimension at which sample-time eigenvalue checks run.
    pub positivity_check_limit: usize,
    /// Worker threads for trajectories; `None` uses every core.
    pub threads: Option<usize>,
}

pub const DEFAULT_DIM_LIMIT: usize = 4096;

impl SimOptions {
    /// `n_samples` evenly spaced sample times from 0 to `t_final`.
    pub fn uniform(t_final: f64, n_samples: usize) -> Self {
        let n = n_samples.max(2);
        let sample_times = (0..n).map(|k| t_final * k as f64 / (n - 1) as f64).collect();
        Self {
            t_final,
            dt_max: None,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            n_traj: 1,
            seed: 0,
            sample_times,
            dim_limit: DEFAULT_DIM_LIMIT,
            positivity_check_limit: 1024,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::param("t_final_us", "must be positive"));
        }
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if let Some(h) = self.dt_max {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::param("dt_max_us", "must be positive"));
            }
        }
        if self.sample_times.is_empty() {
            return Err(Error::param("sample_times", "at least one sample time"));
        }
        let mut prev = f64::NEG_INFINITY;
        for &t in &self.sample_times {
            if !(t.is_finite() && t >= 0.0 && t <= self.t_final * (1.0 + 1e-12)) || t <= prev {
                return Err(Error::param(
                    "sample_times",
                    "must be strictly increasing within [0, t_final]",
                ));
            }
            prev = t;
        }
        Ok(())
    }

    pub(crate) fn ode_options(&self) -> ode::OdeOptions {
        ode::OdeOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            h_max: self.dt_max.unwrap_or(f64::INFINITY).min(self.t_final),
        }
    }
}

/// Step cap that resolves the fastest interaction-frame oscillation with
/// twenty steps per period (μs).
pub fn default_dt_max(max_frequency_mhz: f64) -> f64 {
    1.0 / (20.0 * max_frequency_mhz)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesColumn {
    pub label: String,
    pub qubit: Option<usize>,
    pub values: Vec<f64>,
    /// Standard error of the mean; trajectory runs only.
    pub stderr: Option<Vec<f64>>,
}

/// Bookkeeping from a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunInfo {
    pub full_dim: usize,
    pub reduced_dim: usize,
    pub steps: usize,
    pub rejected: usize,
    pub jumps: usize,
    pub max_normalization_error: f64,
    pub max_hermiticity_residual: f64,
    /// Smallest eigenvalue seen at checked sample times.
    pub min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub columns: Vec<SeriesColumn>,
    pub info: RunInfo,
}

impl TimeSeries {
    pub fn column(&self, label: &str) -> Option<&SeriesColumn> {
        self.columns.iter().find(|c| c.label == label)
    }

    pub fn final_value(&self, label: &str) -> Option<f64> {
        self.column(label).and_then(|c| c.values.last().copied())
    }
}

/// `(⟨σ_x^(z)⟩, ⟨σ_y^(z)⟩, ⟨σ_z^(z)⟩)` of qubit `n` (1-based).
pub fn reduced_qubit_bloch(state: &QuantumState, n: usize, target: QubitTarget) -> Result<[f64; 3]> {
    let slot = state.spec().qubit_slot(n)?;
    let reduced = partial_trace(state, &[slot])?;
    let rho = reduced.density();
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(rotated_pauli(target)) {
        *o = p.iter().map(|(r, c, v)| v * rho[(c, r)]).sum::<C64>().re;
    }
    Ok(out)
}

/// State vector of the Bloch direction `(θ, φ)` in the bare basis:
/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn bloch_point(theta: f64, phi: f64) -> DVector<C64> {
    DVector::from_vec(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ])
}
