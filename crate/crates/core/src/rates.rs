//! Closed-form rate model for the rotated-basis populations of each qubit,
//! and a quadrature evaluation of the second-order kernel that the model is
//! derived from.
//!
//! Rates and couplings are angular (rad/μs); times are μs.

use std::f64::consts::TAU;

use crate::circuit::{coupling_coefficients, Branch, CircuitParams, QubitTarget, TempConvention};
use crate::dynamics::thermal_occupancy;
use crate::error::{Error, Result};

/// `(η, λ) = (2κ, 4Δ) / (κ² + 4Δ²)`, so that `η + iλ = 2/(κ − 2iΔ)`.
pub fn eta_lambda(kappa: f64, delta: f64) -> (f64, f64) {
    let den = kappa * kappa + 4.0 * delta * delta;
    (2.0 * kappa / den, 4.0 * delta / den)
}

/// `Γ = (1 + cos θ)² / (1 + 4(Δ/κ)²) · g²/κ`.
pub fn polarization_rate(theta: f64, delta: f64, g: f64, kappa: f64) -> f64 {
    let c = 1.0 + theta.cos();
    let r = delta / kappa;
    c * c / (1.0 + 4.0 * r * r) * g * g / kappa
}

/// `1/Γ`; infinite when the target is the bare excited state (θ = π), which
/// decouples from the resonators.
pub fn polarization_time(theta: f64, delta: f64, g: f64, kappa: f64) -> f64 {
    let rate = polarization_rate(theta, delta, g, kappa);
    if rate <= f64::MIN_POSITIVE {
        f64::INFINITY
    } else {
        1.0 / rate
    }
}

/// Populations of the rotated-basis eigenstates `|−⟩` (target) and `|+⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationVector {
    pub p_minus: f64,
    pub p_plus: f64,
}

impl PopulationVector {
    pub fn new(p_minus: f64, p_plus: f64) -> Result<Self> {
        let ok =
            (0.0..=1.0).contains(&p_minus) && (0.0..=1.0).contains(&p_plus) && (p_minus + p_plus - 1.0).abs() < 1e-12;
        if !ok {
            return Err(Error::param(
                "populations",
                format!("({p_minus}, {p_plus}) is not a probability vector"),
            ));
        }
        Ok(Self { p_minus, p_plus })
    }

    /// From `⟨σ_z^(z)⟩ = p_+ − p_−`.
    pub fn from_sz(sz: f64) -> Result<Self> {
        Self::new(0.5 * (1.0 - sz), 0.5 * (1.0 + sz))
    }

    pub fn sz(&self) -> f64 {
        self.p_plus - self.p_minus
    }
}

/// Generator acting on `(P_−, P_+)`, in units of Γ.
pub fn rate_matrix(nbar: f64) -> [[f64; 2]; 2] {
    [[-nbar, nbar + 1.0], [nbar, -(nbar + 1.0)]]
}

/// Exact solution of `dP/dt = Γ M P`: relaxation toward `(n̄+1, n̄)/(2n̄+1)`
/// at the total rate `Γ(2n̄+1)`.
pub fn evolve_rate(p0: PopulationVector, gamma: f64, nbar: f64, t: f64) -> PopulationVector {
    let total = 2.0 * nbar + 1.0;
    let s_minus = (nbar + 1.0) / total;
    let decay = (-gamma * total * t).exp();
    let p_minus = s_minus + (p0.p_minus - s_minus) * decay;
    PopulationVector {
        p_minus,
        p_plus: 1.0 - p_minus,
    }
}

/// Equilibrium `⟨σ_z^(z)⟩ = −1/(2n̄+1)` for a resonator bath at `t_c`.
pub fn steady_state_sz(f_c_ghz: f64, t_c: f64, convention: TempConvention) -> Result<f64> {
    let nbar = thermal_occupancy(f_c_ghz, t_c, convention)?;
    Ok(-1.0 / (2.0 * nbar + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    /// Fitted time constant (μs).
    pub t_fit: f64,
    pub amplitude: f64,
    /// Root-mean-square residual over the fitted window.
    pub rms: f64,
    /// Set when `rms` exceeds [`POOR_FIT_RMS`].
    pub poor_fit: bool,
    pub n_points: usize,
}

pub const POOR_FIT_RMS: f64 = 0.05;

/// Least-squares fit of `A e^{−t/T} − 1` to `(times, values)`, restricted to
/// `t ≤ window` when given. The amplitude is solved for exactly at each
/// trial `T`, and `log T` is optimized by a grid scan followed by
/// golden-section refinement.
pub fn fit_exponential(times: &[f64], values: &[f64], window: Option<f64>) -> Result<ExpFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            context: "fit_exponential",
            expected: times.len(),
            found: values.len(),
        });
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| window.is_none_or(|w| **t <= w * (1.0 + 1e-12)))
        .map(|(&t, &v)| (t, v + 1.0))
        .collect();
    if pts.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "need at least 5 samples in the window, got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::DegenerateFit("non-finite samples".into()));
    }
    let y_max = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let first = pts[0].1;
    if y_max < 1e-12 || pts.iter().all(|p| (p.1 - first).abs() < 1e-12) {
        return Err(Error::DegenerateFit("series shows no decay".into()));
    }
    let t_min = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_max = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = t_max - t_min;
    if !(span > 0.0) {
        return Err(Error::DegenerateFit("all samples at one time".into()));
    }

    // Profiled residual at log T.
    let sse = |log_t: f64| -> (f64, f64) {
        let tau = log_t.exp();
        let (mut ee, mut ey) = (0.0, 0.0);
        for &(t, y) in &pts {
            let e = (-t / tau).exp();
            ee += e * e;
            ey += e * y;
        }
        let a = if ee > 0.0 { ey / ee } else { 0.0 };
        let s = pts
            .iter()
            .map(|&(t, y)| {
                let r = a * (-t / tau).exp() - y;
                r * r
            })
            .sum();
        (s, a)
    };
    let (lo, hi) = ((span * 1e-4).ln(), (span * 1e4).ln());
    let grid = 400;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=grid {
        let x = lo + (hi - lo) * k as f64 / grid as f64;
        let s = sse(x).0;
        if s < best.0 {
            best = (s, x);
        }
    }
    let step = (hi - lo) / grid as f64;
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (sse(c).0, sse(d).0);
    while b - a > 1e-13 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sse(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sse(d).0;
        }
    }
    let x = 0.5 * (a + b);
    let (s, amp) = sse(x);
    let rms = (s / pts.len() as f64).sqrt();
    Ok(ExpFit {
        t_fit: x.exp(),
        amplitude: amp,
        rms,
        poor_fit: rms > POOR_FIT_RMS,
        n_points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Absolute error target relative to the integral scale `2/κ`.
    pub rel_tol: f64,
    /// Truncation point in units of `1/κ`.
    pub cutoff_kappa_units: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            cutoff_kappa_units: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tcl2Rate {
    pub gamma: f64,
    /// Quadrature error estimate on `Γ`.
    pub error_estimate: f64,
    /// Bound on the neglected tail beyond the cutoff, on `Γ`.
    pub tail_bound: f64,
}

/// Decay rate of the rotated-basis population from the second-order kernel,
/// `Γ = 2 Re ∫₀^∞ e^{−κτ/2} e^{iΔτ} dτ · Σ_m |Θ^l_{m}|²`, with the integral
/// done by double-exponential quadrature and the weights taken from the
/// branch-resolved coupling table.
pub fn tcl2_numeric_rate(
    theta: f64,
    delta: f64,
    g: f64,
    kappa: f64,
    branch: Branch,
    opts: QuadOptions,
) -> Result<Tcl2Rate> {
    if !(kappa > 0.0) {
        return Err(Error::param("kappa", "must be positive"));
    }
    let params = CircuitParams {
        n_qubits: 1,
        g_mhz: g / TAU,
        kappa_mhz: kappa / TAU,
        ..CircuitParams::reference(1)
    };
    let table = coupling_coefficients(&params, &[QubitTarget::new(theta, 0.0)?])?;
    let weight = table.weight(branch, 1);
    let upper = opts.cutoff_kappa_units / kappa;
    let scale = 2.0 / kappa;
    let target = opts.rel_tol * scale;
    let re = quadrature::integrate(
        |tau| (-0.5 * kappa * tau).exp() * (delta * tau).cos(),
        0.0,
        upper,
        target,
    );
    if !(re.error_estimate <= target * 10.0) || !re.integral.is_finite() {
        return Err(Error::QuadratureFailure {
            estimate: re.error_estimate,
        });
    }
    let tail = (-0.5 * kappa * upper).exp() * scale;
    Ok(Tcl2Rate {
        gamma: 2.0 * weight * re.integral,
        error_estimate: 2.0 * weight * re.error_estimate,
        tail_bound: 2.0 * weight * tail,
    })
}

/// The imaginary part of the same kernel, `∫₀^∞ e^{−κτ/2} sin(Δτ) dτ`,
/// which equals `λ`. The coherent shift it produces is not part of
/// the rate model.
pub fn tcl2_kernel_imag(delta: f64, kappa: f64, opts: QuadOptions) -> Result<f64> {
    let upper = opts.cutoff_kappa_units / kappa;
    let target = opts.rel_tol * 2.0 / kappa;
    let im = quadrature::integrate(
        |tau| (-0.5 * kappa * tau).exp() * (delta * tau).sin(),
        0.0,
        upper,
        target,
    );
    if !(im.error_estimate <= target * 10.0) {
        return Err(Error::QuadratureFailure {
            estimate: im.error_estimate,
        });
    }
    Ok(im.integral)
}
