use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use super::config::{ExperimentConfig, HamiltonianKind, ObservableKind, OneOrMany, SimSpec, Solver};
use super::overrides::{apply_overrides, parse_path, set_numeric, Override, PathSeg};
use super::preset::{QubitPreset, ResonatorPreset};
use super::table::{ResultTable, Row};
use crate::circuit::{
    angular, build_effective_interaction, build_h1, calibrate_drive, embedded_rotated_pauli, network_space,
    verify_target_eigenstate, CircuitParams, QubitTarget,
};
use crate::dynamics::{
    bloch_point, collapse_channels, evolve_master, evolve_trajectory_ensemble, thermal_occupancy, CollapseChannel,
    DissipationBasis, DissipationParams, Observable, ProductEnsemble, RunInfo, SeriesColumn, TimeSeries,
};
use crate::error::{Error, Result};
use crate::ops::{embed, pauli, HilbertSpec, Operator, PauliAxis};
use crate::rates::{evolve_rate, fit_exponential, polarization_rate, ExpFit, PopulationVector};

/// Hamiltonian, channels, observables and initial ensemble of one config.
pub struct System {
    pub spec: HilbertSpec,
    pub h: Operator,
    pub channels: Vec<CollapseChannel>,
    pub observables: Vec<Observable>,
    pub initial: ProductEnsemble,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub series: TimeSeries,
}

/// `(|−⟩, |+⟩)` of the rotated basis.
fn rotated_eigenstates(target: QubitTarget) -> (DVector<C64>, DVector<C64>) {
    let (minus, _) = verify_target_eigenstate(target);
    let plus = DVector::from_vec(vec![-minus[1].conj(), minus[0].conj()]);
    (minus, plus)
}

fn qubit_members(preset: QubitPreset, target: QubitTarget) -> Vec<(f64, DVector<C64>)> {
    match preset {
        QubitPreset::Ground => vec![(1.0, bloch_point(0.0, 0.0))],
        QubitPreset::MaximallyMixedRotated => {
            let (m, p) = rotated_eigenstates(target);
            vec![(0.5, m), (0.5, p)]
        }
        QubitPreset::BlochPoint { theta, phi } => vec![(1.0, bloch_point(theta, phi))],
    }
}

fn basis_vec(d: usize, k: usize) -> DVector<C64> {
    let mut v = DVector::zeros(d);
    v[k] = C64::new(1.0, 0.0);
    v
}

fn resonator_members(preset: ResonatorPreset, params: &CircuitParams) -> Result<Vec<(f64, DVector<C64>)>> {
    let d = params.fock_levels;
    let nbar = match preset {
        ResonatorPreset::Vacuum => 0.0,
        ResonatorPreset::Thermal => thermal_occupancy(params.f_c_ghz, params.t_c_kelvin, params.temp_convention)?,
    };
    if nbar == 0.0 {
        return Ok(vec![(1.0, basis_vec(d, 0))]);
    }
    let r = nbar / (1.0 + nbar);
    Ok((0..d).map(|k| (r.powi(k as i32), basis_vec(d, k))).collect())
}

pub fn initial_ensemble(cfg: &ExperimentConfig) -> Result<ProductEnsemble> {
    let spec = network_space(&cfg.circuit)?;
    let res = resonator_members(cfg.initial.resonators, &cfg.circuit)?;
    let mut factors = vec![res; cfg.circuit.n_resonators()];
    for (p, t) in cfg.qubit_presets().into_iter().zip(&cfg.targets) {
        factors.push(qubit_members(p, *t));
    }
    ProductEnsemble::new(spec, factors)
}

fn observables(cfg: &ExperimentConfig, spec: &HilbertSpec) -> Result<Vec<Observable>> {
    let kinds = cfg.resolved_observables();
    let mut out = Vec::new();
    for (idx, target) in cfg.targets.iter().enumerate() {
        let n = idx + 1;
        let slot = spec.qubit_slot(n)?;
        let rotated = embedded_rotated_pauli(spec, n, *target)?;
        for &kind in &kinds {
            let op = match kind {
                ObservableKind::Sx => embed(&pauli(PauliAxis::X), slot, spec)?,
                ObservableKind::Sy => embed(&pauli(PauliAxis::Y), slot, spec)?,
                ObservableKind::Sz => embed(&pauli(PauliAxis::Z), slot, spec)?,
                ObservableKind::SxRot => rotated[0].clone(),
                ObservableKind::SyRot => rotated[1].clone(),
                ObservableKind::SzRot => rotated[2].clone(),
            };
            out.push(Observable {
                label: kind.name().to_string(),
                qubit: Some(n),
                op,
            });
        }
    }
    Ok(out)
}

pub fn build_system(cfg: &ExperimentConfig) -> Result<System> {
    cfg.validate()?;
    let p = &cfg.circuit;
    let spec = network_space(p)?;
    let h = match cfg.hamiltonian {
        HamiltonianKind::Full => {
            let drives = cfg
                .targets
                .iter()
                .map(|t| calibrate_drive(*t, p.omega_bar_mhz, p.f_l_ghz))
                .collect::<Result<Vec<_>>>()?;
            build_h1(p, &drives)?
        }
        HamiltonianKind::Effective => build_effective_interaction(p, &cfg.targets, p.detuning_mhz())?,
    };
    Ok(System {
        channels: collapse_channels(p, &cfg.targets, &cfg.dissipation)?,
        observables: observables(cfg, &spec)?,
        initial: initial_ensemble(cfg)?,
        spec,
        h,
    })
}

/// `⟨σ_z^(z)⟩` of a single-qubit ensemble.
fn rotated_sz(members: &[(f64, DVector<C64>)], target: QubitTarget) -> f64 {
    let [_, _, z] = crate::circuit::rotated_pauli(target);
    members
        .iter()
        .map(|(w, psi)| {
            let zpsi = z.apply_vec(psi.as_slice());
            w * psi.iter().zip(&zpsi).map(|(a, b)| a.conj() * b).sum::<C64>().re
        })
        .sum()
}

fn run_rate(cfg: &ExperimentConfig) -> Result<TimeSeries> {
    let p = &cfg.circuit;
    let opts = cfg.sim_options();
    let nbar = thermal_occupancy(p.f_c_ghz, p.t_c_kelvin, p.temp_convention)?;
    let (g, kappa, delta) = (angular(p.g_mhz), angular(p.kappa_mhz), angular(p.detuning_mhz()));
    let mut columns = Vec::new();
    for (idx, (preset, target)) in cfg.qubit_presets().into_iter().zip(&cfg.targets).enumerate() {
        let sz0 = rotated_sz(&qubit_members(preset, *target), *target).clamp(-1.0, 1.0);
        let p0 = PopulationVector::from_sz(sz0)?;
        let gamma = polarization_rate(target.theta, delta, g, kappa);
        columns.push(SeriesColumn {
            label: ObservableKind::SzRot.name().into(),
            qubit: Some(idx + 1),
            values: opts
                .sample_times
                .iter()
                .map(|&t| evolve_rate(p0, gamma, nbar, t).sz())
                .collect(),
            stderr: None,
        });
    }
    Ok(TimeSeries {
        times: opts.sample_times,
        columns,
        info: RunInfo::default(),
    })
}

/// Run one configuration with its configured solver.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let series = match cfg.solver {
        Solver::Rate => run_rate(cfg)?,
        Solver::Master => {
            let sys = build_system(cfg)?;
            evolve_master(
                &sys.h,
                &sys.channels,
                &sys.initial.density(),
                &cfg.sim_options(),
                &sys.observables,
            )?
        }
        Solver::Trajectories => {
            let sys = build_system(cfg)?;
            evolve_trajectory_ensemble(
                &sys.h,
                &sys.channels,
                &sys.initial,
                &cfg.sim_options(),
                &sys.observables,
            )?
        }
    };
    let mut table = ResultTable::new();
    table.push_series(&series, &cfg.solver.to_string(), None)?;
    Ok(RunOutput { table, series })
}

pub const SCENARIOS: [&str; 5] = ["fig2", "fig2_inset", "fig3a", "fig3b", "fig3c"];

/// Temperatures (K) of the equilibrium ladder.
pub const FIG2_TEMPERATURES: [f64; 4] = [0.0, 0.3, 0.4, 0.5];

/// `Γ_n t` range of the rate curves.
pub const FIG2_GAMMA_T: f64 = 16.0;

/// Single qubit aimed at the lab ground state, starting maximally mixed.
fn fig2_config() -> ExperimentConfig {
    let circuit = CircuitParams::reference(1);
    let gamma_n = 4.0 * angular(circuit.g_mhz).powi(2) / angular(circuit.kappa_mhz);
    ExperimentConfig {
        solver: Solver::Rate,
        hamiltonian: HamiltonianKind::Effective,
        observables: None,
        circuit,
        targets: vec![QubitTarget { theta: 0.0, phi: 0.0 }],
        initial: super::config::InitialSpec {
            qubits: OneOrMany::One(QubitPreset::MaximallyMixedRotated),
            resonators: ResonatorPreset::Vacuum,
        },
        dissipation: DissipationParams::default(),
        sim: SimSpec::new(FIG2_GAMMA_T / gamma_n, 161),
        outputs: Default::default(),
    }
}

/// Three qubits reset to `(⟨σ_x¹⟩, ⟨σ_y²⟩, ⟨σ_z³⟩) = (−1, −1, −1)` from
/// `(⟨σ_y¹⟩, ⟨σ_z²⟩, ⟨σ_x³⟩) = (1, 1, 1)` with the resonators in vacuum.
fn fig3_config(g_mhz: f64, kappa_mhz: f64, t_final: f64, qubit_loss: bool) -> ExperimentConfig {
    let circuit = CircuitParams {
        g_mhz,
        kappa_mhz,
        ..CircuitParams::reference(3)
    };
    let mut sim = SimSpec::new(t_final, 81);
    sim.n_traj = 200;
    sim.rel_tol = 1e-5;
    sim.abs_tol = 1e-7;
    let dissipation = if qubit_loss {
        DissipationParams {
            enabled: true,
            t_theta_us: 20.0,
            t_phi_us: 10.0,
            basis: DissipationBasis::Rotated,
        }
    } else {
        DissipationParams::default()
    };
    ExperimentConfig {
        solver: Solver::Trajectories,
        hamiltonian: HamiltonianKind::Full,
        observables: None,
        circuit,
        targets: vec![
            QubitTarget {
                theta: FRAC_PI_2,
                phi: PI,
            },
            QubitTarget {
                theta: FRAC_PI_2,
                phi: FRAC_PI_2,
            },
            QubitTarget { theta: 0.0, phi: 0.0 },
        ],
        initial: super::config::InitialSpec {
            qubits: OneOrMany::Many(vec![
                QubitPreset::BlochPoint {
                    theta: FRAC_PI_2,
                    phi: 1.5 * PI,
                },
                QubitPreset::BlochPoint { theta: PI, phi: 0.0 },
                QubitPreset::BlochPoint {
                    theta: FRAC_PI_2,
                    phi: 0.0,
                },
            ]),
            resonators: ResonatorPreset::Vacuum,
        },
        dissipation,
        sim,
        outputs: Default::default(),
    }
}

/// The base configuration of a named scenario before overrides.
pub fn scenario_config(name: &str) -> Result<ExperimentConfig> {
    let mut cfg = match name {
        "fig2" | "fig2_inset" => fig2_config(),
        "fig3a" => fig3_config(2.0, 20.0, 3.2, false),
        "fig3b" => fig3_config(15.0, 10.0, 0.32, false),
        "fig3c" => fig3_config(15.0, 10.0, 0.32, true),
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    cfg.outputs.stem = name.to_string();
    Ok(cfg)
}

/// Detunings Δ/κ sampled by the rate surface.
pub fn inset_detunings() -> Vec<f64> {
    (0..=40).map(|k| k as f64 * 0.05).collect()
}

/// Polar angles θ sampled by the rate surface.
pub fn inset_thetas() -> Vec<f64> {
    (0..=8).map(|k| k as f64 * PI / 8.0).collect()
}

fn run_inset(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let p = &cfg.circuit;
    let (g, kappa) = (angular(p.g_mhz), angular(p.kappa_mhz));
    let mut table = ResultTable::new();
    for theta in inset_thetas() {
        for x in inset_detunings() {
            table.push(Row {
                t_us: 0.0,
                qubit: Some(1),
                observable: format!("gamma|d_over_k={x:?}|theta={theta:?}"),
                value: polarization_rate(theta, x * kappa, g, kappa),
                stderr: None,
                solver: Solver::Rate.to_string(),
            })?;
        }
    }
    Ok(table)
}

/// Run a named scenario with `path=value` overrides applied to its base
/// configuration. `fig2` repeats the run at each bath temperature and
/// `fig2_inset` tabulates Γ(Δ/κ, θ) at `t_us = 0`.
pub fn run_scenario(name: &str, overrides: &[Override]) -> Result<(ExperimentConfig, ResultTable)> {
    let cfg = apply_overrides(&scenario_config(name)?, overrides)?;
    let table = match name {
        "fig2" => {
            let mut table = ResultTable::new();
            for t_c in FIG2_TEMPERATURES {
                let mut c = cfg.clone();
                c.circuit.t_c_kelvin = t_c;
                let out = run_config(&c)?;
                table.push_series(&out.series, &c.solver.to_string(), Some(&format!("t_c={t_c:?}")))?;
            }
            table
        }
        "fig2_inset" => run_inset(&cfg)?,
        _ => run_config(&cfg)?.table,
    };
    Ok((cfg, table))
}

/// A swept quantity: a numeric config field by path, or one of the derived
/// axes `detuning_over_kappa` (sets Ω̄ so that Δ = xκ) and `theta` (sets
/// every target's polar angle).
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Path(Vec<PathSeg>),
    DetuningOverKappa,
    Theta,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "detuning_over_kappa" => Ok(SweepAxis::DetuningOverKappa),
            "theta" => Ok(SweepAxis::Theta),
            other => parse_path(other).map(SweepAxis::Path),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepAxis::DetuningOverKappa => f.write_str("detuning_over_kappa"),
            SweepAxis::Theta => f.write_str("theta"),
            SweepAxis::Path(p) => {
                let parts: Vec<String> = p.iter().map(|s| s.to_string()).collect();
                f.write_str(&parts.join("."))
            }
        }
    }
}

impl SweepAxis {
    pub fn apply(&self, cfg: &ExperimentConfig, x: f64) -> Result<ExperimentConfig> {
        if !x.is_finite() {
            return Err(Error::param(self.to_string(), "sweep values must be finite"));
        }
        let mut c = cfg.clone();
        match self {
            SweepAxis::Path(p) => return set_numeric(cfg, p, x),
            SweepAxis::DetuningOverKappa => {
                let p = &cfg.circuit;
                c.circuit.omega_bar_mhz = 0.5 * (p.delta_omega_mhz() - p.v_mhz - x * p.kappa_mhz);
            }
            SweepAxis::Theta => c.targets.iter_mut().for_each(|t| t.theta = x),
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    /// Exponential fit of each qubit's `sz_rot`, when recorded and fittable.
    pub fits: Vec<Option<ExpFit>>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub table: ResultTable,
    pub points: Vec<SweepPoint>,
}

/// Run `cfg` once per value in order, offsetting the seed by the point
/// index and tagging each block's observables with `axis=value`.
pub fn run_sweep(cfg: &ExperimentConfig, axis: &SweepAxis, values: &[f64]) -> Result<SweepOutput> {
    cfg.validate()?;
    let mut table = ResultTable::new();
    let mut points = Vec::with_capacity(values.len());
    for (i, &x) in values.iter().enumerate() {
        let mut c = axis.apply(cfg, x)?;
        c.sim.seed = cfg.sim.seed.wrapping_add(i as u64);
        let out = run_config(&c)?;
        table.push_series(&out.series, &c.solver.to_string(), Some(&format!("{axis}={x:?}")))?;
        let fits = (1..=c.circuit.n_qubits)
            .map(|n| {
                let col = out
                    .series
                    .columns
                    .iter()
                    .find(|col| col.qubit == Some(n) && col.label == ObservableKind::SzRot.name())?;
                fit_exponential(&out.series.times, &col.values, None).ok()
            })
            .collect();
        points.push(SweepPoint { value: x, fits });
    }
    Ok(SweepOutput { table, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::tests::MINIMAL;
    use crate::experiment::overrides::parse_override;

    #[test]
    fn fig2_endpoints() {
        let (_, table) = run_scenario("fig2", &[]).unwrap();
        for (t_c, want) in [(0.0, -1.000), (0.3, -0.995), (0.4, -0.979), (0.5, -0.948)] {
            let v = table.final_value(Some(1), &format!("sz_rot|t_c={t_c:?}")).unwrap();
            assert!((v - want).abs() <= 1e-3, "{t_c}: {v}");
        }
        let (times, values) = table.series(Some(1), "sz_rot|t_c=0.0");
        assert_eq!(times.len(), 161);
        assert_eq!(values[0], 0.0);
        // Γ_n t = 16 at the last sample.
        assert!((values[160] - ((-16f64).exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn inset_origin_is_reference_rate() {
        let (_, table) = run_scenario("fig2_inset", &[]).unwrap();
        assert_eq!(table.len(), 41 * 9);
        let v = table.final_value(Some(1), "gamma|d_over_k=0.0|theta=0.0").unwrap();
        let (g, k) = (angular(2.0), angular(20.0));
        assert!((v - 4.0 * g * g / k).abs() < 1e-12);
    }

    #[test]
    fn scenario_names() {
        assert!(matches!(scenario_config("fig4"), Err(Error::UnknownScenario(_))));
        for name in SCENARIOS {
            scenario_config(name).unwrap().validate().unwrap();
        }
        let c = scenario_config("fig3c").unwrap();
        assert!(c.dissipation.enabled && c.circuit.g_mhz == 15.0 && c.sim.n_traj == 200);
    }

    #[test]
    fn fig3_initial_state_directions() {
        let cfg = scenario_config("fig3a").unwrap();
        let presets = cfg.qubit_presets();
        let x = pauli(PauliAxis::X);
        let y = pauli(PauliAxis::Y);
        let z = pauli(PauliAxis::Z);
        let ev = |op: &Operator, p: QubitPreset| {
            let psi = &qubit_members(p, cfg.targets[0])[0].1;
            let opsi = op.apply_vec(psi.as_slice());
            psi.iter().zip(&opsi).map(|(a, b)| a.conj() * b).sum::<C64>().re
        };
        assert!((ev(&y, presets[0]) - 1.0).abs() < 1e-12);
        assert!((ev(&z, presets[1]) - 1.0).abs() < 1e-12);
        assert!((ev(&x, presets[2]) - 1.0).abs() < 1e-12);
        // Each target's −1 rotated eigenstate is −1 along its lab axis.
        for (t, op) in cfg.targets.iter().zip([&x, &y, &z]) {
            let (minus, _) = rotated_eigenstates(*t);
            let opm = op.apply_vec(minus.as_slice());
            let v: f64 = minus.iter().zip(&opm).map(|(a, b)| a.conj() * b).sum::<C64>().re;
            assert!((v + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_rotated_preset_is_unpolarized() {
        for t in [
            QubitTarget { theta: 0.7, phi: 2.0 },
            QubitTarget { theta: PI, phi: 0.0 },
        ] {
            let m = qubit_members(QubitPreset::MaximallyMixedRotated, t);
            assert!(rotated_sz(&m, t).abs() < 1e-14);
            assert!((rotated_sz(&[(1.0, m[0].1.clone())], t) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_resonators_weights() {
        let mut p = CircuitParams::reference(1);
        p.t_c_kelvin = 0.5;
        p.fock_levels = 3;
        let m = resonator_members(ResonatorPreset::Thermal, &p).unwrap();
        let nbar = thermal_occupancy(6.0, 0.5, p.temp_convention).unwrap();
        let r = nbar / (1.0 + nbar);
        assert_eq!(m.len(), 3);
        assert!((m[2].0 / m[0].0 - r * r).abs() < 1e-15);
        p.t_c_kelvin = 0.0;
        assert_eq!(resonator_members(ResonatorPreset::Thermal, &p).unwrap().len(), 1);
    }

    #[test]
    fn rate_sweeps() {
        let base = apply_overrides(
            &ExperimentConfig::parse(MINIMAL).unwrap(),
            &[
                parse_override("solver=rate").unwrap(),
                parse_override("initial.qubits=maximally_mixed_rotated").unwrap(),
            ],
        )
        .unwrap();
        let axis: SweepAxis = "detuning_over_kappa".parse().unwrap();
        let out = run_sweep(&base, &axis, &[0.0, 0.5, 1.0]).unwrap();
        let t: Vec<f64> = out.points.iter().map(|p| p.fits[0].unwrap().t_fit).collect();
        assert!((t[0] / t[1] - 0.5).abs() < 1e-6);
        assert!((t[0] / t[2] - 0.2).abs() < 1e-6);
        assert_eq!(out.table.keys().len(), 3);

        let out = run_sweep(&base, &SweepAxis::Theta, &[0.0, FRAC_PI_2]).unwrap();
        let t: Vec<f64> = out.points.iter().map(|p| p.fits[0].unwrap().t_fit).collect();
        assert!((t[1] / t[0] - 4.0).abs() < 1e-5);

        let empty = run_sweep(&base, &axis, &[]).unwrap();
        assert!(empty.table.is_empty());
        assert!(run_sweep(&base, &"solver".parse().unwrap(), &[1.0]).is_err());
        assert!(run_sweep(&base, &"circuit.g_mhz".parse().unwrap(), &[1.0, 3.0]).is_ok());
    }

    #[test]
    fn master_and_rate_agree_in_effective_frame() {
        // Lossy resonators adiabatically follow at g ≪ κ, so the rate model is
        // within a few percent of the effective-frame master solution.
        let text = format!("hamiltonian = \"effective\"\n{MINIMAL}")
            .replace("t_final_us = 1.0", "t_final_us = 0.6\nn_samples = 31");
        let base = apply_overrides(
            &ExperimentConfig::parse(&text).unwrap(),
            &[parse_override("initial.qubits=maximally_mixed_rotated").unwrap()],
        )
        .unwrap();
        let master = run_config(&base).unwrap();
        let mut rate_cfg = base.clone();
        rate_cfg.solver = Solver::Rate;
        let rate = run_config(&rate_cfg).unwrap();
        let a = master.table.final_value(Some(1), "sz_rot").unwrap();
        let b = rate.table.final_value(Some(1), "sz_rot").unwrap();
        assert!((a - b).abs() < 0.03, "{a} vs {b}");
    }
}
