use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::preset::{QubitPreset, ResonatorPreset};
use crate::circuit::{CircuitParams, QubitTarget};
use crate::dynamics::{DissipationParams, SimOptions, DEFAULT_DIM_LIMIT};
use crate::error::{Error, Result};

/// Environment variable capping trajectory parallelism.
pub const THREADS_ENV: &str = "QRESET_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Master,
    Trajectories,
    Rate,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Master => "master",
            Solver::Trajectories => "trajectories",
            Solver::Rate => "rate",
        })
    }
}

/// Which Hamiltonian the master and trajectory solvers integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianKind {
    /// Driven network in the frame of the drive frequency.
    #[default]
    Full,
    /// Resonant qubit-mode interaction only; lab-frame transverse
    /// observables are not meaningful in its frame.
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    Sx,
    Sy,
    Sz,
    SxRot,
    SyRot,
    SzRot,
}

impl ObservableKind {
    pub const ALL: [ObservableKind; 6] = [
        ObservableKind::Sx,
        ObservableKind::Sy,
        ObservableKind::Sz,
        ObservableKind::SxRot,
        ObservableKind::SyRot,
        ObservableKind::SzRot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::Sx => "sx",
            ObservableKind::Sy => "sy",
            ObservableKind::Sz => "sz",
            ObservableKind::SxRot => "sx_rot",
            ObservableKind::SyRot => "sy_rot",
            ObservableKind::SzRot => "sz_rot",
        }
    }

    pub fn is_rotated(self) -> bool {
        matches!(
            self,
            ObservableKind::SxRot | ObservableKind::SyRot | ObservableKind::SzRot
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// One preset for every qubit, or one per qubit.
    #[serde(default = "default_qubits")]
    pub qubits: OneOrMany<QubitPreset>,
    #[serde(default)]
    pub resonators: ResonatorPreset,
}

fn default_qubits() -> OneOrMany<QubitPreset> {
    OneOrMany::One(QubitPreset::Ground)
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            qubits: default_qubits(),
            resonators: ResonatorPreset::Vacuum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub t_final_us: f64,
    /// Uniformly spaced samples including both end points.
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max_us: Option<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    /// Largest reachable-subspace dimension the solvers accept.
    #[serde(default = "default_dim_limit")]
    pub dim_limit: usize,
}

fn default_samples() -> usize {
    101
}
fn default_rel_tol() -> f64 {
    1e-8
}
fn default_abs_tol() -> f64 {
    1e-10
}
fn default_n_traj() -> usize {
    100
}
fn default_dim_limit() -> usize {
    DEFAULT_DIM_LIMIT
}

impl SimSpec {
    pub fn new(t_final_us: f64, n_samples: usize) -> Self {
        Self {
            t_final_us,
            n_samples,
            dt_max_us: None,
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            n_traj: default_n_traj(),
            seed: 0,
            dim_limit: DEFAULT_DIM_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown format `{other}` (expected csv or svg)"))),
        }
    }
}

/// Parse `csv`, `svg` or `csv,svg`.
pub fn parse_formats(s: &str) -> Result<Vec<Format>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let f: Format = part.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File name without extension.
    #[serde(default = "default_stem")]
    pub stem: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_stem() -> String {
    "result".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            stem: default_stem(),
            formats: default_formats(),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub hamiltonian: HamiltonianKind,
    /// Defaults to lab and rotated components for the full Hamiltonian and
    /// `sz_rot` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<ObservableKind>>,
    pub circuit: CircuitParams,
    pub targets: Vec<QubitTarget>,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub dissipation: DissipationParams,
    pub sim: SimSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

impl ExperimentConfig {
    /// Parse and validate TOML text.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        let n = self.circuit.n_qubits;
        if self.targets.len() != n {
            return Err(Error::param(
                "targets",
                format!("expected {n} entries (one per qubit), found {}", self.targets.len()),
            ));
        }
        for t in &self.targets {
            t.validate()?;
        }
        if let OneOrMany::Many(v) = &self.initial.qubits {
            if v.len() != n {
                return Err(Error::param(
                    "initial.qubits",
                    format!("expected 1 or {n} presets, found {}", v.len()),
                ));
            }
        }
        self.dissipation.validate()?;
        if self.solver == Solver::Rate && self.dissipation.enabled {
            return Err(Error::param(
                "dissipation.enabled",
                "the rate solver has no qubit dissipation; use master or trajectories",
            ));
        }
        let sim = &self.sim;
        if sim.n_samples < 2 {
            return Err(Error::param("sim.n_samples", "at least 2"));
        }
        if sim.n_samples > 1_000_000 {
            return Err(Error::param("sim.n_samples", "at most 1000000"));
        }
        if self.solver == Solver::Trajectories && sim.n_traj == 0 {
            return Err(Error::param("sim.n_traj", "at least 1"));
        }
        if sim.dim_limit == 0 {
            return Err(Error::param("sim.dim_limit", "at least 1"));
        }
        self.sim_options().validate()?;
        if let Some(obs) = &self.observables {
            if obs.is_empty() {
                return Err(Error::param("observables", "at least one observable"));
            }
            let rotated_only = self.solver == Solver::Rate || self.hamiltonian == HamiltonianKind::Effective;
            if rotated_only {
                if let Some(o) = obs.iter().find(|o| !o.is_rotated()) {
                    return Err(Error::param(
                        "observables",
                        format!("`{}` needs the full Hamiltonian and a dynamical solver", o.name()),
                    ));
                }
            }
            if self.solver == Solver::Rate && obs.iter().any(|o| *o != ObservableKind::SzRot) {
                return Err(Error::param("observables", "the rate solver only provides sz_rot"));
            }
        }
        if self.outputs.stem.is_empty() || self.outputs.stem.contains(['/', '\\']) {
            return Err(Error::param("outputs.stem", "must be a plain file name"));
        }
        Ok(())
    }

    pub fn qubit_presets(&self) -> Vec<QubitPreset> {
        match &self.initial.qubits {
            OneOrMany::One(p) => vec![*p; self.circuit.n_qubits],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    pub fn resolved_observables(&self) -> Vec<ObservableKind> {
        match &self.observables {
            Some(v) => v.clone(),
            None if self.solver == Solver::Rate || self.hamiltonian == HamiltonianKind::Effective => {
                vec![ObservableKind::SzRot]
            }
            None => vec![
                ObservableKind::Sx,
                ObservableKind::Sy,
                ObservableKind::Sz,
                ObservableKind::SzRot,
            ],
        }
    }

    /// Integration options; the thread count comes from [`THREADS_ENV`].
    pub fn sim_options(&self) -> SimOptions {
        let s = &self.sim;
        let mut o = SimOptions::uniform(s.t_final_us, s.n_samples);
        o.dt_max = s.dt_max_us;
        o.rel_tol = s.rel_tol;
        o.abs_tol = s.abs_tol;
        o.n_traj = s.n_traj;
        o.seed = s.seed;
        o.dim_limit = s.dim_limit;
        o.threads = threads_from_env();
        o
    }
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
