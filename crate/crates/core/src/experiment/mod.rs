//! Configuration, scenario presets, sweeps and result tables.

mod config;
mod overrides;
mod preset;
mod run;
mod table;

pub use config::{
    parse_formats, ExperimentConfig, Format, HamiltonianKind, InitialSpec, ObservableKind, OneOrMany, OutputSpec,
    SimSpec, Solver, THREADS_ENV,
};
pub use overrides::{apply_overrides, parse_override, parse_path, set_numeric, Override, PathSeg};
pub use preset::{parse_angle, parse_initial_preset, QubitPreset, ResonatorPreset, PRESET_NAMES};
pub use run::{
    build_system, initial_ensemble, inset_detunings, inset_thetas, run_config, run_scenario, run_sweep,
    scenario_config, RunOutput, SweepAxis, SweepOutput, SweepPoint, System, FIG2_GAMMA_T, FIG2_TEMPERATURES, SCENARIOS,
};
pub use table::{ResultTable, Row, CSV_HEADER};
