use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qreset::circuit::{angular, CircuitParams, TempConvention};
use qreset::dynamics::thermal_occupancy;
use qreset::experiment::{
    apply_overrides, parse_angle, parse_formats, parse_override, run_config, run_scenario, run_sweep, scenario_config,
    ExperimentConfig, Format, Override, ResultTable, Solver, SweepAxis,
};
use qreset::rates::{eta_lambda, polarization_rate, polarization_time, steady_state_sz};
use qreset::{Error, Result};

#[derive(Parser)]
#[command(name = "qreset", version, about = "Dissipative multi-qubit reset simulator")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for trajectory runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats: csv or csv,svg.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Temperature convention: physical or paper (scenarios default to paper).
    #[arg(long, global = true)]
    convention: Option<TempConvention>,
    /// Config override `path=value`, e.g. `circuit.g_mhz=15`; repeatable.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Print polarization rates, times and occupancies per qubit.
    Rates,
    /// Print the steady-state rotated polarization.
    Steady {
        /// Bath temperatures (K), comma separated; defaults to the config's.
        #[arg(long, value_delimiter = ',')]
        t_c: Vec<f64>,
    },
    /// Integrate the master equation.
    Evolve,
    /// Run quantum-jump trajectories.
    Mc {
        /// Number of trajectories.
        #[arg(long)]
        n_traj: Option<usize>,
    },
    /// Repeat a run over the values of one numeric parameter.
    Sweep {
        /// Config path (e.g. `circuit.g_mhz`), `detuning_over_kappa` or `theta`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; angles accept forms like `pi/2`.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        values: String,
    },
    /// Reproduce a named scenario: fig2, fig2_inset, fig3a, fig3b or fig3c.
    Scenario { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::parse(&text)
}

fn overrides(cli: &Cli) -> Result<Vec<Override>> {
    let mut out = cli
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(seed) = cli.seed {
        let seed = i64::try_from(seed).map_err(|_| Error::param("seed", "must be below 2^63"))?;
        out.push(parse_override(&format!("sim.seed={seed}"))?);
    }
    if let Some(c) = cli.convention {
        out.push(parse_override(&format!("circuit.temp_convention=\"{c}\""))?);
    }
    Ok(out)
}

/// The configured experiment with overrides and global flags applied.
fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("this command needs --config <path>".into()))?;
    apply_overrides(&read_config(path)?, &overrides(cli)?)
}

/// As [`load`], falling back to the single-qubit reference circuit.
fn load_or_reference(cli: &Cli) -> Result<ExperimentConfig> {
    if cli.config.is_some() {
        return load(cli);
    }
    let mut base = scenario_config("fig2")?;
    base.circuit.temp_convention = TempConvention::Physical;
    apply_overrides(&base, &overrides(cli)?)
}

fn emit(cli: &Cli, cfg: &ExperimentConfig, stem: &str, table: &ResultTable) -> Result<()> {
    let formats: Vec<Format> = match &cli.format {
        Some(f) => parse_formats(f)?,
        None => cfg.outputs.formats.clone(),
    };
    let dir = cli.out.clone().unwrap_or_else(|| cfg.outputs.dir.clone());
    for path in table.write(&dir, stem, &formats)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_finals(table: &ResultTable) {
    let keys = table.keys();
    if keys.len() > 24 {
        println!("{} series, {} rows", keys.len(), table.len());
        return;
    }
    for (q, obs) in keys {
        if let Some(v) = table.final_value(q, &obs) {
            let q = q.map(|q| format!("q{q} ")).unwrap_or_default();
            println!("{q}{obs}: {v:.6}");
        }
    }
}

fn print_rates(p: &CircuitParams, cfg: &ExperimentConfig) -> Result<()> {
    let (g, kappa, delta) = (angular(p.g_mhz), angular(p.kappa_mhz), angular(p.detuning_mhz()));
    let (eta, lambda) = eta_lambda(kappa, delta);
    let nbar = thermal_occupancy(p.f_c_ghz, p.t_c_kelvin, p.temp_convention)?;
    println!("detuning/2pi = {:.6} MHz", p.detuning_mhz());
    println!("eta = {eta:.6e} us, lambda = {lambda:.6e} us");
    println!("nbar = {nbar:.6e} ({} convention)", p.temp_convention);
    println!("reference rate 4g^2/kappa = {:.6} 1/us", 4.0 * g * g / kappa);
    for (n, t) in cfg.targets.iter().enumerate() {
        println!(
            "q{}: theta = {:.6}, gamma = {:.6} 1/us, t_pol = {:.6} us",
            n + 1,
            t.theta,
            polarization_rate(t.theta, delta, g, kappa),
            polarization_time(t.theta, delta, g, kappa)
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.verb {
        Verb::Rates => {
            let cfg = load_or_reference(&cli)?;
            print_rates(&cfg.circuit, &cfg)
        }
        Verb::Steady { t_c } => {
            let cfg = load_or_reference(&cli)?;
            let p = &cfg.circuit;
            let temps = if t_c.is_empty() {
                vec![p.t_c_kelvin]
            } else {
                t_c.clone()
            };
            for t in temps {
                let sz = steady_state_sz(p.f_c_ghz, t, p.temp_convention)?;
                println!("t_c = {t} K: sz_rot = {sz:.6} ({} convention)", p.temp_convention);
            }
            Ok(())
        }
        Verb::Evolve => {
            let mut cfg = load(&cli)?;
            cfg.solver = Solver::Master;
            let out = run_config(&cfg)?;
            print_finals(&out.table);
            emit(&cli, &cfg, &cfg.outputs.stem, &out.table)
        }
        Verb::Mc { n_traj } => {
            let mut cfg = load(&cli)?;
            cfg.solver = Solver::Trajectories;
            if let Some(n) = n_traj {
                cfg.sim.n_traj = *n;
            }
            cfg.validate()?;
            let out = run_config(&cfg)?;
            print_finals(&out.table);
            emit(&cli, &cfg, &cfg.outputs.stem, &out.table)
        }
        Verb::Sweep { axis, values } => {
            let cfg = load(&cli)?;
            let axis: SweepAxis = axis.parse()?;
            let values = values
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(parse_angle)
                .collect::<Result<Vec<f64>>>()?;
            let out = run_sweep(&cfg, &axis, &values)?;
            for p in &out.points {
                for (n, fit) in p.fits.iter().enumerate() {
                    match fit {
                        Some(f) => println!("{axis}={:?} q{}: t_fit = {:.6} us", p.value, n + 1, f.t_fit),
                        None => println!("{axis}={:?} q{}: no fit", p.value, n + 1),
                    }
                }
            }
            emit(&cli, &cfg, &cfg.outputs.stem, &out.table)
        }
        Verb::Scenario { name } => {
            let (cfg, table) = run_scenario(name, &overrides(&cli)?)?;
            print_finals(&table);
            emit(&cli, &cfg, name, &table)
        }
    }
}
