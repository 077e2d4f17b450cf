use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ensemble::ProductEnsemble;
use super::master::{effective_hamiltonian, Generator};
use super::ode::{single_step, Dp5};
use super::subspace::Subspace;
use super::{CollapseChannel, Observable, RunInfo, SeriesColumn, SimOptions, TimeSeries};
use crate::error::{Error, Result};
use crate::ops::{Operator, QuantumState};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
/// Tolerance on the norm² threshold when locating a jump.
const JUMP_NORM_TOL: f64 = 1e-10;

enum Initial<'a> {
    Fixed(Vec<C64>),
    Ensemble(&'a ProductEnsemble),
}

/// Quantum-jump trajectories from a single pure state.
pub fn evolve_trajectories(
    h: &Operator,
    channels: &[CollapseChannel],
    psi0: &QuantumState,
    options: &SimOptions,
    observables: &[Observable],
) -> Result<TimeSeries> {
    let psi = match psi0 {
        QuantumState::Pure { psi, .. } => psi.as_slice().to_vec(),
        QuantumState::Mixed { .. } => return Err(Error::param("initial", "trajectories need a pure initial state")),
    };
    if psi0.spec() != h.spec() {
        return Err(Error::SpecMismatch("initial state"));
    }
    let support: Vec<usize> = (0..psi.len()).filter(|&i| psi[i].norm() > 0.0).collect();
    run(h, channels, Initial::Fixed(psi), &support, options, observables)
}

/// Quantum-jump trajectories, each starting from an independent draw of
/// `ensemble`.
pub fn evolve_trajectory_ensemble(
    h: &Operator,
    channels: &[CollapseChannel],
    ensemble: &ProductEnsemble,
    options: &SimOptions,
    observables: &[Observable],
) -> Result<TimeSeries> {
    if ensemble.spec() != h.spec() {
        return Err(Error::SpecMismatch("initial ensemble"));
    }
    let support = ensemble.support();
    run(h, channels, Initial::Ensemble(ensemble), &support, options, observables)
}

struct Trajectory {
    /// `values[sample * n_obs + obs]`.
    values: Vec<f64>,
    steps: usize,
    rejected: usize,
    jumps: usize,
    norm_drift: f64,
}

fn run(
    h: &Operator,
    channels: &[CollapseChannel],
    init: Initial<'_>,
    support: &[usize],
    options: &SimOptions,
    observables: &[Observable],
) -> Result<TimeSeries> {
    options.validate()?;
    if options.n_traj == 0 {
        return Err(Error::param("n_traj", "must be at least 1"));
    }
    if observables.iter().any(|o| o.op.spec() != h.spec()) {
        return Err(Error::SpecMismatch("observable"));
    }
    let heff = effective_hamiltonian(h, channels)?;
    let mut generators: Vec<&Operator> = vec![&heff];
    generators.extend(channels.iter().map(|c| &c.op));
    let sub = Subspace::reachable(h.spec(), &generators, support);
    let gen = Generator::new(&heff, channels, &sub);
    let obs: Vec<Operator> = observables.iter().map(|o| sub.restrict(&o.op)).collect();
    let fixed = match &init {
        Initial::Fixed(psi) => Some(sub.restrict_vec(psi)),
        Initial::Ensemble(_) => None,
    };

    let one = |index: usize| -> Result<Trajectory> {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        rng.set_stream(index as u64);
        let psi = match (&fixed, &init) {
            (Some(p), _) => p.clone(),
            (None, Initial::Ensemble(e)) => sub.restrict_vec(e.sample(&mut rng).as_slice()),
            _ => unreachable!(),
        };
        trajectory(&gen, &obs, psi, options, &mut rng)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?;
    let results: Vec<Result<Trajectory>> = pool.install(|| (0..options.n_traj).into_par_iter().map(one).collect());

    // Ordered reduction: identical output for any worker count.
    let n_s = options.sample_times.len();
    let n_o = observables.len();
    let mut sum = vec![0.0; n_s * n_o];
    let mut info = RunInfo {
        full_dim: h.dim(),
        reduced_dim: sub.dim(),
        ..RunInfo::default()
    };
    let mut trajs = Vec::with_capacity(results.len());
    for r in results {
        let t = r?;
        for (s, v) in sum.iter_mut().zip(&t.values) {
            *s += v;
        }
        info.steps += t.steps;
        info.rejected += t.rejected;
        info.jumps += t.jumps;
        info.max_normalization_error = info.max_normalization_error.max(t.norm_drift);
        trajs.push(t);
    }
    let n = trajs.len() as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let mut sq = vec![0.0; n_s * n_o];
    for t in &trajs {
        for ((q, v), m) in sq.iter_mut().zip(&t.values).zip(&mean) {
            *q += (v - m) * (v - m);
        }
    }
    let se: Vec<f64> = sq
        .iter()
        .map(|q| {
            if trajs.len() > 1 {
                (q / (n - 1.0)).sqrt() / n.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let columns = observables
        .iter()
        .enumerate()
        .map(|(k, o)| SeriesColumn {
            label: o.label.clone(),
            qubit: o.qubit,
            values: (0..n_s).map(|s| mean[s * n_o + k]).collect(),
            stderr: Some((0..n_s).map(|s| se[s * n_o + k]).collect()),
        })
        .collect();
    Ok(TimeSeries {
        times: options.sample_times.clone(),
        columns,
        info,
    })
}

fn norm_sqr(y: &[C64]) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum()
}

/// Interaction frame of the real diagonal `D` of `H_eff`: `ψ = e^{−iDt} φ`.
///
/// For the network Hamiltonian `D` holds the large photon-number energies,
/// which make the lab-frame equations stiff although highly excited states
/// are never populated. Diagonal values are grouped so that only a handful
/// of phases are evaluated per right-hand side.
struct DiagonalFrame {
    group_of: Vec<usize>,
    reps: Vec<f64>,
    /// `H_eff − D`.
    rest: Operator,
}

impl DiagonalFrame {
    fn new(heff: &Operator) -> Self {
        let n = heff.dim();
        let diag: Vec<f64> = (0..n).map(|i| heff.get(i, i).re).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
        let mut group_of = vec![0; n];
        let mut reps: Vec<f64> = Vec::new();
        for &i in &order {
            match reps.last() {
                Some(&r) if (diag[i] - r).abs() <= 1e-9 * r.abs().max(1.0) => {}
                _ => reps.push(diag[i]),
            }
            group_of[i] = reps.len() - 1;
        }
        let shift: Vec<(usize, usize, C64)> = (0..n).map(|i| (i, i, C64::new(-reps[group_of[i]], 0.0))).collect();
        let rest = heff + &Operator::from_triplets(heff.spec().clone(), shift);
        Self { group_of, reps, rest }
    }

    /// `p_i = e^{i D_i t}`.
    fn phases(&self, t: f64, group_buf: &mut Vec<C64>, out: &mut [C64]) {
        group_buf.clear();
        group_buf.extend(self.reps.iter().map(|&d| C64::from_polar(1.0, d * t)));
        for (o, &g) in out.iter_mut().zip(&self.group_of) {
            *o = group_buf[g];
        }
    }
}

fn trajectory(
    gen: &Generator,
    obs: &[Operator],
    psi0: Vec<C64>,
    options: &SimOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    let n = psi0.len();
    let frame = DiagonalFrame::new(&gen.heff);
    let (row_ptr, cols, vals) = frame.rest.raw();
    let mut groups = Vec::new();
    let mut p = vec![ZERO; n];
    let mut u = vec![ZERO; n];
    // φ' = −i e^{iDt} (H_eff − D) e^{−iDt} φ
    let mut f = |t: f64, y: &[C64], dy: &mut [C64]| {
        frame.phases(t, &mut groups, &mut p);
        for i in 0..n {
            u[i] = p[i].conj() * y[i];
        }
        for i in 0..n {
            let mut acc = ZERO;
            for k in row_ptr[i]..row_ptr[i + 1] {
                acc += vals[k] * u[cols[k]];
            }
            let v = p[i] * acc;
            dy[i] = C64::new(v.im, -v.re);
        }
    };
    let mut groups_lab = Vec::new();
    let mut p_lab = vec![ZERO; n];
    // Lab-frame state from the frame state at time t.
    let mut to_lab = |t: f64, phi: &[C64], out: &mut [C64]| {
        frame.phases(t, &mut groups_lab, &mut p_lab);
        for i in 0..n {
            out[i] = p_lab[i].conj() * phi[i];
        }
        p_lab.clone()
    };

    let norm0 = norm_sqr(&psi0).sqrt();
    if !(norm0 > 0.0) {
        return Err(Error::NumericalFailure("zero-norm initial state".into()));
    }
    let psi0: Vec<C64> = psi0.iter().map(|z| z / norm0).collect();
    let mut ode = Dp5::new(0.0, psi0, options.ode_options());
    let mut threshold: f64 = rng.random();
    let mut prev = vec![ZERO; n];
    let mut lab = vec![ZERO; n];
    let mut scratch = vec![ZERO; n];
    let n_o = obs.len();
    let mut out = Trajectory {
        values: Vec::with_capacity(options.sample_times.len() * n_o),
        steps: 0,
        rejected: 0,
        jumps: 0,
        norm_drift: 0.0,
    };
    for &ts in &options.sample_times {
        while ode.t() < ts {
            prev.copy_from_slice(ode.y());
            let t_prev = ode.t();
            let t_new = ode.step(&mut f, ts)?;
            if norm_sqr(ode.y()) >= threshold {
                continue;
            }
            // Bisect for the time at which ‖ψ‖² reaches the threshold.
            let (mut lo, mut hi) = (t_prev, t_new);
            let mut at = ode.y().to_vec();
            let mut t_jump = t_new;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let y = single_step(&mut f, t_prev, &prev, mid - t_prev);
                let ns = norm_sqr(&y);
                t_jump = mid;
                at = y;
                if (ns - threshold).abs() < JUMP_NORM_TOL {
                    break;
                }
                if ns > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let phases = to_lab(t_jump, &at, &mut lab);
            let weights: Vec<f64> = gen
                .jumps
                .iter()
                .map(|l| {
                    l.apply(&lab, &mut scratch);
                    norm_sqr(&scratch)
                })
                .collect();
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                return Err(Error::NumericalFailure(format!(
                    "norm decayed without an available jump at t = {t_jump}"
                )));
            }
            let r: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = weights.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                acc += w;
                if r < acc {
                    chosen = k;
                    break;
                }
            }
            gen.jumps[chosen].apply(&lab, &mut scratch);
            let norm = norm_sqr(&scratch).sqrt();
            if !(norm > 0.0) {
                return Err(Error::NumericalFailure(format!(
                    "zero-norm state after jump at t = {t_jump}"
                )));
            }
            for (z, ph) in scratch.iter_mut().zip(&phases) {
                *z = *z * *ph / norm;
            }
            ode.reset_state(t_jump, &scratch);
            threshold = rng.random();
            out.jumps += 1;
        }
        to_lab(ts, ode.y(), &mut lab);
        let ns = norm_sqr(&lab);
        if !(ns > 0.0) {
            return Err(Error::NumericalFailure(format!("zero-norm state at t = {ts}")));
        }
        if gen.jumps.is_empty() {
            out.norm_drift = out.norm_drift.max((ns - 1.0).abs());
        }
        for op in obs {
            let (rp, cs, vs) = op.raw();
            let mut acc = ZERO;
            for i in 0..n {
                let mut row = ZERO;
                for k in rp[i]..rp[i + 1] {
                    row += vs[k] * lab[cs[k]];
                }
                acc += lab[i].conj() * row;
            }
            out.values.push(acc.re / ns);
        }
    }
    out.steps = ode.accepted;
    out.rejected = ode.rejected;
    Ok(out)
}
