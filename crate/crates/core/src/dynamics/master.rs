use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::ode::Dp5;
use super::subspace::Subspace;
use super::{CollapseChannel, Observable, RunInfo, SeriesColumn, SimOptions, TimeSeries};
use crate::error::{Error, Result};
use crate::ops::state::min_hermitian_eigenvalue;
use crate::ops::{sum_operators, HilbertSpec, Operator, QuantumState};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `−i[H, ρ] + Σ γ (c ρ c† − ½{c†c, ρ})`, evaluated densely. Valid for any
/// square `ρ`, Hermitian or not.
pub fn lindblad_rhs(h: &Operator, channels: &[CollapseChannel], rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let d = h.dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "lindblad_rhs density matrix",
            expected: d,
            found: rho.nrows(),
        });
    }
    if channels.iter().any(|c| c.op.spec() != h.spec()) {
        return Err(Error::SpecMismatch("lindblad_rhs channels"));
    }
    let hd = h.to_dense();
    let mi = C64::new(0.0, -1.0);
    let mut out = (&hd * rho - rho * &hd) * mi;
    for ch in channels {
        let c = ch.op.to_dense();
        let cd = c.adjoint();
        let cdc = &cd * &c;
        let g = C64::new(ch.rate, 0.0);
        out += (&c * rho * &cd - (&cdc * rho + rho * &cdc) * C64::new(0.5, 0.0)) * g;
    }
    Ok(out)
}

/// `H − (i/2) Σ γ c†c` on the full space.
pub(crate) fn effective_hamiltonian(h: &Operator, channels: &[CollapseChannel]) -> Result<Operator> {
    let mut terms = vec![h.clone()];
    for ch in channels {
        if ch.op.spec() != h.spec() {
            return Err(Error::SpecMismatch("collapse channel"));
        }
        terms.push((&ch.op.adjoint() * &ch.op).scale(C64::new(0.0, -0.5 * ch.rate)));
    }
    Ok(sum_operators(&terms).expect("non-empty"))
}

/// Restricted generator: non-Hermitian Hamiltonian and jump operators
/// `√γ c`.
pub(crate) struct Generator {
    pub heff: Operator,
    pub jumps: Vec<Operator>,
}

impl Generator {
    pub fn new(heff_full: &Operator, channels: &[CollapseChannel], sub: &Subspace) -> Self {
        Self {
            heff: sub.restrict(heff_full),
            jumps: channels
                .iter()
                .filter(|c| c.rate > 0.0)
                .map(|c| sub.restrict(&c.op).scale_real(c.rate.sqrt()))
                .collect(),
        }
    }
}

/// `out[i, :] (+)= s Σ_k A[i, k] x[k, :]` for row-major `n`-column `x`.
fn sparse_dense(a: &Operator, x: &[C64], n: usize, s: C64, out: &mut [C64], accumulate: bool) {
    let (row_ptr, cols, vals) = a.raw();
    for i in 0..a.dim() {
        let row = &mut out[i * n..(i + 1) * n];
        if !accumulate {
            row.fill(ZERO);
        }
        for p in row_ptr[i]..row_ptr[i + 1] {
            let v = vals[p] * s;
            let src = &x[cols[p] * n..(cols[p] + 1) * n];
            for (o, &xv) in row.iter_mut().zip(src) {
                *o += v * xv;
            }
        }
    }
}

struct MasterKernel<'a> {
    gen: &'a Generator,
    n: usize,
    r: Vec<C64>,
    m: Vec<C64>,
    mt: Vec<C64>,
}

impl MasterKernel<'_> {
    /// Uses Hermiticity of ρ: with `R = −iH_eff ρ + ½ Σ L ρ L†`, the
    /// generator is `R + R†`, which is Hermitian and traceless by
    /// construction.
    fn apply(&mut self, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        sparse_dense(&self.gen.heff, rho, n, C64::new(0.0, -1.0), &mut self.r, false);
        for l in &self.gen.jumps {
            sparse_dense(l, rho, n, C64::new(1.0, 0.0), &mut self.m, false);
            for i in 0..n {
                for j in 0..n {
                    self.mt[j * n + i] = self.m[i * n + j].conj();
                }
            }
            sparse_dense(l, &self.mt, n, C64::new(0.5, 0.0), &mut self.r, true);
        }
        for i in 0..n {
            for j in i..n {
                let v = self.r[i * n + j] + self.r[j * n + i].conj();
                out[i * n + j] = v;
                out[j * n + i] = v.conj();
            }
        }
    }
}

fn density_support(rho: &DMatrix<C64>) -> Vec<usize> {
    (0..rho.nrows()).filter(|&i| rho[(i, i)].norm() > 0.0).collect()
}

/// Integrate the master equation and record `tr(O ρ)` at the sample times.
pub fn evolve_master(
    h: &Operator,
    channels: &[CollapseChannel],
    rho0: &QuantumState,
    options: &SimOptions,
    observables: &[Observable],
) -> Result<TimeSeries> {
    evolve_master_with_state(h, channels, rho0, options, observables).map(|(s, _)| s)
}

/// As [`evolve_master`], also returning the final state on the full space.
pub fn evolve_master_with_state(
    h: &Operator,
    channels: &[CollapseChannel],
    rho0: &QuantumState,
    options: &SimOptions,
    observables: &[Observable],
) -> Result<(TimeSeries, QuantumState)> {
    options.validate()?;
    if rho0.spec() != h.spec() {
        return Err(Error::SpecMismatch("initial state"));
    }
    if observables.iter().any(|o| o.op.spec() != h.spec()) {
        return Err(Error::SpecMismatch("observable"));
    }
    let heff = effective_hamiltonian(h, channels)?;
    let rho_full = rho0.density();
    let mut generators: Vec<&Operator> = vec![&heff];
    generators.extend(channels.iter().map(|c| &c.op));
    let sub = Subspace::reachable(h.spec(), &generators, &density_support(&rho_full));
    let n = sub.dim();
    if n > options.dim_limit {
        return Err(Error::TooLarge {
            dim: n,
            limit: options.dim_limit,
            hint: "use the trajectory solver for this system",
        });
    }
    let gen = Generator::new(&heff, channels, &sub);
    let obs: Vec<Operator> = observables.iter().map(|o| sub.restrict(&o.op)).collect();

    let rho_r = sub.restrict_density(&rho_full);
    let mut y0 = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            y0[i * n + j] = rho_r[(i, j)];
        }
    }
    let mut kernel = MasterKernel {
        gen: &gen,
        n,
        r: vec![ZERO; n * n],
        m: vec![ZERO; n * n],
        mt: vec![ZERO; n * n],
    };
    let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| kernel.apply(y, dy);
    let mut ode = Dp5::new(0.0, y0, options.ode_options());

    let mut info = RunInfo {
        full_dim: h.dim(),
        reduced_dim: n,
        ..RunInfo::default()
    };
    let mut columns: Vec<SeriesColumn> = observables
        .iter()
        .map(|o| SeriesColumn {
            label: o.label.clone(),
            qubit: o.qubit,
            values: Vec::with_capacity(options.sample_times.len()),
            stderr: None,
        })
        .collect();
    for &ts in &options.sample_times {
        ode.advance_to(&mut f, ts)?;
        let y = ode.y();
        let rho = DMatrix::from_fn(n, n, |i, j| y[i * n + j]);
        let state = QuantumState::Mixed {
            spec: HilbertSpec::single(n),
            rho,
        };
        let mut diag = state.diagnostics(false);
        if n <= options.positivity_check_limit {
            if let QuantumState::Mixed { rho, .. } = &state {
                diag.min_eigenvalue = Some(min_hermitian_eigenvalue(rho));
            }
        }
        info.max_normalization_error = info.max_normalization_error.max(diag.normalization_error);
        info.max_hermiticity_residual = info.max_hermiticity_residual.max(diag.hermiticity_residual);
        if let Some(ev) = diag.min_eigenvalue {
            info.min_eigenvalue = Some(info.min_eigenvalue.map_or(ev, |m: f64| m.min(ev)));
        }
        diag.check(ts)?;
        for (col, op) in columns.iter_mut().zip(&obs) {
            let v: C64 = op.iter().map(|(r, c, v)| v * y[c * n + r]).sum();
            col.values.push(v.re);
        }
    }
    info.steps = ode.accepted;
    info.rejected = ode.rejected;
    let y = ode.y();
    let rho = DMatrix::from_fn(n, n, |i, j| y[i * n + j]);
    let final_state = QuantumState::Mixed {
        spec: h.spec().clone(),
        rho: sub.lift_density(&rho),
    };
    Ok((
        TimeSeries {
            times: options.sample_times.clone(),
            columns,
            info,
        },
        final_state,
    ))
}
