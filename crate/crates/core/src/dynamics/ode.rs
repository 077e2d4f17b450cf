//! Dormand–Prince 5(4) with FSAL and PI-free step control, on complex
//! state vectors.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
/// Smallest admissible step (μs).
pub const MIN_STEP: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
}

/// Adaptive integrator state. `f(t, y, dy)` must write the derivative into
/// `dy`.
pub struct Dp5 {
    opts: OdeOptions,
    t: f64,
    h: f64,
    y: Vec<C64>,
    k: [Vec<C64>; 7],
    scratch: Vec<C64>,
    fsal: bool,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dp5 {
    pub fn new(t0: f64, y0: Vec<C64>, opts: OdeOptions) -> Self {
        let n = y0.len();
        Self {
            opts,
            t: t0,
            h: 0.0,
            y: y0,
            k: std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]),
            scratch: vec![C64::new(0.0, 0.0); n],
            fsal: false,
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    /// Replace the state, e.g. after a quantum jump.
    pub fn reset_state(&mut self, t: f64, y: &[C64]) {
        self.t = t;
        self.y.copy_from_slice(y);
        self.fsal = false;
    }

    fn initial_step<F>(&mut self, f: &mut F) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        if !self.fsal {
            f(self.t, &self.y, &mut self.k[0]);
            self.fsal = true;
        }
        let sc = |y: C64| self.opts.abs_tol + self.opts.rel_tol * y.norm();
        let n = self.y.len().max(1) as f64;
        let d0 = (self.y.iter().map(|&y| (y.norm() / sc(y)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self
            .y
            .iter()
            .zip(&self.k[0])
            .map(|(&y, k)| (k.norm() / sc(y)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(self.opts.h_max)
    }

    /// Take one accepted step, never stepping past `t_end`. Returns the new
    /// time.
    pub fn step<F>(&mut self, f: &mut F, t_end: f64) -> Result<f64>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        if self.h == 0.0 {
            self.h = self.initial_step(f);
        }
        if !self.fsal {
            f(self.t, &self.y, &mut self.k[0]);
            self.fsal = true;
        }
        let n = self.y.len();
        let mut last_rejected = false;
        loop {
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.opts.h_max);
            let hits_end = h >= remaining * (1.0 - 1e-12);
            if hits_end {
                h = remaining;
            }
            if h < MIN_STEP && !hits_end {
                return Err(Error::StepSizeUnderflow { t: self.t, h });
            }
            self.stages(f, h);
            // y_new is in scratch, k[6] = f(t + h, y_new).
            let mut err_sq = 0.0;
            for i in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (s, &w) in E.iter().enumerate() {
                    if w != 0.0 {
                        let k = self.k[s][i];
                        e.re += w * k.re;
                        e.im += w * k.im;
                    }
                }
                let sc =
                    self.opts.abs_tol + self.opts.rel_tol * self.y[i].norm_sqr().max(self.scratch[i].norm_sqr()).sqrt();
                err_sq += e.norm_sqr() * (h * h) / (sc * sc);
            }
            let err = (err_sq / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "non-finite error estimate at t = {}",
                    self.t
                )));
            }
            if err <= 1.0 {
                let mut factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                if last_rejected {
                    factor = factor.min(1.0);
                }
                std::mem::swap(&mut self.y, &mut self.scratch);
                self.k.swap(0, 6);
                self.t = if hits_end { t_end } else { self.t + h };
                // A clipped final step should not shrink the next one.
                if !hits_end || h >= self.h {
                    self.h = h * factor;
                }
                self.accepted += 1;
                return Ok(self.t);
            }
            self.rejected += 1;
            last_rejected = true;
            self.h = h * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            if self.h < MIN_STEP {
                return Err(Error::StepSizeUnderflow { t: self.t, h: self.h });
            }
        }
    }

    /// Advance exactly to `t_target`.
    pub fn advance_to<F>(&mut self, f: &mut F, t_target: f64) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        while self.t < t_target {
            self.step(f, t_target)?;
        }
        Ok(())
    }

    /// Stages for a step of size `h`; leaves `y(t+h)` in `scratch` and
    /// `f(t+h, y(t+h))` in `k[6]`.
    fn stages<F>(&mut self, f: &mut F, h: f64)
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, row) in rows.iter().enumerate() {
            self.scratch.copy_from_slice(&self.y);
            for (j, &a) in row.iter().enumerate() {
                axpy(&mut self.scratch, a * h, &self.k[j]);
            }
            let (_, tail) = self.k.split_at_mut(s + 1);
            f(self.t + C[s + 1] * h, &self.scratch, &mut tail[0]);
        }
        self.scratch.copy_from_slice(&self.y);
        for (j, &b) in B.iter().enumerate() {
            if b != 0.0 {
                axpy(&mut self.scratch, b * h, &self.k[j]);
            }
        }
        let (_, tail) = self.k.split_at_mut(6);
        f(self.t + h, &self.scratch, &mut tail[0]);
    }
}

fn axpy(y: &mut [C64], a: f64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re += a * xi.re;
        yi.im += a * xi.im;
    }
}

/// One fixed step of the fifth-order formula from `(t, y)`, without error
/// control. Used to re-evaluate the state inside an accepted step.
pub fn single_step<F>(f: &mut F, t: f64, y: &[C64], h: f64) -> Vec<C64>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let mut s = Dp5::new(
        t,
        y.to_vec(),
        OdeOptions {
            rel_tol: 1.0,
            abs_tol: 1.0,
            h_max: f64::INFINITY,
        },
    );
    f(t, y, &mut s.k[0]);
    s.stages(f, h);
    s.scratch
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> OdeOptions {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_max: 1.0,
        }
    }

    #[test]
    fn exponential_decay_and_rotation() {
        // y' = (−1 + 5i) y has y(t) = e^{(−1+5i)t}.
        let lam = C64::new(-1.0, 5.0);
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = lam * y[0];
        let mut ode = Dp5::new(0.0, vec![C64::new(1.0, 0.0)], opts());
        for &t in &[0.1, 0.5, 1.0, 2.0] {
            ode.advance_to(&mut f, t).unwrap();
            assert_eq!(ode.t(), t);
            let exact = (lam * t).exp();
            assert!((ode.y()[0] - exact).norm() < 1e-8, "{t}");
        }
        assert!(ode.accepted > 0);
    }

    #[test]
    fn respects_h_max() {
        let mut f = |_t: f64, _y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, 0.0);
        let mut ode = Dp5::new(0.0, vec![C64::new(1.0, 0.0)], OdeOptions { h_max: 0.1, ..opts() });
        ode.advance_to(&mut f, 1.0).unwrap();
        assert!(ode.accepted >= 10);
        assert_eq!(ode.y()[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = i cos(t) y, y = e^{i sin t}.
        let mut f = |t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, t.cos()) * y[0];
        let mut ode = Dp5::new(0.0, vec![C64::new(1.0, 0.0)], opts());
        ode.advance_to(&mut f, 3.0).unwrap();
        assert!((ode.y()[0] - C64::new(0.0, 3f64.sin()).exp()).norm() < 1e-8);
        let y = single_step(&mut f, 0.0, &[C64::new(1.0, 0.0)], 0.01);
        assert!((y[0] - C64::new(0.0, 0.01f64.sin()).exp()).norm() < 1e-12);
    }

    #[test]
    fn blowup_is_reported() {
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0] * y[0] * y[0] * 1e3;
        let mut ode = Dp5::new(0.0, vec![C64::new(1.0, 0.0)], opts());
        assert!(ode.advance_to(&mut f, 1.0).is_err());
    }
}
