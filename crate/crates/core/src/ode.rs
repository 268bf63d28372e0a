//! Adaptive Dormand–Prince 5(4) integrator for complex vector systems.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State = DVector<Complex64>;

/// A first-order system `y' = f(t, y)`.
pub trait System {
    fn rhs(&self, t: f64, y: &State, dy: &mut State);

    /// Called once per accepted step with the new state.
    fn accept(&mut self, _t: f64, _y: &State) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Steps shorter than this fraction of `max(1, |t|)` abort the run.
    pub min_step_rel: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, min_step_rel: 1e-14, max_steps: 5_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order weights minus the embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(out: &mut State, y: &State, h: f64, terms: &[(f64, &State)]) {
    out.copy_from(y);
    for &(c, k) in terms {
        if c != 0.0 {
            out.axpy(Complex64::from(h * c), k, Complex64::from(1.0));
        }
    }
}

/// Integrates from `t_out[0]` through every time in `t_out` (strictly
/// increasing). Steps never cross an output time; `observe` receives each
/// output sample in order, starting with the initial state.
pub fn integrate<S, F>(sys: &mut S, y0: State, t_out: &[f64], opts: &OdeOptions, mut observe: F) -> Result<(State, OdeStats)>
where
    S: System,
    F: FnMut(usize, f64, &State) -> Result<()>,
{
    let Some(&t0) = t_out.first() else {
        return Err(Error::EmptyInput);
    };
    if t_out.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("output times must be strictly increasing".into()));
    }
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0;
    observe(0, t, &y)?;

    let mut k1 = State::zeros(n);
    let mut k2 = State::zeros(n);
    let mut k3 = State::zeros(n);
    let mut k4 = State::zeros(n);
    let mut k5 = State::zeros(n);
    let mut k6 = State::zeros(n);
    let mut k7 = State::zeros(n);
    let mut tmp = State::zeros(n);
    let mut y_new = State::zeros(n);

    sys.rhs(t, &y, &mut k1);
    stats.rhs_evals += 1;

    let mut h = initial_step(&y, &k1, opts, t_out.get(1).map_or(1.0, |t1| t1 - t0));
    for (idx, &target) in t_out.iter().enumerate().skip(1) {
        while t < target {
            let remaining = target - t;
            let clamped = h >= remaining;
            let step = if clamped { remaining } else { h };
            if !(step >= opts.min_step_rel * t.abs().max(1.0)) {
                return Err(Error::StepSizeUnderflow { t, h: step });
            }
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::StepSizeUnderflow { t, h: step });
            }

            axpy(&mut tmp, &y, step, &[(A21, &k1)]);
            sys.rhs(t + C2 * step, &tmp, &mut k2);
            axpy(&mut tmp, &y, step, &[(A31, &k1), (A32, &k2)]);
            sys.rhs(t + C3 * step, &tmp, &mut k3);
            axpy(&mut tmp, &y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            sys.rhs(t + C4 * step, &tmp, &mut k4);
            axpy(&mut tmp, &y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            sys.rhs(t + C5 * step, &tmp, &mut k5);
            axpy(&mut tmp, &y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            sys.rhs(t + step, &tmp, &mut k6);
            axpy(&mut y_new, &y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            sys.rhs(t + step, &y_new, &mut k7);
            stats.rhs_evals += 6;

            let mut acc = 0.0;
            for i in 0..n {
                let e = step
                    * (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7);
                let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
                acc += (e.norm() / sc).powi(2);
            }
            let err = (acc / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::StateInvalid { t, reason: "non-finite derivative".into() });
            }

            if err <= 1.0 {
                stats.accepted += 1;
                t = if clamped { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                sys.accept(t, &y);
                // FSAL: reuse the last stage unless `accept` changed the system.
                sys.rhs(t, &y, &mut k1);
                stats.rhs_evals += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // A clamped step says nothing about the natural step size.
                h = if clamped { h.max(step * fac) } else { step * fac };
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        observe(idx, t, &y)?;
    }
    Ok((y, stats))
}

fn initial_step(y: &State, f: &State, opts: &OdeOptions, span: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sc = opts.atol + opts.rtol * y[i].norm();
        d0 += (y[i].norm() / sc).powi(2);
        d1 += (f[i].norm() / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span.abs()).max(1e-12)
}
