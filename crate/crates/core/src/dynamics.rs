//! Nonlinear feedback dynamics in the frame rotating at the carrier.
//!
//! The drive phase follows the instantaneous transverse polarization,
//! `phi'(t) = -arg Tr(K_+ rho(t))`, evaluated at every integrator stage.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::{unvec, vec, GeneratorParts, ModelParams};
use crate::ode::{self, OdeOptions, OdeStats, State, System};
use crate::spin::{hermitian_part, min_eigenvalue, trace_product, DensityMatrix, SpinOperators, EPS_PHASE};

/// Trace drift tolerated at every sample.
pub const TRACE_DRIFT_TOL: f64 = 1e-9;
/// Negative eigenvalues of the final state beyond this are an error.
pub const FINAL_PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackConfig {
    /// Below this `K_perp` the feedback phase is undefined.
    pub eps_phase: f64,
    /// Hold the last defined phase while `K_perp < eps_phase`; otherwise fall
    /// back to `initial_phi`.
    pub phase_hold: bool,
    /// Drive phase used until the first defined feedback phase.
    pub initial_phi: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self { eps_phase: EPS_PHASE, phase_hold: true, initial_phi: 0.0 }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_phase > 0.0 && self.eps_phase.is_finite()) {
            return Err(Error::InvalidParams(format!("eps_phase = {} must be positive", self.eps_phase)));
        }
        if !self.initial_phi.is_finite() {
            return Err(Error::InvalidParams("initial_phi must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DynamicsOptions {
    pub ode: OdeOptions,
    /// Store the state every this many output samples (0: final state only).
    pub checkpoint_every: usize,
}


#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `Tr(K_+ rho(t))` in the carrier frame.
    pub k_plus: Vec<Complex64>,
    pub checkpoints: Vec<(f64, DensityMatrix)>,
    pub params: ModelParams,
    pub final_state: Option<DensityMatrix>,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn k_perp(&self) -> Vec<f64> {
        self.k_plus.iter().map(|z| z.norm()).collect()
    }

    /// Trailing `fraction` of the samples. Checkpoints outside the window are
    /// dropped; the final state is kept.
    pub fn late_window(&self, fraction: f64) -> Result<Trajectory> {
        if self.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidParams(format!("window fraction {fraction} not in (0, 1]")));
        }
        let n = self.len();
        let keep = ((n as f64 * fraction).round() as usize).clamp(1, n);
        let start = n - keep;
        let t_start = self.times[start];
        Ok(Trajectory {
            times: self.times[start..].to_vec(),
            k_plus: self.k_plus[start..].to_vec(),
            checkpoints: self.checkpoints.iter().filter(|(t, _)| *t >= t_start).cloned().collect(),
            params: self.params,
            final_state: self.final_state.clone(),
            stats: self.stats,
        })
    }

    /// Uniform sample spacing, if the times are uniform to 1e-9 relative.
    pub fn sample_interval(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let dt = (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64;
        let uniform = self.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(1.0));
        uniform.then_some(dt)
    }
}

struct FeedbackSystem {
    parts: GeneratorParts,
    k_plus_row: DVector<Complex64>,
    eps: f64,
    hold: bool,
    initial: Complex64,
    held: Complex64,
}

impl FeedbackSystem {
    fn k_plus(&self, y: &State) -> Complex64 {
        // Tr(K_+ rho) = sum_ij (K_+)_ji rho_ij; k_plus_row holds vec(K_+^T).
        self.k_plus_row.dot(y)
    }

    /// `e^{i phi'}` with `phi' = -arg k`, or the fallback when undefined.
    fn phase_factor(&self, y: &State) -> Complex64 {
        let k = self.k_plus(y);
        let r = k.norm();
        if r >= self.eps {
            k.conj() / r
        } else if self.hold {
            self.held
        } else {
            self.initial
        }
    }
}

impl System for FeedbackSystem {
    fn rhs(&self, _t: f64, y: &State, dy: &mut State) {
        let e = self.phase_factor(y);
        dy.gemv(Complex64::from(1.0), self.parts.fixed.matrix(), y, Complex64::from(0.0));
        dy.gemv(e, self.parts.plus.matrix(), y, Complex64::from(1.0));
        dy.gemv(e.conj(), self.parts.minus.matrix(), y, Complex64::from(1.0));
    }

    fn accept(&mut self, _t: f64, y: &State) {
        let k = self.k_plus(y);
        if k.norm() >= self.eps {
            self.held = k.conj() / k.norm();
        }
    }
}

/// Output grid `0, dt, 2 dt, ...` up to `t_end` (inclusive within rounding).
pub fn output_times(t_end: f64, output_dt: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParams(format!("t_end = {t_end} must be positive")));
    }
    if !(output_dt > 0.0 && output_dt <= t_end) {
        return Err(Error::InvalidParams(format!("output_dt = {output_dt} must be in (0, t_end]")));
    }
    let n = (t_end / output_dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * output_dt).collect())
}

pub fn integrate_feedback(
    rho0: &DensityMatrix,
    params: &ModelParams,
    fb: &FeedbackConfig,
    t_end: f64,
    output_dt: f64,
) -> Result<Trajectory> {
    integrate_feedback_with(rho0, params, fb, t_end, output_dt, &DynamicsOptions::default())
}

/// Feedback integration in the carrier frame; `params.omega` is ignored.
pub fn integrate_feedback_with(
    rho0: &DensityMatrix,
    params: &ModelParams,
    fb: &FeedbackConfig,
    t_end: f64,
    output_dt: f64,
    opts: &DynamicsOptions,
) -> Result<Trajectory> {
    params.validate()?;
    fb.validate()?;
    let ops = SpinOperators::new(params.spin);
    let d = ops.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho0.dim() });
    }
    let frame = params.with_omega(0.0);
    let times = output_times(t_end, output_dt)?;

    let initial = Complex64::from_polar(1.0, fb.initial_phi);
    let mut sys = FeedbackSystem {
        parts: GeneratorParts::new(&frame, &ops),
        k_plus_row: vec(&ops.k_plus().transpose()),
        eps: fb.eps_phase,
        hold: fb.phase_hold,
        initial,
        held: initial,
    };
    // A state that starts with a defined phase seeds the hold with it.
    let y0 = vec(rho0.matrix());
    sys.accept(0.0, &y0);

    let mut k_plus = Vec::with_capacity(times.len());
    let mut checkpoints = Vec::new();
    let every = opts.checkpoint_every;
    let (y_end, stats) = ode::integrate(&mut sys, y0, &times, &opts.ode, |i, t, y| {
        let rho = unvec(y, d);
        let drift = (rho.trace() - Complex64::from(1.0)).norm();
        if !(drift < TRACE_DRIFT_TOL) {
            return Err(Error::StateInvalid { t, reason: format!("trace drift {drift:.3e}") });
        }
        k_plus.push(trace_product(ops.k_plus(), &rho));
        if every > 0 && i % every == 0 {
            checkpoints.push((t, DensityMatrix::new_unchecked(rho)));
        }
        Ok(())
    })?;

    let rho_end = hermitian_part(&unvec(&y_end, d));
    let min_eig = min_eigenvalue(&rho_end);
    if min_eig < -FINAL_PSD_TOL {
        return Err(Error::StateInvalid {
            t: *times.last().expect("non-empty"),
            reason: format!("final state not positive: minimum eigenvalue {min_eig:.3e}"),
        });
    }
    Ok(Trajectory {
        times,
        k_plus,
        checkpoints,
        params: frame,
        final_state: Some(DensityMatrix::new_unchecked(rho_end)),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::SpinQuantumNumber;

    fn top() -> DensityMatrix {
        DensityMatrix::pure_m(SpinQuantumNumber::spin_three_halves(), 1.5).unwrap()
    }

    #[test]
    fn undriven_diagonal_state_has_no_transverse_signal() {
        let p = ModelParams::base().with_omega_d(0.0).with_c_q(0.3);
        let tr = integrate_feedback(&top(), &p, &FeedbackConfig::default(), 20.0, 0.5).unwrap();
        assert_eq!(tr.len(), 41);
        assert!(tr.k_plus.iter().all(|z| *z == Complex64::from(0.0)));
    }

    #[test]
    fn output_grid() {
        let t = output_times(400.0, 0.05).unwrap();
        assert_eq!(t.len(), 8001);
        assert!((t[8000] - 400.0).abs() < 1e-9);
        assert!(output_times(0.0, 0.1).is_err());
        assert!(output_times(1.0, 0.0).is_err());
        assert!(output_times(1.0, 2.0).is_err());
    }

    #[test]
    fn late_window_slices() {
        let p = ModelParams::base();
        let tr = integrate_feedback(&top(), &p, &FeedbackConfig::default(), 99.9, 0.1).unwrap();
        assert_eq!(tr.len(), 1000);
        let w = tr.late_window(0.5).unwrap();
        assert_eq!(w.len(), 500);
        assert_eq!(w.times[0], tr.times[500]);
        assert_eq!(tr.late_window(1.0).unwrap().len(), 1000);
        assert!(tr.late_window(0.0).is_err());
        assert!((w.sample_interval().unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn drive_tips_the_top_state() {
        let p = ModelParams::base().with_c_q(0.02);
        let tr = integrate_feedback(&top(), &p, &FeedbackConfig::default(), 50.0, 1.0).unwrap();
        assert_eq!(tr.k_plus[0], Complex64::from(0.0));
        assert!(tr.k_plus.last().unwrap().norm() > 1e-3);
        let rho = tr.final_state.unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_inputs() {
        let p = ModelParams::base();
        let fb = FeedbackConfig { eps_phase: 0.0, ..FeedbackConfig::default() };
        assert!(integrate_feedback(&top(), &p, &fb, 1.0, 0.1).is_err());
        let half = DensityMatrix::maximally_mixed(SpinQuantumNumber::from_two_k(1).unwrap());
        assert!(matches!(
            integrate_feedback(&half, &p, &FeedbackConfig::default(), 1.0, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
