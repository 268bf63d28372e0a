mod common;

use common::base;
use nalgebra::DVector;
use num_complex::Complex64;
use qgyro_core::dynamics::{integrate_feedback, integrate_feedback_with, DynamicsOptions, FeedbackConfig};
use qgyro_core::liouvillian::ModelParams;
use qgyro_core::ode::OdeOptions;
use qgyro_core::spectral::{find_peaks, spectrum, Hann};
use qgyro_core::spin::{DensityMatrix, SpinOperators, SpinQuantumNumber};
use qgyro_core::steady::solve_shift;

fn spin32() -> SpinQuantumNumber {
    SpinQuantumNumber::spin_three_halves()
}

fn top() -> DensityMatrix {
    DensityMatrix::pure_m(spin32(), 1.5).unwrap()
}

/// Pure state with a small |1/2> admixture, so the phase is defined at t = 0.
fn tilted() -> DensityMatrix {
    let psi = DVector::from_vec(vec![
        Complex64::new(0.95, 0.0),
        Complex64::new(0.25, 0.1),
        Complex64::new(0.05, 0.0),
        Complex64::new(0.0, 0.0),
    ]);
    let psi = psi.unscale(psi.norm());
    DensityMatrix::new(&psi * psi.adjoint()).unwrap()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

#[test]
fn small_quadrupole_run_agrees_with_root_solver() {
    let p = ModelParams { c_q: 0.02, ..base() };
    let root = solve_shift(&p, None).unwrap();
    let traj = integrate_feedback(&top(), &p, &FeedbackConfig::default(), 400.0, 0.05).unwrap();
    let late = traj.late_window(0.5).unwrap();
    let spec = spectrum(&late.k_plus, 0.05, &Hann).unwrap();
    let peaks = find_peaks(&spec, 0.05).unwrap();
    assert_eq!(peaks.len(), 1, "{peaks:?}");
    let f = peaks.peaks[0].freq;
    assert!((f + root.omega_s).abs() < 1e-3, "peak {f} vs -omega_s {}", -root.omega_s);
    let k_perp = late.k_perp();
    assert!((mean(&k_perp) - root.k_x).abs() < 1e-4);
    assert!((k_perp.last().unwrap() - root.k_x).abs() < 1e-4);
}

#[test]
fn zero_quadrupole_run_does_not_precess() {
    let traj = integrate_feedback(&top(), &base(), &FeedbackConfig::default(), 300.0, 0.05).unwrap();
    let late = traj.late_window(0.5).unwrap();
    let spec = spectrum(&late.k_plus, 0.05, &Hann).unwrap();
    let peaks = find_peaks(&spec, 0.05).unwrap();
    assert_eq!(peaks.len(), 1);
    assert!(peaks.peaks[0].freq.abs() < 1e-3);
    // The late phase is stationary.
    let first = late.k_plus[0];
    let last = *late.k_plus.last().unwrap();
    assert!((first.arg() - last.arg()).abs() < 1e-6);
}

#[test]
fn trajectory_rotates_with_the_initial_state() {
    let p = ModelParams { c_q: 0.05, beta: 0.3, ..base() };
    let ops = SpinOperators::new(spin32());
    let fb = FeedbackConfig::default();
    let theta = 0.9;
    let u = ops.z_rotation(theta);
    let rotated = DensityMatrix::new(&u * tilted().matrix() * u.adjoint()).unwrap();
    let a = integrate_feedback(&tilted(), &p, &fb, 60.0, 0.5).unwrap();
    let b = integrate_feedback(&rotated, &p, &fb, 60.0, 0.5).unwrap();
    let phase = Complex64::from_polar(1.0, -theta);
    for (x, y) in a.k_plus.iter().zip(&b.k_plus) {
        assert!((x * phase - y).norm() < 1e-8, "{x} {y}");
    }
}

#[test]
fn tightening_tolerances_converges() {
    let p = ModelParams { c_q: 0.05, ..base() };
    let run = |rtol: f64, atol: f64| {
        let opts = DynamicsOptions { ode: OdeOptions { rtol, atol, ..OdeOptions::default() }, checkpoint_every: 0 };
        integrate_feedback_with(&tilted(), &p, &FeedbackConfig::default(), 100.0, 1.0, &opts).unwrap()
    };
    let loose = run(1e-9, 1e-12);
    let tight = run(1e-12, 1e-15);
    let err = loose.k_plus.iter().zip(&tight.k_plus).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-7, "max deviation {err:e}");
    assert!(tight.stats.accepted > loose.stats.accepted);
}

#[test]
fn late_window_transverse_amplitude_is_settled() {
    let p = ModelParams { c_q: 0.02, ..base() };
    let traj = integrate_feedback(&top(), &p, &FeedbackConfig::default(), 400.0, 0.05).unwrap();
    let early = traj.k_perp()[..2000].to_vec();
    let late = traj.late_window(0.5).unwrap().k_perp();
    let var = |x: &[f64]| {
        let m = mean(x);
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    };
    assert!(var(&late) < 1e-12, "{}", var(&late));
    assert!(var(&early) > 1e3 * var(&late));
}

#[test]
fn final_state_is_a_density_matrix() {
    let p = ModelParams { c_q: 0.3, ..base() };
    let traj = integrate_feedback(&DensityMatrix::maximally_mixed(spin32()), &p, &FeedbackConfig::default(), 50.0, 0.1)
        .unwrap();
    let rho = traj.final_state.expect("final state");
    assert!((rho.matrix().trace() - Complex64::from(1.0)).norm() < 1e-9);
    assert!(rho.min_eigenvalue() > -1e-8);
}
