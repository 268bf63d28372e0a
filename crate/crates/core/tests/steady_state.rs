mod common;

use std::f64::consts::PI;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use qgyro_core::liouvillian::{liouvillian_with_ops, ModelParams};
use qgyro_core::spin::{max_abs, trace_product, SpinOperators, SpinQuantumNumber};
use qgyro_core::steady::{
    k_curves, null_state, solve_shift, steady_state, sweep_shift, Grid, SweepAxis, ROOT_KY_TOL,
};
use qgyro_core::Error;

fn spin32() -> SpinQuantumNumber {
    SpinQuantumNumber::spin_three_halves()
}

/// Steady-state `Tr(K_+ rho)` from the raw null vector (no positivity requirement).
fn k_plus(p: &ModelParams) -> Complex64 {
    let ops = SpinOperators::new(p.spin);
    let ns = null_state(&liouvillian_with_ops(p, &ops)).unwrap();
    trace_product(ops.kx(), &ns.rho) + Complex64::i() * trace_product(ops.ky(), &ns.rho)
}

#[test]
fn steady_state_matches_lu_oracle() {
    for (omega, c_q, beta) in [(0.0, 0.0, 0.0), (-0.03, 0.02, 0.0), (0.2, -0.1, 0.7), (0.5, 0.05, -2.0)] {
        let p = ModelParams { omega, c_q, beta, ..base() };
        let got = steady_state(&p).unwrap();
        let want = ref_steady(&p, 3);
        assert!(max_abs(&(got.rho_s.matrix() - &want)) < 1e-10, "{p:?}");
        assert_eq!(got.null_dim, 1);
        assert!(got.gap_ratio > 1e6);
        let kp = ref_k_plus(&p, 3);
        assert!((got.k_x - kp.re).abs() < 1e-10 && (got.k_y - kp.im).abs() < 1e-10);
    }
}

#[test]
fn k_x_positive_across_base_window() {
    for c_q in [0.0, 0.01, 0.02, 0.05] {
        let grid = Grid::linspace(-0.5, 0.5, 51).unwrap();
        let samples = k_curves(&ModelParams { c_q, ..base() }, &grid).unwrap();
        for s in samples {
            let s = s.unwrap();
            assert!(s.k_x > 0.0, "c_q = {c_q}, omega = {}", s.omega);
        }
    }
}

#[test]
fn zero_quadrupole_curves_have_definite_parity() {
    let grid = Grid::linspace(-0.4, 0.4, 41).unwrap();
    let s: Vec<_> = k_curves(&base(), &grid).unwrap().into_iter().map(Result::unwrap).collect();
    for (a, b) in s.iter().zip(s.iter().rev()) {
        assert!((a.k_x - b.k_x).abs() < 1e-12);
        assert!((a.k_y + b.k_y).abs() < 1e-12);
    }
    assert!(s[20].k_y.abs() < 1e-12);
}

#[test]
fn shift_matches_dense_scan_oracle() {
    for c_q in [0.01, 0.02, 0.05] {
        let p = ModelParams { c_q, ..base() };
        let got = solve_shift(&p, None).unwrap();
        let want = ref_root(&p, -0.5, 0.5, 401).expect("oracle root");
        assert!(got.omega_s < 0.0);
        assert!((got.omega_s - want).abs() < 1e-9, "c_q = {c_q}: {} vs {want}", got.omega_s);
        assert!(got.k_y.abs() <= ROOT_KY_TOL);
        assert!(got.k_x > 0.0);
    }
}

#[test]
fn zero_quadrupole_shift_is_zero() {
    let s = solve_shift(&base(), None).unwrap();
    assert!(s.omega_s.abs() < 1e-9);
}

#[test]
fn sweeps_are_monotone() {
    let cq = sweep_shift(SweepAxis::CQ, &Grid::linspace(0.0, 0.1, 21).unwrap(), &base(), false).unwrap();
    let sol: Vec<_> = cq.points.iter().map(|p| p.outcome.as_ref().unwrap().solution.clone()).collect();
    for w in sol.windows(2) {
        assert!(w[1].omega_s.abs() >= w[0].omega_s.abs() - 1e-12);
        assert!(w[1].k_x <= w[0].k_x + 1e-12);
    }

    let base = ModelParams { c_q: 0.02, ..base() };
    let grid = Grid::new(vec![0.05, 0.1, 0.2, 0.5, 1.0, 2.0]).unwrap();
    let od = sweep_shift(SweepAxis::OmegaD, &grid, &base, false).unwrap();
    let ws: Vec<f64> = od.points.iter().map(|p| p.outcome.as_ref().unwrap().solution.omega_s).collect();
    for w in ws.windows(2) {
        assert!(w[1].abs() <= w[0].abs() + 1e-12, "{ws:?}");
    }
}

#[test]
fn beta_zero_crossing_flips_with_quadrupole_sign() {
    let crossing = |c_q: f64| {
        let grid = Grid::linspace(-1.0, 1.0, 41).unwrap();
        let r = sweep_shift(SweepAxis::Beta, &grid, &ModelParams { c_q, ..base() }, false).unwrap();
        let ws: Vec<f64> = r.points.iter().map(|p| p.outcome.as_ref().unwrap().solution.omega_s).collect();
        let i = ws.windows(2).position(|w| w[0].signum() != w[1].signum()).expect("sign change");
        let (b0, b1) = (grid.values()[i], grid.values()[i + 1]);
        b0 + (b1 - b0) * ws[i] / (ws[i] - ws[i + 1])
    };
    let plus = crossing(0.02);
    let minus = crossing(-0.02);
    assert!(plus != 0.0);
    assert!((plus + minus).abs() < 1e-9, "{plus} vs {minus}");
}

#[test]
fn homotopy_picks_the_branch_connected_to_zero() {
    // Large C_Q: the scan sees several admissible roots.
    let p = ModelParams { c_q: 0.495, gamma1: 0.05, gamma2: 0.005, gamma_p: 0.005, ..base() }.with_omega_d(0.1);
    let s = solve_shift(&p, None).unwrap();
    assert!(s.k_y.abs() <= ROOT_KY_TOL && s.k_x > 0.0);
    let mut prev = 0.0;
    let mut branch = None;
    for i in 1..=64 {
        let q = p.with_c_q(p.c_q * i as f64 / 64.0);
        let r = solve_shift(&q, Some((prev - 0.05, prev + 0.05))).unwrap();
        prev = r.omega_s;
        branch = Some(r.omega_s);
    }
    assert!((branch.unwrap() - s.omega_s).abs() < 1e-8, "{branch:?} vs {}", s.omega_s);
}

#[test]
fn pumping_beyond_half_gamma1_is_rejected() {
    let p = base().with_gamma_p(0.05);
    assert!(matches!(steady_state(&p), Err(Error::NotPositive { .. })));
}

fn sym_params() -> impl Strategy<Value = ModelParams> {
    (-1.0..1.0f64, -0.5..0.5f64, 0.01..2.0f64, -PI..PI, 0.01..0.5f64, 0.01..0.5f64, 0.01..0.5f64).prop_map(
        |(omega, c_q, omega_d, beta, gamma1, gamma2, gamma_p)| ModelParams {
            omega,
            c_q,
            omega_d,
            beta,
            gamma1,
            gamma2,
            gamma_p,
            spin: spin32(),
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn null_vector_matches_lu_oracle(p in sym_params()) {
        let k = k_plus(&p);
        let r = ref_k_plus(&p, 3);
        prop_assert!((k - r).norm() < 1e-9, "{k} vs {r}");
    }

    #[test]
    fn reflection_symmetries(p in sym_params()) {
        let k = k_plus(&p);
        let m = k_plus(&ModelParams { omega: -p.omega, c_q: -p.c_q, beta: -p.beta, ..p });
        prop_assert!((k.re - m.re).abs() < 1e-10);
        prop_assert!((k.im + m.im).abs() < 1e-10);
        let flipped = k_plus(&p.with_omega_d(-p.omega_d));
        prop_assert!((k + flipped).norm() < 1e-10);
    }

    #[test]
    fn phase_covariance(p in sym_params(), theta in -PI..PI) {
        let k = k_plus(&p);
        let shifted = k_plus(&p.with_beta(p.beta + theta));
        prop_assert!((shifted - k * Complex64::from_polar(1.0, theta)).norm() < 1e-10);
    }
}

#[test]
fn shift_is_odd_under_quadrupole_and_delay_reflection() {
    for (c_q, beta) in [(0.02, 0.0), (0.05, 0.3), (0.01, -0.5)] {
        let p = ModelParams { c_q, beta, ..base() };
        let a = solve_shift(&p, None).unwrap();
        let b = solve_shift(&ModelParams { c_q: -c_q, beta: -beta, ..p }, None).unwrap();
        assert!((a.omega_s + b.omega_s).abs() < 1e-10, "{} vs {}", a.omega_s, b.omega_s);
    }
}
