use std::f64::consts::PI;

use num_complex::Complex64;
use qgyro_core::liouvillian::{liouvillian_with_ops, rhs_apply, ModelParams};
use qgyro_core::spin::{hermiticity_error, max_abs, trace_product, Operator, SpinOperators, SpinQuantumNumber};
use qgyro_core::steady::null_state;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::HarnessError;
use crate::output::{Cell, ResultBundle, Table};
use crate::registry::{Experiment, RunContext};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const GENERATOR_TOL: f64 = 1e-12;

/// Randomized symmetry and generator checks.
pub struct Properties;

/// One random parameter tuple with the auxiliary draws used by the checks.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyCase {
    pub params: ModelParams,
    /// Phase shift for the U(1) check.
    pub theta: f64,
    #[serde(skip)]
    pub state: Operator,
}

impl PropertyCase {
    /// Draws rates in [0.01, 0.5], |C_Q| <= 0.5, Omega_d in [0.01, 2],
    /// beta in (-pi, pi], omega in [-1, 1], and a random full-rank state.
    pub fn draw(rng: &mut ChaCha8Rng, spin: SpinQuantumNumber) -> Self {
        let mut rate = || rng.random_range(0.01..=0.5);
        let (gamma1, gamma2, gamma_p) = (rate(), rate(), rate());
        let params = ModelParams {
            omega: rng.random_range(-1.0..=1.0),
            c_q: rng.random_range(-0.5..=0.5),
            omega_d: rng.random_range(0.01..=2.0),
            beta: PI - rng.random_range(0.0..2.0 * PI),
            gamma1,
            gamma2,
            gamma_p,
            spin,
        };
        let theta = rng.random_range(-PI..PI);
        let d = spin.dim();
        let a = Operator::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m = &a * a.adjoint();
        let state = m.unscale(m.trace().re);
        Self { params, theta, state }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Check {
    KxEven,
    KyOdd,
    DriveFlip,
    U1,
    Trace,
    Hermiticity,
    Superoperator,
}

impl Check {
    const ALL: [Check; 7] =
        [Check::KxEven, Check::KyOdd, Check::DriveFlip, Check::U1, Check::Trace, Check::Hermiticity, Check::Superoperator];

    fn name(self) -> &'static str {
        match self {
            Check::KxEven => "k_x_even",
            Check::KyOdd => "k_y_odd",
            Check::DriveFlip => "drive_sign_flip",
            Check::U1 => "phase_covariance",
            Check::Trace => "trace_preservation",
            Check::Hermiticity => "hermiticity_preservation",
            Check::Superoperator => "superoperator_vs_direct",
        }
    }

    fn tolerance(self) -> f64 {
        match self {
            Check::KxEven | Check::KyOdd | Check::DriveFlip | Check::U1 => SYMMETRY_TOL,
            _ => GENERATOR_TOL,
        }
    }
}

/// Steady-state `Tr(K_+ rho)` from the raw null vector. Positivity is not
/// required: the symmetries are algebraic and must hold regardless.
fn k_plus(p: &ModelParams, gen: &SpinOperators, readout: &SpinOperators) -> qgyro_core::Result<Complex64> {
    let ns = null_state(&liouvillian_with_ops(p, gen))?;
    Ok(trace_product(readout.k_plus(), &ns.rho))
}

fn evaluate(case: &PropertyCase, ops: &SpinOperators, readout: &SpinOperators) -> qgyro_core::Result<Vec<(Check, f64)>> {
    let p = case.params;
    let k = k_plus(&p, ops, readout)?;
    let mirrored = ModelParams { omega: -p.omega, c_q: -p.c_q, beta: -p.beta, ..p };
    let km = k_plus(&mirrored, ops, readout)?;
    let flipped = k_plus(&p.with_omega_d(-p.omega_d), ops, readout)?;
    let shifted = k_plus(&p.with_beta(p.beta + case.theta), ops, readout)?;

    let rho = &case.state;
    let direct = rhs_apply(rho, &p, ops)?;
    let via_super = liouvillian_with_ops(&p, ops).apply(rho)?;
    Ok(vec![
        (Check::KxEven, (k.re - km.re).abs()),
        (Check::KyOdd, (k.im + km.im).abs()),
        (Check::DriveFlip, (k + flipped).norm()),
        (Check::U1, (shifted - k * Complex64::from_polar(1.0, case.theta)).norm()),
        (Check::Trace, direct.trace().norm()),
        (Check::Hermiticity, hermiticity_error(&direct)),
        (Check::Superoperator, max_abs(&(direct - via_super))),
    ])
}

/// Operators used to read out `k_+`, optionally with `K_y` negated (test
/// fixture). The generator always uses the correct operators.
///
/// The flipped readout returns `conj(k_+)`. The mirror relations hold for any
/// sign error in `K_y`, since they follow from `K_y` being purely imaginary;
/// the phase-covariance check is the one that detects it.
pub fn readout_operators(spin: SpinQuantumNumber, inject_ky_sign_bug: bool) -> SpinOperators {
    let ops = SpinOperators::new(spin);
    if !inject_ky_sign_bug {
        return ops;
    }
    SpinOperators::from_cartesian(spin, ops.kx().clone(), -ops.ky(), ops.kz().clone()).expect("same-shape operators")
}

impl Experiment for Properties {
    fn name(&self) -> &'static str {
        "properties"
    }

    fn description(&self) -> &'static str {
        "randomized symmetry and generator invariant checks"
    }

    fn run(&self, ctx: &RunContext<'_>) -> Result<ResultBundle, HarnessError> {
        let cfg = &ctx.config.properties;
        let spin = ctx.config.model.spin;
        let ops = SpinOperators::new(spin);
        let readout = readout_operators(spin, cfg.inject_ky_sign_bug);
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let cases: Vec<PropertyCase> = (0..cfg.count).map(|_| PropertyCase::draw(&mut rng, spin)).collect();
        let results: Vec<_> = cases.par_iter().map(|c| evaluate(c, &ops, &readout)).collect();

        let mut bundle = ResultBundle::new(self.name());
        let mut violations = Table::new(
            "violations.csv",
            &[
                "check", "case", "violation", "tolerance", "omega", "c_q", "omega_d", "beta", "gamma1", "gamma2",
                "gamma_p", "theta",
            ],
        );
        violations.meta("experiment", self.name()).meta("seed", ctx.seed.to_string()).meta("spin", spin.to_string());
        violations.meta("inject_ky_sign_bug", cfg.inject_ky_sign_bug.to_string());
        let mut worst = [0.0f64; Check::ALL.len()];
        let mut count = [0usize; Check::ALL.len()];
        let mut errors = 0usize;
        for (i, (case, r)) in cases.iter().zip(&results).enumerate() {
            let p = &case.params;
            let tuple = [p.omega, p.c_q, p.omega_d, p.beta, p.gamma1, p.gamma2, p.gamma_p, case.theta];
            match r {
                Ok(checks) => {
                    for &(c, v) in checks {
                        let j = c as usize;
                        worst[j] = worst[j].max(v);
                        if !(v <= c.tolerance()) {
                            count[j] += 1;
                            let mut row = vec![Cell::from(c.name()), i.into(), v.into(), c.tolerance().into()];
                            row.extend(tuple.iter().map(|&x| Cell::Num(x)));
                            violations.push(row);
                        }
                    }
                }
                Err(e) => {
                    errors += 1;
                    bundle.failures.push(format!("case {i}: {e}"));
                }
            }
        }

        let mut summary = Table::new("summary.csv", &["check", "cases", "max_violation", "tolerance", "violations"]);
        summary.meta("experiment", self.name()).meta("seed", ctx.seed.to_string()).meta("count", cfg.count.to_string());
        summary.meta("inject_ky_sign_bug", cfg.inject_ky_sign_bug.to_string());
        for c in Check::ALL {
            let j = c as usize;
            summary.push(vec![
                c.name().into(),
                (cfg.count - errors).into(),
                worst[j].into(),
                c.tolerance().into(),
                count[j].into(),
            ]);
        }
        bundle.violations = count.iter().sum();
        bundle.diag("cases", cfg.count);
        bundle.diag("solver_errors", errors);
        bundle.tables.push(summary);
        bundle.tables.push(violations);
        Ok(bundle)
    }
}
