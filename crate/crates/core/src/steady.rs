//! Steady states of the rotating-frame generator and the self-consistent
//! precession-frequency deviation.
//!
//! At fixed `omega` the generator is time independent; its null vector is the
//! steady state. The deviation `omega_s` is the root of `k_y(omega)` with
//! `k_x > 0`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::{liouvillian_with_ops, unvec, ModelParams, Superoperator};
use crate::spin::{hermitian_part, max_abs, min_eigenvalue, trace_product, DensityMatrix, Operator, SpinOperators};

/// Required ratio between the two smallest singular values of the generator.
pub const GAP_RATIO_MIN: f64 = 1e6;
/// Singular values below this fraction of the largest count towards the null dimension.
pub const NULL_REL_TOL: f64 = 1e-9;
/// Residual bound relative to the largest singular value.
pub const RESIDUAL_REL_TOL: f64 = 1e-10;
/// Eigenvalues of the Hermitized steady state below this are an error.
pub const NEGATIVITY_TOL: f64 = 1e-8;
/// Certificate on `|k_y(omega_s)|`.
pub const ROOT_KY_TOL: f64 = 1e-10;
/// Points in the default sign-change scan.
pub const SCAN_POINTS: usize = 201;
/// C_Q steps used to follow the physical root when several exist.
pub const HOMOTOPY_STEPS: usize = 16;

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    pub rho_s: DensityMatrix,
    pub k_plus: Complex64,
    pub k_x: f64,
    pub k_y: f64,
    /// Max-norm of `L[rho_s]`.
    pub residual: f64,
    pub null_dim: usize,
    pub gap_ratio: f64,
}

/// Normalized null vector of a generator, with diagnostics.
#[derive(Debug, Clone)]
pub struct NullState {
    pub rho: Operator,
    pub residual: f64,
    pub gap_ratio: f64,
    pub null_dim: usize,
    pub spectral_scale: f64,
}

/// Null vector from the right singular vector of the smallest singular value,
/// rescaled to unit trace and Hermitized.
pub fn null_state(l: &Superoperator) -> Result<NullState> {
    let d = l.dim();
    let svd = l.matrix().clone().svd(false, true);
    let sv = &svd.singular_values;
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");

    let (mut i_min, mut i_next) = (0usize, usize::MAX);
    for i in 1..sv.len() {
        if sv[i] < sv[i_min] {
            i_next = i_min;
            i_min = i;
        } else if i_next == usize::MAX || sv[i] < sv[i_next] {
            i_next = i;
        }
    }
    let sigma_max = sv.max();
    let sigma_min = sv[i_min];
    let sigma_next = if i_next == usize::MAX { f64::INFINITY } else { sv[i_next] };
    let gap_ratio = if sigma_min > 0.0 { sigma_next / sigma_min } else { f64::INFINITY };
    let null_dim = sv.iter().filter(|&&s| s <= NULL_REL_TOL * sigma_max).count();

    if null_dim > 1 || !(gap_ratio > GAP_RATIO_MIN) {
        return Err(Error::NullSpaceDegenerate { null_dim, gap_ratio });
    }

    // v_t holds V^H, so the singular vector is the conjugated row.
    let v = DVector::from_iterator(d * d, v_t.row(i_min).iter().map(|z| z.conj()));
    let raw = unvec(&v, d);
    let tr = raw.trace();
    if tr.norm() < 1e-12 * max_abs(&raw) {
        return Err(Error::NullSpaceDegenerate { null_dim: 0, gap_ratio });
    }
    let rho = hermitian_part(&(raw / tr));
    let residual = max_abs(&l.apply(&rho)?);
    let bound = RESIDUAL_REL_TOL * sigma_max;
    if residual > bound {
        return Err(Error::ResidualTooLarge { residual, bound });
    }
    Ok(NullState { rho, residual, gap_ratio, null_dim: 1, spectral_scale: sigma_max })
}

pub fn steady_state(params: &ModelParams) -> Result<SteadyStateResult> {
    params.validate()?;
    steady_state_with_ops(params, &SpinOperators::new(params.spin))
}

pub fn steady_state_with_ops(params: &ModelParams, ops: &SpinOperators) -> Result<SteadyStateResult> {
    let l = liouvillian_with_ops(params, ops);
    let ns = null_state(&l)?;
    let min_eig = min_eigenvalue(&ns.rho);
    if min_eig < -NEGATIVITY_TOL {
        return Err(Error::NotPositive { min_eigenvalue: min_eig });
    }
    let k_plus = trace_product(ops.k_plus(), &ns.rho);
    let k_x = trace_product(ops.kx(), &ns.rho).re;
    let k_y = trace_product(ops.ky(), &ns.rho).re;
    Ok(SteadyStateResult {
        rho_s: DensityMatrix::new_unchecked(ns.rho),
        k_plus,
        k_x,
        k_y,
        residual: ns.residual,
        null_dim: ns.null_dim,
        gap_ratio: ns.gap_ratio,
    })
}

/// Strictly monotone sequence of axis values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("grid contains non-finite values".into()));
        }
        let inc = values.windows(2).all(|w| w[1] > w[0]);
        let dec = values.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(Error::InvalidParams("grid is not strictly monotone".into()));
        }
        Ok(Self(values))
    }

    /// `points` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Self> {
        match points {
            0 => Err(Error::EmptyInput),
            1 => Self::new(vec![start]),
            n => {
                let step = (stop - start) / (n - 1) as f64;
                Self::new((0..n).map(|i| if i == n - 1 { stop } else { start + step * i as f64 }).collect())
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KSample {
    pub omega: f64,
    pub k_x: f64,
    pub k_y: f64,
}

/// `(k_x, k_y)` at every grid value of `omega`; the `omega` in `params` is ignored.
pub fn k_curves(params: &ModelParams, omega_grid: &Grid) -> Result<Vec<Result<KSample>>> {
    params.validate()?;
    let ops = SpinOperators::new(params.spin);
    Ok(omega_grid
        .values()
        .par_iter()
        .map(|&omega| {
            steady_state_with_ops(&params.with_omega(omega), &ops).map(|s| KSample { omega, k_x: s.k_x, k_y: s.k_y })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSolution {
    pub omega_s: f64,
    pub k_x: f64,
    /// `k_y` re-evaluated at `omega_s`.
    pub k_y: f64,
    /// Final sign-change bracket.
    pub bracket: (f64, f64),
    /// Root-refinement iterations for the returned root.
    pub iterations: usize,
    /// Other admissible roots (`k_x > 0`) found in the scan range.
    pub other_roots: usize,
    /// Whether the root was selected by continuation from `C_Q = 0`.
    pub via_homotopy: bool,
}

/// Default scan range `±((2K+1)|C_Q| + 5 Γ_max)`.
pub fn default_bracket(params: &ModelParams) -> (f64, f64) {
    let half = params.spin.dim() as f64 * params.c_q.abs() + 5.0 * params.max_rate();
    (-half, half)
}

struct Root {
    omega: f64,
    k_x: f64,
    k_y: f64,
    bracket: (f64, f64),
    iterations: usize,
}

fn k_pair(params: &ModelParams, ops: &SpinOperators, omega: f64) -> Result<(f64, f64)> {
    let s = steady_state_with_ops(&params.with_omega(omega), ops)?;
    Ok((s.k_x, s.k_y))
}

/// Brent's method on `k_y` inside a sign-change bracket.
fn refine_root(params: &ModelParams, ops: &SpinOperators, lo: (f64, f64), hi: (f64, f64)) -> Result<Root> {
    let f = |w: f64| k_pair(params, ops, w).map(|p| p.1);
    let (mut a, mut fa) = lo;
    let (mut b, mut fb) = hi;
    if fa == 0.0 {
        let (k_x, k_y) = k_pair(params, ops, a)?;
        return Ok(Root { omega: a, k_x, k_y, bracket: (a, a), iterations: 0 });
    }
    if fb == 0.0 {
        let (k_x, k_y) = k_pair(params, ops, b)?;
        return Ok(Root { omega: b, k_x, k_y, bracket: (b, b), iterations: 0 });
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut mflag = true;
    let mut iterations = 0;
    while iterations < 200 {
        iterations += 1;
        let tol = 4.0 * f64::EPSILON * b.abs() + 1e-16;
        if fb.abs() <= 1e-14 || (b - a).abs() <= tol {
            break;
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc)) + b * fa * fc / ((fb - fa) * (fb - fc)) + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let q = (3.0 * a + b) / 4.0;
        let outside = !((s > q.min(b)) && (s < q.max(b)));
        if outside
            || (mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            || (!mflag && (s - b).abs() >= (c - d).abs() / 2.0)
            || (mflag && (b - c).abs() < tol)
            || (!mflag && (c - d).abs() < tol)
        {
            s = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s)?;
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    let (k_x, k_y) = k_pair(params, ops, b)?;
    Ok(Root { omega: b, k_x, k_y, bracket: (a.min(b), a.max(b)), iterations })
}

/// All roots of `k_y` found by a uniform scan followed by refinement.
fn scan_roots(params: &ModelParams, ops: &SpinOperators, bracket: (f64, f64)) -> Result<Vec<Root>> {
    let grid = Grid::linspace(bracket.0, bracket.1, SCAN_POINTS)?;
    let samples: Vec<(f64, f64)> = grid
        .values()
        .iter()
        .map(|&w| k_pair(params, ops, w).map(|p| (w, p.1)))
        .collect::<Result<_>>()?;
    let mut roots = Vec::new();
    let mut i = 0;
    while i + 1 < samples.len() {
        let (lo, hi) = (samples[i], samples[i + 1]);
        if lo.1 == 0.0 {
            roots.push(refine_root(params, ops, lo, lo)?);
            // Skip the next interval so an exact zero on the grid is not counted twice.
            i += 1;
            if hi.1 == 0.0 {
                i += 1;
            }
            continue;
        }
        if hi.1 != 0.0 && lo.1.signum() != hi.1.signum() {
            roots.push(refine_root(params, ops, lo, hi)?);
        } else if hi.1 == 0.0 && i + 2 == samples.len() {
            roots.push(refine_root(params, ops, hi, hi)?);
        }
        i += 1;
    }
    Ok(roots)
}

fn certify(root: Root, other_roots: usize, via_homotopy: bool) -> Result<ShiftSolution> {
    if !(root.k_y.abs() < ROOT_KY_TOL) {
        return Err(Error::RootNotConverged { omega: root.omega, k_y: root.k_y });
    }
    if !(root.k_x > 0.0) {
        return Err(Error::SolutionRejected { omega: root.omega, k_x: root.k_x });
    }
    Ok(ShiftSolution {
        omega_s: root.omega,
        k_x: root.k_x,
        k_y: root.k_y,
        bracket: root.bracket,
        iterations: root.iterations,
        other_roots,
        via_homotopy,
    })
}

/// Self-consistent deviation `omega_s`: root of `k_y(omega)` with `k_x > 0`.
///
/// The scan range defaults to [`default_bracket`]. When several admissible
/// roots exist, the one continuously connected to the `C_Q = 0` solution is
/// returned and the others are counted in [`ShiftSolution::other_roots`].
pub fn solve_shift(params: &ModelParams, bracket_hint: Option<(f64, f64)>) -> Result<ShiftSolution> {
    params.validate()?;
    solve_shift_with_ops(params, &SpinOperators::new(params.spin), bracket_hint)
}

pub fn solve_shift_with_ops(
    params: &ModelParams,
    ops: &SpinOperators,
    bracket_hint: Option<(f64, f64)>,
) -> Result<ShiftSolution> {
    if !(params.omega_d > 0.0) {
        return Err(Error::InvalidParams(format!(
            "omega_d = {} must be positive for an admissible solution",
            params.omega_d
        )));
    }
    let bracket = match bracket_hint {
        Some((lo, hi)) if lo < hi => (lo, hi),
        Some((lo, hi)) => return Err(Error::InvalidParams(format!("bracket ({lo}, {hi}) is empty"))),
        None => default_bracket(params),
    };
    let roots = scan_roots(params, ops, bracket)?;
    if roots.is_empty() {
        return Err(Error::NoBracket { lo: bracket.0, hi: bracket.1 });
    }
    let mut admissible: Vec<Root> = roots.into_iter().filter(|r| r.k_x > 0.0).collect();
    match admissible.len() {
        0 => {
            // Report the rejected root nearest the carrier.
            let roots = scan_roots(params, ops, bracket)?;
            let r = roots
                .into_iter()
                .min_by(|a, b| a.omega.abs().total_cmp(&b.omega.abs()))
                .expect("non-empty");
            Err(Error::SolutionRejected { omega: r.omega, k_x: r.k_x })
        }
        1 => certify(admissible.pop().expect("one root"), 0, false),
        n => {
            let chosen = follow_from_zero_quadrupole(params, ops, bracket)?;
            let idx = admissible
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1.omega - chosen).abs().total_cmp(&(b.1.omega - chosen).abs()))
                .map(|(i, _)| i)
                .expect("non-empty");
            certify(admissible.swap_remove(idx), n - 1, true)
        }
    }
}

/// Continuation in `C_Q` from zero; returns the tracked root location at the full `C_Q`.
fn follow_from_zero_quadrupole(params: &ModelParams, ops: &SpinOperators, bracket: (f64, f64)) -> Result<f64> {
    let mut prev: Option<f64> = None;
    for j in 0..HOMOTOPY_STEPS {
        let c_q = params.c_q * j as f64 / HOMOTOPY_STEPS as f64;
        let p = params.with_c_q(c_q);
        let roots: Vec<f64> = scan_roots(&p, ops, bracket)?
            .into_iter()
            .filter(|r| r.k_x > 0.0)
            .map(|r| r.omega)
            .collect();
        let target = prev.unwrap_or(0.0);
        let next = roots
            .into_iter()
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
            .ok_or(Error::NoBracket { lo: bracket.0, hi: bracket.1 })?;
        prev = Some(next);
    }
    Ok(prev.unwrap_or(0.0))
}

/// Parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    CQ,
    OmegaD,
    Beta,
}

impl SweepAxis {
    pub fn apply(self, params: &ModelParams, value: f64) -> ModelParams {
        match self {
            SweepAxis::CQ => params.with_c_q(value),
            SweepAxis::OmegaD => params.with_omega_d(value),
            SweepAxis::Beta => params.with_beta(value),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::CQ => "c_q",
            SweepAxis::OmegaD => "omega_d",
            SweepAxis::Beta => "beta",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c_q" => Ok(SweepAxis::CQ),
            "omega_d" => Ok(SweepAxis::OmegaD),
            "beta" => Ok(SweepAxis::Beta),
            other => Err(Error::InvalidParams(format!("unknown sweep axis {other:?}"))),
        }
    }
}

/// Norm and phase of `rho_{m,m+1} = <m|rho|m+1>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coherence {
    pub m: f64,
    pub norm: f64,
    pub phase: f64,
}

/// `rho_{m,m+1}` for `m = -K, ..., K-1`.
pub fn adjacent_coherences(rho: &DensityMatrix) -> Vec<Coherence> {
    let d = rho.dim();
    let k = (d as f64 - 1.0) / 2.0;
    let m = rho.matrix();
    (0..d - 1)
        .rev()
        .map(|i| {
            // Index i + 1 carries m; index i carries m + 1.
            let mq = k - (i + 1) as f64;
            let z = m[(i + 1, i)];
            Coherence { m: mq, norm: z.norm(), phase: z.arg() }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub solution: ShiftSolution,
    pub coherences: Option<Vec<Coherence>>,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: Result<SweepRecord>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub grid: Grid,
    pub base: ModelParams,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }
}

/// Solves for `omega_s` at every grid value. Points are independent and run
/// on the current rayon pool; failures are recorded per point.
pub fn sweep_shift(axis: SweepAxis, grid: &Grid, base: &ModelParams, coherences: bool) -> Result<SweepResult> {
    base.validate()?;
    let ops = SpinOperators::new(base.spin);
    let points = grid
        .values()
        .par_iter()
        .map(|&value| {
            let p = axis.apply(base, value);
            let outcome = solve_shift_with_ops(&p, &ops, None).and_then(|solution| {
                let coh = if coherences {
                    let s = steady_state_with_ops(&p.with_omega(solution.omega_s), &ops)?;
                    Some(adjacent_coherences(&s.rho_s))
                } else {
                    None
                };
                Ok(SweepRecord { solution, coherences: coh })
            });
            SweepPoint { value, outcome }
        })
        .collect();
    Ok(SweepResult { axis, grid: grid.clone(), base: *base, points })
}
