//! Rotating-frame Hamiltonian, relaxation/pumping dissipator and the
//! vectorized generator of the master equation.
//!
//! Vectorization is column stacking, which is nalgebra's native storage
//! order: `vec(X)[i + d*j] = X[i, j]`. The superoperator of `X -> A X B` is
//! `Bᵀ ⊗ A`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{Operator, SpinOperators, SpinQuantumNumber, I};

/// Pumping rate used unless configured otherwise.
///
/// Chosen below `gamma1 / 2` for the standard `gamma1 = 0.05`, which keeps the
/// dissipator completely positive.
pub const DEFAULT_GAMMA_P: f64 = 0.02;

/// All scalars of the model in one frequency unit. No factor of 2π is applied anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Frequency deviation of the rotating frame.
    #[serde(default)]
    pub omega: f64,
    /// Quadrupole constant.
    #[serde(default)]
    pub c_q: f64,
    /// Drive amplitude.
    pub omega_d: f64,
    /// Feedback phase delay (radians).
    #[serde(default)]
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_p: f64,
    pub spin: SpinQuantumNumber,
}

impl ModelParams {
    /// Spin-3/2 base set: `gamma1 = gamma2 = omega_d = 0.05`, `beta = 0`, `c_q = 0`,
    /// `gamma_p =` [`DEFAULT_GAMMA_P`].
    pub fn base() -> Self {
        Self {
            omega: 0.0,
            c_q: 0.0,
            omega_d: 0.05,
            beta: 0.0,
            gamma1: 0.05,
            gamma2: 0.05,
            gamma_p: DEFAULT_GAMMA_P,
            spin: SpinQuantumNumber::spin_three_halves(),
        }
    }

    pub fn with_omega(self, omega: f64) -> Self {
        Self { omega, ..self }
    }
    pub fn with_c_q(self, c_q: f64) -> Self {
        Self { c_q, ..self }
    }
    pub fn with_omega_d(self, omega_d: f64) -> Self {
        Self { omega_d, ..self }
    }
    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }
    pub fn with_gamma_p(self, gamma_p: f64) -> Self {
        Self { gamma_p, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("omega", self.omega),
            ("c_q", self.c_q),
            ("omega_d", self.omega_d),
            ("beta", self.beta),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma_p", self.gamma_p),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
            }
        }
        if self.gamma1 < 0.0 {
            return Err(Error::InvalidParams(format!("gamma1 = {} is negative", self.gamma1)));
        }
        if self.gamma2 < 0.0 {
            return Err(Error::InvalidParams(format!("gamma2 = {} is negative", self.gamma2)));
        }
        Ok(())
    }

    /// The dissipator equals `(Γ1/2 + Γp) D[K+] + (Γ1/2 − Γp) D[K−] + (Γ1 + 2Γ2) D[Kz]`;
    /// it is of Lindblad form (and preserves positivity) iff all three weights are non-negative.
    pub fn is_completely_positive(&self) -> bool {
        0.5 * self.gamma1 - self.gamma_p.abs() >= 0.0 && self.gamma1 + 2.0 * self.gamma2 >= 0.0
    }

    pub fn max_rate(&self) -> f64 {
        self.gamma1.max(self.gamma2).max(self.gamma_p.abs())
    }
}

/// Spin-exchange inputs from which the effective rates are composed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpinExchangeParams {
    pub gamma_bin: f64,
    pub gamma_s: f64,
    pub gamma_f: f64,
    pub mean_sz: f64,
    pub mean_fz: f64,
    pub mean_f2: f64,
    pub mean_fz2: f64,
    pub gamma1_prime: f64,
    pub gamma2_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveRates {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_p: f64,
}

/// `Γ1 = Γ1' + Γ_S + 2Γ_f<F² − F_z²>`, `Γ2 = Γ2' + 2Γ_f<2F_z² − F²>`,
/// `Γp = Γ_S<S_z> + Γ_f<F_z>` with `Γ_S = Γ_bin + Γ_s`.
///
/// With `reject_negative_gamma2`, a negative `Γ2` is reported as an error
/// instead of being returned.
pub fn effective_rates(se: &SpinExchangeParams, reject_negative_gamma2: bool) -> Result<EffectiveRates> {
    let non_negative = [
        ("gamma_bin", se.gamma_bin),
        ("gamma_s", se.gamma_s),
        ("gamma_f", se.gamma_f),
        ("gamma1_prime", se.gamma1_prime),
        ("gamma2_prime", se.gamma2_prime),
        ("mean_fz2", se.mean_fz2),
    ];
    for (name, v) in non_negative {
        if !(v >= 0.0) {
            return Err(Error::InvalidParams(format!("{name} = {v} must be non-negative")));
        }
    }
    if se.mean_f2 < se.mean_fz2 {
        return Err(Error::InvalidParams(format!(
            "<F²> = {} is smaller than <F_z²> = {}",
            se.mean_f2, se.mean_fz2
        )));
    }
    let gamma_big_s = se.gamma_bin + se.gamma_s;
    let gamma1 = se.gamma1_prime + gamma_big_s + 2.0 * se.gamma_f * (se.mean_f2 - se.mean_fz2);
    let gamma2 = se.gamma2_prime + 2.0 * se.gamma_f * (2.0 * se.mean_fz2 - se.mean_f2);
    let gamma_p = gamma_big_s * se.mean_sz + se.gamma_f * se.mean_fz;
    if reject_negative_gamma2 && gamma2 < 0.0 {
        return Err(Error::NegativeGamma2 { gamma2 });
    }
    Ok(EffectiveRates { gamma1, gamma2, gamma_p })
}

/// `ω K_z + C_Q K_z² + (Ω_d/4i)(K_+ e^{-iβ} − K_− e^{iβ})`.
pub fn hamiltonian_rotating(params: &ModelParams, ops: &SpinOperators) -> Operator {
    hamiltonian_with_phase(params, ops, 0.0)
}

/// Drive coefficient `a` in `a K_+ e^{iφ} + conj(a) K_− e^{−iφ}`.
fn drive_coefficient(params: &ModelParams) -> Complex64 {
    Complex64::from(params.omega_d) / (I * 4.0) * Complex64::from_polar(1.0, -params.beta)
}

/// Hamiltonian with the drive phase advanced by `phi`:
/// `ω K_z + C_Q K_z² + (Ω_d/4i)(K_+ e^{i(φ−β)} − K_− e^{−i(φ−β)})`.
pub fn hamiltonian_with_phase(params: &ModelParams, ops: &SpinOperators, phi: f64) -> Operator {
    let kz = ops.kz();
    let a = drive_coefficient(params) * Complex64::from_polar(1.0, phi);
    let diag = kz.scale(params.omega) + (kz * kz).scale(params.c_q);
    let drive = ops.k_plus() * a + ops.k_minus() * a.conj();
    // Drop rounding asymmetry in the drive so the result is exactly Hermitian.
    let h = diag + drive;
    (&h + h.adjoint()).scale(0.5)
}

fn check_dim(m: &Operator, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

/// Relaxation and pumping terms applied directly to a matrix:
///
/// `Γ1[K⃗·ρK⃗ − ½{ρ,K²}] + Γ2[2K_zρK_z − {ρ,K_z²}] + Γp[K_+ρK_− − K_−ρK_+ + {ρ,K_z}]`,
/// with `K² = K(K+1)·I`.
pub fn dissipator_apply(rho: &Operator, params: &ModelParams, ops: &SpinOperators) -> Result<Operator> {
    check_dim(rho, ops.dim())?;
    let (kx, ky, kz, kp, km) = (ops.kx(), ops.ky(), ops.kz(), ops.k_plus(), ops.k_minus());
    let k = ops.spin().k();
    let casimir = k * (k + 1.0);

    let kz_rho = kz * rho;
    let rho_kz = rho * kz;
    let sandwich = kx * rho * kx + ky * rho * ky + &kz_rho * kz;
    let t1 = sandwich - rho.scale(casimir);

    let kz2 = kz * kz;
    let t2 = (&kz_rho * kz).scale(2.0) - (&kz2 * rho + rho * &kz2);

    let tp = kp * rho * km - km * rho * kp + kz_rho + rho_kz;

    Ok(t1.scale(params.gamma1) + t2.scale(params.gamma2) + tp.scale(params.gamma_p))
}

/// `−i[H̃, ρ] + L_D[ρ]`, evaluated directly.
pub fn rhs_apply(rho: &Operator, params: &ModelParams, ops: &SpinOperators) -> Result<Operator> {
    rhs_apply_with_phase(rho, params, ops, 0.0)
}

pub fn rhs_apply_with_phase(rho: &Operator, params: &ModelParams, ops: &SpinOperators, phi: f64) -> Result<Operator> {
    let h = hamiltonian_with_phase(params, ops, phi);
    let diss = dissipator_apply(rho, params, ops)?;
    Ok((&h * rho - rho * &h) * (-I) + diss)
}

/// Linear map on column-stacked `d×d` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: DMatrix<Complex64>,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: matrix.nrows() });
        }
        Ok(Self { dim, matrix })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, matrix: DMatrix::zeros(dim * dim, dim * dim) }
    }

    /// Superoperator of `X -> A X B`.
    pub fn sandwich(a: &Operator, b: &Operator) -> Self {
        Self { dim: a.nrows(), matrix: b.transpose().kronecker(a) }
    }

    /// Superoperator of `X -> −i[A, X]`.
    pub fn commutator(a: &Operator) -> Self {
        let d = a.nrows();
        let id = Operator::identity(d, d);
        let m = (id.kronecker(a) - a.transpose().kronecker(&id)) * (-I);
        Self { dim: d, matrix: m }
    }

    /// Superoperator of `X -> {A, X}`.
    pub fn anticommutator(a: &Operator) -> Self {
        let d = a.nrows();
        let id = Operator::identity(d, d);
        Self { dim: d, matrix: id.kronecker(a) + a.transpose().kronecker(&id) }
    }

    /// Hilbert-space dimension `d` (the matrix is `d²×d²`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn apply(&self, x: &Operator) -> Result<Operator> {
        check_dim(x, self.dim)?;
        Ok(unvec(&(&self.matrix * vec(x)), self.dim))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, matrix: &self.matrix * s }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, matrix: &self.matrix + &other.matrix }
    }
}

/// Column stacking.
pub fn vec(x: &Operator) -> DVector<Complex64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn unvec(v: &DVector<Complex64>, dim: usize) -> Operator {
    Operator::from_column_slice(dim, dim, v.as_slice())
}

/// Generator split into a phase-independent part and the two drive parts, so
/// that the full generator at drive phase `φ` is
/// `fixed + e^{iφ}·plus + e^{−iφ}·minus`.
#[derive(Debug, Clone)]
pub struct GeneratorParts {
    pub fixed: Superoperator,
    pub plus: Superoperator,
    pub minus: Superoperator,
}

impl GeneratorParts {
    pub fn new(params: &ModelParams, ops: &SpinOperators) -> Self {
        let kz = ops.kz();
        let h0 = kz.scale(params.omega) + (kz * kz).scale(params.c_q);
        let fixed = Superoperator::commutator(&h0).add(&dissipator_superoperator(params, ops));
        let a = drive_coefficient(params);
        let plus = Superoperator::commutator(ops.k_plus()).scale(a);
        let minus = Superoperator::commutator(ops.k_minus()).scale(a.conj());
        Self { fixed, plus, minus }
    }

    pub fn at_phase(&self, phi: f64) -> Superoperator {
        let e = Complex64::from_polar(1.0, phi);
        Superoperator {
            dim: self.fixed.dim,
            matrix: &self.fixed.matrix + &self.plus.matrix * e + &self.minus.matrix * e.conj(),
        }
    }
}

/// Dissipator as a superoperator, term for term with [`dissipator_apply`].
pub fn dissipator_superoperator(params: &ModelParams, ops: &SpinOperators) -> Superoperator {
    let d = ops.dim();
    let (kx, ky, kz, kp, km) = (ops.kx(), ops.ky(), ops.kz(), ops.k_plus(), ops.k_minus());
    let k = ops.spin().k();
    let id_super = DMatrix::<Complex64>::identity(d * d, d * d);

    let t1 = Superoperator::sandwich(kx, kx).matrix
        + Superoperator::sandwich(ky, ky).matrix
        + Superoperator::sandwich(kz, kz).matrix
        - id_super.scale(k * (k + 1.0));
    let kz2 = kz * kz;
    let t2 = Superoperator::sandwich(kz, kz).matrix.scale(2.0) - Superoperator::anticommutator(&kz2).matrix;
    let tp = Superoperator::sandwich(kp, km).matrix - Superoperator::sandwich(km, kp).matrix
        + Superoperator::anticommutator(kz).matrix;

    Superoperator {
        dim: d,
        matrix: t1.scale(params.gamma1) + t2.scale(params.gamma2) + tp.scale(params.gamma_p),
    }
}

/// Time-independent rotating-frame generator `ρ -> −i[H̃, ρ] + L_D[ρ]`.
pub fn liouvillian_matrix(params: &ModelParams) -> Result<Superoperator> {
    params.validate()?;
    Ok(liouvillian_with_ops(params, &SpinOperators::new(params.spin)))
}

pub fn liouvillian_with_ops(params: &ModelParams, ops: &SpinOperators) -> Superoperator {
    GeneratorParts::new(params, ops).at_phase(0.0)
}
