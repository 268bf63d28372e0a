//! Spin operators on the (2K+1)-dimensional Hilbert space and basic state utilities.
//!
//! The basis is the K_z eigenbasis ordered by descending magnetic quantum number,
//! `m = K, K-1, ..., -K`, so index `i` carries `m = K - i`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A square complex matrix acting on the spin Hilbert space.
pub type Operator = DMatrix<Complex64>;

pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Tolerances a matrix must meet to be accepted as a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// Below this coherence magnitude the transverse phase is treated as undefined.
pub const EPS_PHASE: f64 = 1e-9;

/// Spin quantum number stored as `2K` so half-integer spins are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpinRepr", into = "SpinRepr")]
pub struct SpinQuantumNumber {
    two_k: u32,
}

impl SpinQuantumNumber {
    pub fn from_two_k(two_k: i64) -> Result<Self> {
        if two_k < 1 || two_k > u32::MAX as i64 {
            return Err(Error::InvalidSpin(two_k));
        }
        Ok(Self { two_k: two_k as u32 })
    }

    pub const fn spin_three_halves() -> Self {
        Self { two_k: 3 }
    }

    pub fn two_k(self) -> u32 {
        self.two_k
    }

    pub fn k(self) -> f64 {
        self.two_k as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.two_k as usize + 1
    }

    /// Magnetic quantum number of basis index `i`.
    pub fn m_of_index(self, i: usize) -> f64 {
        self.k() - i as f64
    }

    /// Basis index of magnetic quantum number `m`, if `m` belongs to this spin.
    pub fn index_of_m(self, m: f64) -> Option<usize> {
        let idx = self.k() - m;
        let rounded = idx.round();
        if (idx - rounded).abs() > 1e-9 || rounded < 0.0 || rounded as usize >= self.dim() {
            None
        } else {
            Some(rounded as usize)
        }
    }
}

impl fmt::Display for SpinQuantumNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.two_k.is_multiple_of(2) {
            write!(f, "{}", self.two_k / 2)
        } else {
            write!(f, "{}/2", self.two_k)
        }
    }
}

impl FromStr for SpinQuantumNumber {
    type Err = Error;

    /// Accepts `"3/2"`, `"1"`, or `"1.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParams(format!("cannot parse spin {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "2" => Self::from_two_k(num),
                "1" => Self::from_two_k(2 * num),
                _ => Err(bad()),
            }
        } else {
            let v: f64 = s.parse().map_err(|_| bad())?;
            let two_k = 2.0 * v;
            if (two_k - two_k.round()).abs() > 1e-12 {
                return Err(bad());
            }
            Self::from_two_k(two_k.round() as i64)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpinRepr {
    Text(String),
    Number(f64),
}

impl TryFrom<SpinRepr> for SpinQuantumNumber {
    type Error = Error;
    fn try_from(r: SpinRepr) -> Result<Self> {
        match r {
            SpinRepr::Text(s) => s.parse(),
            SpinRepr::Number(v) => v.to_string().parse(),
        }
    }
}

impl From<SpinQuantumNumber> for SpinRepr {
    fn from(s: SpinQuantumNumber) -> Self {
        SpinRepr::Text(s.to_string())
    }
}

/// The angular-momentum matrices for one spin.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    spin: SpinQuantumNumber,
    kx: Operator,
    ky: Operator,
    kz: Operator,
    kp: Operator,
    km: Operator,
    k2: Operator,
}

impl SpinOperators {
    /// Standard matrices with `<m+1|K_+|m> = sqrt(K(K+1) - m(m+1))`.
    pub fn new(spin: SpinQuantumNumber) -> Self {
        let d = spin.dim();
        let k = spin.k();
        let mut kp = Operator::zeros(d, d);
        let mut kz = Operator::zeros(d, d);
        for i in 0..d {
            let m = spin.m_of_index(i);
            kz[(i, i)] = Complex64::from(m);
            if i > 0 {
                kp[(i - 1, i)] = Complex64::from((k * (k + 1.0) - m * (m + 1.0)).sqrt());
            }
        }
        let km = kp.adjoint();
        let kx = (&kp + &km).scale(0.5);
        let ky = (&kp - &km) / (I * 2.0);
        let k2 = &kx * &kx + &ky * &ky + &kz * &kz;
        Self { spin, kx, ky, kz, kp, km, k2 }
    }

    /// Builds a set from Cartesian components without checking the algebra.
    /// `K_±` and `K²` are derived from the given matrices.
    pub fn from_cartesian(spin: SpinQuantumNumber, kx: Operator, ky: Operator, kz: Operator) -> Result<Self> {
        let d = spin.dim();
        for m in [&kx, &ky, &kz] {
            check_square(m, d)?;
        }
        let kp = &kx + &ky * I;
        let km = &kx - &ky * I;
        let k2 = &kx * &kx + &ky * &ky + &kz * &kz;
        Ok(Self { spin, kx, ky, kz, kp, km, k2 })
    }

    pub fn spin(&self) -> SpinQuantumNumber {
        self.spin
    }
    pub fn dim(&self) -> usize {
        self.spin.dim()
    }
    pub fn kx(&self) -> &Operator {
        &self.kx
    }
    pub fn ky(&self) -> &Operator {
        &self.ky
    }
    pub fn kz(&self) -> &Operator {
        &self.kz
    }
    pub fn k_plus(&self) -> &Operator {
        &self.kp
    }
    pub fn k_minus(&self) -> &Operator {
        &self.km
    }
    /// `K²` assembled from the Cartesian matrices.
    pub fn k_squared(&self) -> &Operator {
        &self.k2
    }

    /// `exp(i θ K_z)`, diagonal in this basis.
    pub fn z_rotation(&self, theta: f64) -> Operator {
        let d = self.dim();
        Operator::from_fn(d, d, |i, j| {
            if i == j {
                (I * theta * self.spin.m_of_index(i)).exp()
            } else {
                Complex64::from(0.0)
            }
        })
    }
}

/// Hermitian, unit-trace, positive semidefinite state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity at the module tolerances.
    pub fn new(m: Operator) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidState(format!("matrix is {}x{}", m.nrows(), m.ncols())));
        }
        let herm = hermiticity_error(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (max deviation {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - Complex64::from(1.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = min_eigenvalue(&m);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that the caller has already validated or that is known
    /// to be a state up to integration error.
    pub fn new_unchecked(m: Operator) -> Self {
        Self(m)
    }

    pub fn basis_state(spin: SpinQuantumNumber, index: usize) -> Result<Self> {
        let d = spin.dim();
        if index >= d {
            return Err(Error::DimensionMismatch { expected: d, found: index });
        }
        let mut m = Operator::zeros(d, d);
        m[(index, index)] = Complex64::from(1.0);
        Ok(Self(m))
    }

    /// `|m><m|` for magnetic quantum number `m`.
    pub fn pure_m(spin: SpinQuantumNumber, m: f64) -> Result<Self> {
        let idx = spin
            .index_of_m(m)
            .ok_or_else(|| Error::InvalidParams(format!("m = {m} is not a level of spin {spin}")))?;
        Self::basis_state(spin, idx)
    }

    pub fn maximally_mixed(spin: SpinQuantumNumber) -> Self {
        let d = spin.dim();
        Self(Operator::identity(d, d).scale(1.0 / d as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    pub fn into_inner(self) -> Operator {
        self.0
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }
}

fn check_square(m: &Operator, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

/// Largest entry modulus.
pub fn max_abs(m: &Operator) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-norm of `A - A†`.
pub fn hermiticity_error(m: &Operator) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// `(A + A†)/2`.
pub fn hermitian_part(m: &Operator) -> Operator {
    (m + m.adjoint()).scale(0.5)
}

pub(crate) fn min_eigenvalue(m: &Operator) -> f64 {
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &Operator, b: &Operator) -> Complex64 {
    let d = a.nrows();
    let mut acc = Complex64::from(0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `Tr(op · rho)`.
pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<Complex64> {
    check_square(op, rho.dim())?;
    Ok(trace_product(op, rho.matrix()))
}

/// Magnitude and phase of `<K_+> = K_perp e^{-i phi}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransversePhase {
    pub k_perp: f64,
    /// `None` when `k_perp` is below [`EPS_PHASE`].
    pub phi: Option<f64>,
}

/// Phase convention `phi = -angle(<K_+>)`, reduced to `(-pi, pi]`.
pub fn phase_of(k_plus: Complex64) -> TransversePhase {
    let k_perp = k_plus.norm();
    let phi = (k_perp >= EPS_PHASE).then(|| {
        let p = -k_plus.arg();
        if p <= -PI {
            p + 2.0 * PI
        } else {
            p
        }
    });
    TransversePhase { k_perp, phi }
}

pub fn transverse_phase(rho: &DensityMatrix, ops: &SpinOperators) -> Result<TransversePhase> {
    Ok(phase_of(expectation(ops.k_plus(), rho)?))
}
