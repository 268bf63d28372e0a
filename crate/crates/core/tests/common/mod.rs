//! Reference model written straight from the operator formulas, used as an
//! oracle for the library's Kronecker-product generator and SVD null space.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qgyro_core::liouvillian::ModelParams;

pub type M = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Basis ordered m = K, K-1, ..., -K.
pub struct RefOps {
    pub kx: M,
    pub ky: M,
    pub kz: M,
    pub kp: M,
    pub km: M,
}

pub fn ref_ops(two_k: u32) -> RefOps {
    let k = two_k as f64 / 2.0;
    let d = two_k as usize + 1;
    let m = |i: usize| k - i as f64;
    let kz = M::from_fn(d, d, |i, j| if i == j { c(m(i)) } else { c(0.0) });
    // <m+1|K_+|m> = sqrt(K(K+1) - m(m+1)); row i holds m(i) = m(j) + 1.
    let kp = M::from_fn(d, d, |i, j| {
        if j == i + 1 {
            c((k * (k + 1.0) - m(j) * (m(j) + 1.0)).sqrt())
        } else {
            c(0.0)
        }
    });
    let km = kp.adjoint();
    let kx = (&kp + &km).scale(0.5);
    let ky = (&kp - &km) * Complex64::new(0.0, -0.5);
    RefOps { kx, ky, kz, kp, km }
}

fn comm(a: &M, b: &M) -> M {
    a * b - b * a
}

fn acomm(a: &M, b: &M) -> M {
    a * b + b * a
}

pub fn ref_hamiltonian(p: &ModelParams, o: &RefOps) -> M {
    let e = Complex64::from_polar(1.0, -p.beta);
    let drive = (&o.kp * e - &o.km * e.conj()) * Complex64::new(0.0, -p.omega_d / 4.0);
    o.kz.scale(p.omega) + (&o.kz * &o.kz).scale(p.c_q) + drive
}

pub fn ref_rhs(rho: &M, p: &ModelParams, o: &RefOps) -> M {
    let h = ref_hamiltonian(p, o);
    let i = Complex64::new(0.0, 1.0);
    let k2 = &o.kx * &o.kx + &o.ky * &o.ky + &o.kz * &o.kz;
    let relax = &o.kx * rho * &o.kx + &o.ky * rho * &o.ky + &o.kz * rho * &o.kz - acomm(rho, &k2).scale(0.5);
    let dephase = (&o.kz * rho * &o.kz).scale(2.0) - acomm(rho, &(&o.kz * &o.kz));
    let pump = &o.kp * rho * &o.km - &o.km * rho * &o.kp + acomm(rho, &o.kz);
    -comm(&h, rho) * i + relax.scale(p.gamma1) + dephase.scale(p.gamma2) + pump.scale(p.gamma_p)
}

/// Generator assembled column by column from `ref_rhs` on matrix units.
pub fn ref_generator(p: &ModelParams, o: &RefOps) -> M {
    let d = o.kz.nrows();
    let mut l = M::zeros(d * d, d * d);
    for col in 0..d {
        for row in 0..d {
            let mut e = M::zeros(d, d);
            e[(row, col)] = c(1.0);
            let out = ref_rhs(&e, p, o);
            let j = col * d + row;
            for cc in 0..d {
                for rr in 0..d {
                    l[(cc * d + rr, j)] = out[(rr, cc)];
                }
            }
        }
    }
    l
}

/// Steady state from `L x = 0` with the first equation replaced by `Tr x = 1`.
pub fn ref_steady(p: &ModelParams, two_k: u32) -> M {
    let o = ref_ops(two_k);
    let d = o.kz.nrows();
    let mut l = ref_generator(p, &o);
    let mut b = DVector::zeros(d * d);
    for j in 0..d * d {
        l[(0, j)] = c(0.0);
    }
    for i in 0..d {
        l[(0, i * d + i)] = c(1.0);
    }
    b[0] = c(1.0);
    let x = l.lu().solve(&b).expect("nonsingular reference system");
    M::from_fn(d, d, |r, cc| x[cc * d + r])
}

/// `Tr(K_+ rho)` of the reference steady state.
pub fn ref_k_plus(p: &ModelParams, two_k: u32) -> Complex64 {
    let o = ref_ops(two_k);
    let rho = ref_steady(p, two_k);
    (&o.kp * rho).trace()
}

/// Root of `k_y` with `k_x > 0` by dense scan and bisection.
pub fn ref_root(p: &ModelParams, lo: f64, hi: f64, points: usize) -> Option<f64> {
    let ky = |w: f64| ref_k_plus(&p.with_omega(w), 3).im;
    let kx = |w: f64| ref_k_plus(&p.with_omega(w), 3).re;
    let step = (hi - lo) / (points - 1) as f64;
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = ky(a);
    for i in 1..points {
        let b = lo + step * i as f64;
        let fb = ky(b);
        if fa == 0.0 || fa.signum() != fb.signum() {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                let fm = ky(mid);
                if f0.signum() == fm.signum() && fm != 0.0 {
                    x0 = mid;
                    f0 = fm;
                } else {
                    x1 = mid;
                }
                if x1 - x0 < 1e-15 {
                    break;
                }
            }
            let r = 0.5 * (x0 + x1);
            if kx(r) > 0.0 {
                roots.push(r);
            }
        }
        a = b;
        fa = fb;
    }
    // Closest to zero: the branch continuous in C_Q from the symmetric root.
    roots.into_iter().min_by(|x, y| x.abs().total_cmp(&y.abs()))
}

/// Base point with the default pumping rate.
pub fn base() -> ModelParams {
    ModelParams::base()
}
