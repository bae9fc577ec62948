//! Independent reference computations shared by the integration tests.
//!
//! Nothing here goes through the eigenframe closed forms: operators are
//! solved as dense linear systems on vectorised matrices.
#![allow(dead_code)]

use gaussinv::linalg::{self, CMatrix, Matrix, Vector};
use num_complex::Complex64;
use rand::Rng;

/// Solve `X P + P X = Y` through `(I ⊗ P + Pᵀ ⊗ I) vec X = vec Y`.
pub fn solve_anticommutator(p: &Matrix, y: &Matrix) -> Matrix {
    let d = p.nrows();
    let mut op = Matrix::zeros(d * d, d * d);
    // column-major vec: index (i, j) -> i + d*j
    for i in 0..d {
        for j in 0..d {
            let row = i + d * j;
            for k in 0..d {
                // (X P)_ij = Σ_k X_ik P_kj
                op[(row, i + d * k)] += p[(k, j)];
                // (P X)_ij = Σ_k P_ik X_kj
                op[(row, k + d * j)] += p[(i, k)];
            }
        }
    }
    let rhs = Vector::from_column_slice(y.as_slice());
    let x = op.lu().solve(&rhs).expect("anticommutator operator is invertible");
    Matrix::from_column_slice(d, d, x.as_slice())
}

fn inv(m: &Matrix) -> Matrix {
    m.clone().try_inverse().expect("invertible")
}

/// `J` from `{J, R⁻²} = [Ṙ, R⁻¹] + [R, R⁻²]_Ṙ`.
pub fn j_by_solve(r: &Matrix, r_dot: &Matrix) -> Matrix {
    let ri = inv(r);
    let ri2 = &ri * &ri;
    let rhs = (r_dot * &ri - &ri * r_dot) + (r * r_dot * &ri2 - &ri2 * r_dot * r);
    solve_anticommutator(&ri2, &rhs)
}

/// `M` from `{R², M} = B`, with `B` assembled here from the matrix form of `A`.
/// Returns `(M, ‖Im B‖/‖B‖)`.
pub fn m_by_solve(r: &Matrix, r_dot: &Matrix, r_ddot: &Matrix) -> (Matrix, f64) {
    let j = j_by_solve(r, r_dot);
    let ri = inv(r);
    let re = (&ri * r_dot - r_dot * &ri) * 0.5 + &ri * &j * &ri * 0.5;
    let im = &ri * &ri;
    let a = CMatrix::from_fn(r.nrows(), r.ncols(), |i, k| Complex64::new(re[(i, k)], im[(i, k)]));
    let rc = linalg::to_complex(r);
    let rd = linalg::to_complex(r_dot);
    let two = Complex64::new(2.0, 0.0);
    // [x, y]_z = x z y − y z x
    let gc = &rd * &a * &rc - &rc * &a * &rd;
    let b = gc * two - &rc * &a * &a * &rc * two - linalg::to_complex(&(r_ddot * r + r * r_ddot));
    let b_re = b.map(|z| z.re);
    let b_im = b.map(|z| z.im);
    let m = solve_anticommutator(&(r * r), &b_re);
    (m, b_im.norm() / b.norm())
}

pub fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    g.qr().q()
}

pub fn random_spd<R: Rng>(rng: &mut R, d: usize, lo: f64, hi: f64) -> Matrix {
    let q = random_orthogonal(rng, d);
    let lam = Vector::from_fn(d, |_, _| rng.gen_range(lo..hi));
    &q * Matrix::from_diagonal(&lam) * q.transpose()
}

pub fn random_symmetric<R: Rng>(rng: &mut R, d: usize, scale: f64) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.gen_range(-scale..scale));
    (&g + g.transpose()) * 0.5
}

/// Coefficients of `r̂², p̂², r̂p̂, r̂, p̂, 1` in the one-dimensional
/// Ermakov-Lewis invariant
/// `(R(p − mL̇) − mṘ(r − L))²/2m + m(r − L)²/2R²`.
pub fn ermakov_lewis_coefficients(r: f64, rd: f64, l: f64, ld: f64, m: f64) -> [f64; 6] {
    [
        0.5 * m * (rd * rd + 1.0 / (r * r)),
        r * r / (2.0 * m),
        -r * rd,
        m * r * rd * ld - m * rd * rd * l - m * l / (r * r),
        -r * r * ld + r * rd * l,
        0.5 * m * (r * ld - rd * l).powi(2) + 0.5 * m * l * l / (r * r),
    ]
}

pub fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
