//! Small helpers over dense complex arrays.

use crate::{CMatrix, CVector};
use num_complex::Complex64 as C64;

/// Inner product `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Squared 2-norm `<v|v>` as a real number.
pub fn norm_sq(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// 2-norm of a vector.
pub fn norm(v: &CVector) -> f64 {
    norm_sq(v).sqrt()
}

/// Frobenius norm of a matrix.
pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate transpose.
pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Entrywise complex conjugate.
pub fn conj_mat(m: &CMatrix) -> CMatrix {
    m.mapv(|z| z.conj())
}

/// Entrywise complex conjugate of a vector.
pub fn conj_vec(v: &CVector) -> CVector {
    v.mapv(|z| z.conj())
}

pub fn is_finite_vec(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_finite_mat(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Quadratic form `<v|A|v>`.
pub fn quad_form(v: &CVector, a: &CMatrix) -> C64 {
    inner(v, &a.dot(v))
}

/// Complex identity matrix.
pub fn eye(n: usize) -> CMatrix {
    CMatrix::eye(n)
}
