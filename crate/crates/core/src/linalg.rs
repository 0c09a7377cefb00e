//! Small dense complex-matrix helpers shared by the modules.

use nalgebra::DMatrix;

use crate::C64;

pub type CMatrix = DMatrix<C64>;

/// Largest elementwise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest elementwise deviation of `m` from its conjugate transpose.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian part `(M + M^dagger) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `(M - M^dagger) / (2i)`, Hermitian; its eigenvalues are the decay (negative) or gain
/// (positive) rates of the generator.
pub fn anti_hermitian_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * C64::new(0.0, -0.5)
}

/// Eigenvalues of a general complex square matrix from its complex Schur form,
/// sorted by real part, then imaginary part.
pub fn complex_eigenvalues(m: &CMatrix) -> Vec<C64> {
    let schur = m.clone().schur();
    let (_, t) = schur.unpack();
    let mut eig: Vec<C64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    eig.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    eig
}

/// Max elementwise deviation of `W W^dagger` from the identity.
pub fn unitarity_defect(w: &CMatrix) -> f64 {
    let n = w.nrows();
    max_abs(&(w * w.adjoint() - CMatrix::identity(n, n)))
}
