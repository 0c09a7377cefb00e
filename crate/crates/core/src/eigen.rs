//! Cyclic Jacobi eigenvalue solver for dense Hermitian matrices.
//!
//! Used as the brute-force oracle against the analytic Bloch spectrum, so it
//! deliberately shares no code with [`crate::ring`].

use crate::linalg::{hermitian_defect, max_abs, CMatrix};
use crate::{Error, Result, C64};

pub const MAX_DIMENSION: usize = 2048;
const MAX_SWEEPS: usize = 100;
const RELATIVE_TOL: f64 = 1e-12;

/// All eigenvalues of a Hermitian matrix, ascending.
///
/// Each rotation first removes the phase of the pivot element with a diagonal
/// unitary, then applies a real Jacobi rotation to the resulting real
/// symmetric 2x2 block. Sweeps continue until the off-diagonal Frobenius norm
/// falls below `1e-12` times the input Frobenius norm.
pub fn dense_hermitian_eigenvalues(matrix: &CMatrix) -> Result<Vec<f64>> {
    if !matrix.is_square() {
        return Err(Error::Validation(format!(
            "matrix must be square, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let n = matrix.nrows();
    if n > MAX_DIMENSION {
        return Err(Error::Validation(format!(
            "dimension {n} exceeds the supported maximum {MAX_DIMENSION}"
        )));
    }
    let scale = max_abs(matrix).max(1.0);
    let defect = hermitian_defect(matrix);
    if defect > 1e-12 * scale {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (max |A - A^dagger| = {defect:e})"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    // Row-major working copy, symmetrized so the diagonal is exactly real.
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = if i == j {
                C64::new(matrix[(i, i)].re, 0.0)
            } else {
                (matrix[(i, j)] + matrix[(j, i)].conj()) * 0.5
            };
        }
    }

    let input_norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = RELATIVE_TOL * input_norm;

    let off_norm = |a: &[C64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi iteration did not converge after {MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, n, p, q);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eig)
}

/// Annihilate `a[p][q]` (and `a[q][p]`) by a unitary similarity transform.
fn rotate(a: &mut [C64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    // Skip rotations that cannot change the diagonal in floating point.
    if r < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[p * n + q] = C64::new(0.0, 0.0);
        a[q * n + p] = C64::new(0.0, 0.0);
        return;
    }

    // Phase removal: scale column q by e^{-i phi} and row q by e^{i phi},
    // which makes a[p][q] = r real.
    let phase = apq / r;
    let phase_c = phase.conj();
    for k in 0..n {
        a[k * n + q] *= phase_c;
    }
    for k in 0..n {
        a[q * n + k] *= phase;
    }

    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let new_kp = akp * c - akq * s;
        let new_kq = akp * s + akq * c;
        a[k * n + p] = new_kp;
        a[k * n + q] = new_kq;
        a[p * n + k] = new_kp.conj();
        a[q * n + k] = new_kq.conj();
    }
    a[p * n + p] = C64::new(app - t * r, 0.0);
    a[q * n + q] = C64::new(aqq + t * r, 0.0);
    a[p * n + q] = C64::new(0.0, 0.0);
    a[q * n + p] = C64::new(0.0, 0.0);
}
