//! Hermitian eigendecomposition by cyclic Jacobi with complex rotations.
//!
//! Matrices here never exceed d^2 x d^2 for d <= 16, so a dependency-free
//! O(n^3)-per-sweep solver beats pulling in a LAPACK binding.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::cmatrix::{CMatrix, C64, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues (ascending) and a unitary whose columns are the matching
/// eigenvectors. The input must be hermitian; only the upper triangle and
/// the real part of the diagonal are read.
pub fn eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    a.check_square()?;
    let n = a.rows();
    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let target = scale * 1e-15 * (n as f64);

    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in p + 1..n {
                off += m.get(p, q).norm_sqr();
            }
        }
        let off = off.sqrt();
        if off <= target {
            return Ok(finish(m, v));
        }
        if sweep == MAX_SWEEPS - 1 {
            return Err(Error::EigenFailure { sweeps: MAX_SWEEPS, off });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                let abs = apq.norm();
                if abs <= scale * 1e-300 {
                    continue;
                }
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let phase = apq / abs; // e^{i arg(apq)}
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: col_p' = c*col_p - s*conj(phase)*col_q
                //          col_q' = s*phase*col_p + c*col_q
                let sp = phase * s;
                rotate_cols(&mut m, p, q, c, sp);
                rotate_rows(&mut m, p, q, c, sp);
                rotate_cols(&mut v, p, q, c, sp);
                // clamp the annihilated entry against rounding
                m.set(p, q, ZERO);
                m.set(q, p, ZERO);
            }
        }
    }
    unreachable!()
}

// A <- A J where J is the (p,q) rotation with J[p,p]=J[q,q]=c,
// J[p,q] = sp, J[q,p] = -conj(sp).
fn rotate_cols(m: &mut CMatrix, p: usize, q: usize, c: f64, sp: C64) {
    let n = m.rows();
    for i in 0..n {
        let mip = m.get(i, p);
        let miq = m.get(i, q);
        m.set(i, p, mip * c - miq * sp.conj());
        m.set(i, q, mip * sp + miq * c);
    }
}

// A <- J^dag A.
fn rotate_rows(m: &mut CMatrix, p: usize, q: usize, c: f64, sp: C64) {
    let n = m.cols();
    for j in 0..n {
        let mpj = m.get(p, j);
        let mqj = m.get(q, j);
        m.set(p, j, mpj * c - mqj * sp);
        m.set(q, j, mpj * sp.conj() + mqj * c);
    }
}

fn finish(m: CMatrix, v: CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).expect("finite eigenvalues"));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vecs.set(i, new_col, v.get(i, old_col));
        }
    }
    (sorted_vals, vecs)
}

/// Smallest eigenvalue of a hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> Result<f64> {
    let (vals, _) = eigh(a)?;
    Ok(vals.first().copied().unwrap_or(0.0))
}

/// Reassemble sum_k f(lambda_k) |v_k><v_k|.
pub fn map_spectrum(vals: &[f64], vecs: &CMatrix, mut f: impl FnMut(f64) -> C64) -> CMatrix {
    let n = vecs.rows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let flam = f(lam);
        if flam == ZERO {
            continue;
        }
        for i in 0..n {
            let vi = vecs.get(i, k);
            if vi == ZERO {
                continue;
            }
            for j in 0..n {
                out.add_to(i, j, flam * vi * vecs.get(j, k).conj());
            }
        }
    }
    out
}
