//! Operator and superoperator algebra: spectral decompositions, matrix
//! exponentials, thermal states, and channel diagnostics.
//!
//! Superoperators use the column-stacking convention throughout: the map
//! X -> L X R is represented by the matrix R^T (x) L acting on vec(X),
//! where vec stacks columns. Composition of maps is then plain matrix
//! multiplication.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::cmatrix::{CMatrix, C64};
use crate::eigen::{self, eigh};
use crate::error::{Error, Result};
use crate::tolerances;

/// Hermitian operator with its cached spectral decomposition.
#[derive(Debug, Clone)]
pub struct HermitianObservable {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    projectors: Vec<CMatrix>,
}

impl HermitianObservable {
    /// Decompose a hermitian matrix, merging eigenvalues that agree within
    /// `eig_tol` into a single projector. Pass `None` to use the default
    /// relative merge tolerance.
    pub fn spectral_decompose(a: &CMatrix, eig_tol: Option<f64>) -> Result<Self> {
        a.check_hermitian(tolerances::HERMITICITY_ABS)?;
        let (vals, vecs) = eigh(a)?;
        let radius = vals.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        let tol = eig_tol.unwrap_or(tolerances::EIG_MERGE_REL * radius.max(1e-300));

        let n = a.rows();
        let mut eigenvalues = Vec::new();
        let mut projectors: Vec<CMatrix> = Vec::new();
        let mut k = 0;
        while k < n {
            let mut hi = k + 1;
            while hi < n && (vals[hi] - vals[hi - 1]).abs() <= tol {
                hi += 1;
            }
            let cluster = &vals[k..hi];
            let mean = cluster.iter().sum::<f64>() / cluster.len() as f64;
            let mut proj = CMatrix::zeros(n, n);
            for col in k..hi {
                for i in 0..n {
                    let vi = vecs.get(i, col);
                    for j in 0..n {
                        proj.add_to(i, j, vi * vecs.get(j, col).conj());
                    }
                }
            }
            eigenvalues.push(mean);
            projectors.push(proj);
            k = hi;
        }
        Ok(Self { matrix: a.clone(), eigenvalues, projectors })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Distinct eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn projector(&self, k: usize) -> &CMatrix {
        &self.projectors[k]
    }

    /// Index of the eigenvalue closest to `value`, if it lies within `tol`.
    pub fn eigenvalue_index(&self, value: f64, tol: f64) -> Result<usize> {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (k, &ev) in self.eigenvalues.iter().enumerate() {
            let d = (ev - value).abs();
            if d < best_d {
                best_d = d;
                best = Some(k);
            }
        }
        match best {
            Some(k) if best_d <= tol => Ok(k),
            _ => Err(Error::EigenvalueNotInSpectrum { value }),
        }
    }

    /// sum_f f P(f); equals the original matrix up to merge tolerance.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (ev, p) in self.eigenvalues.iter().zip(self.projectors.iter()) {
            out.add_scaled(p, C64::new(*ev, 0.0));
        }
        out
    }
}

/// Density matrix; validated hermitian, positive semidefinite and unit
/// trace on construction.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix, tol: f64) -> Result<Self> {
        matrix.check_hermitian(tol)?;
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > tol {
            return Err(Error::NotUnitTrace { trace, tol });
        }
        let min_eig = eigen::min_eigenvalue(&matrix)?;
        if min_eig < -tol {
            return Err(Error::NotPositive { min_eig });
        }
        Ok(Self { matrix })
    }

    /// Skip validation; for states produced by the library itself.
    pub(crate) fn trusted(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)) }
    }

    pub fn pure(amplitudes: &[C64]) -> Self {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let m = CMatrix::outer(amplitudes, amplitudes).scale(C64::new(1.0 / norm_sq, 0.0));
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { matrix: self.matrix.kron(&other.matrix) }
    }
}

/// e^{-i H t} for hermitian H, through the eigendecomposition.
pub fn unitary_at(h: &CMatrix, t: f64) -> Result<CMatrix> {
    h.check_hermitian(tolerances::HERMITICITY_ABS)?;
    let (vals, vecs) = eigh(h)?;
    Ok(eigen::map_spectrum(&vals, &vecs, |lam| (-C64::i() * (lam * t)).exp()))
}

/// Gibbs state e^{-beta H} / tr e^{-beta H}.
pub fn thermal_state(h: &CMatrix, beta: f64) -> Result<DensityMatrix> {
    h.check_hermitian(tolerances::HERMITICITY_ABS)?;
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "beta must be finite and nonnegative, got {beta}"
        )));
    }
    let (vals, vecs) = eigh(h)?;
    // shift by the ground energy so the exponentials stay bounded
    let e0 = vals.first().copied().unwrap_or(0.0);
    let z: f64 = vals.iter().map(|&e| (-beta * (e - e0)).exp()).sum();
    let rho = eigen::map_spectrum(&vals, &vecs, |e| C64::new((-beta * (e - e0)).exp() / z, 0.0));
    Ok(DensityMatrix::trusted(rho))
}

/// Linear map on operators, stored as a dim^2 x dim^2 matrix in the
/// column-stacking convention.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    matrix: CMatrix,
}

impl SuperOperator {
    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: CMatrix::identity(dim * dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, matrix: CMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.rows() != dim * dim || matrix.cols() != dim * dim {
            return Err(Error::DimensionMismatch(alloc::format!(
                "superoperator for dim {dim} needs a {0}x{0} matrix, got {1}x{2}",
                dim * dim,
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { dim, matrix })
    }

    /// The map X -> L X R, i.e. R^T (x) L.
    pub fn from_pair(l: &CMatrix, r: &CMatrix) -> Result<Self> {
        l.check_square()?;
        r.check_square()?;
        if l.rows() != r.rows() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "left factor is {0}x{0}, right factor is {1}x{1}",
                l.rows(),
                r.rows()
            )));
        }
        Ok(Self { dim: l.rows(), matrix: r.transpose().kron(l) })
    }

    /// Left multiplication L X.
    pub fn left_mul(l: &CMatrix) -> Result<Self> {
        let id = CMatrix::identity(l.rows());
        Self::from_pair(l, &id)
    }

    /// Right multiplication X R.
    pub fn right_mul(r: &CMatrix) -> Result<Self> {
        let id = CMatrix::identity(r.rows());
        Self::from_pair(&id, r)
    }

    /// Commutator map [A, X].
    pub fn commutator(a: &CMatrix) -> Result<Self> {
        Ok(&Self::left_mul(a)? - &Self::right_mul(a)?)
    }

    /// Anticommutator map {A, X}.
    pub fn anticommutator(a: &CMatrix) -> Result<Self> {
        Ok(&Self::left_mul(a)? + &Self::right_mul(a)?)
    }

    /// Unitary conjugation X -> U X U^dag.
    pub fn conjugation(u: &CMatrix) -> Result<Self> {
        Self::from_pair(u, &u.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        debug_assert_eq!(x.rows(), self.dim);
        debug_assert_eq!(x.cols(), self.dim);
        let v = vectorize(x);
        let w = self.matrix.mul_vec(&v);
        unvectorize(&w, self.dim)
    }

    /// Composition self after other.
    pub fn compose(&self, other: &SuperOperator) -> SuperOperator {
        debug_assert_eq!(self.dim, other.dim);
        SuperOperator { dim: self.dim, matrix: self.matrix.matmul(&other.matrix) }
    }

    pub fn scale(&self, s: C64) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: self.matrix.scale(s) }
    }

    /// e^{t S} by scaling and squaring.
    pub fn exp(&self, t: f64) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: expm(&self.matrix.scale(C64::new(t, 0.0))) }
    }

    /// Choi matrix sum_{ij} |i><j| (x) S(|i><j|).
    pub fn choi(&self) -> CMatrix {
        let d = self.dim;
        let mut j = CMatrix::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                // vec(|a><b|) is the unit vector at column b, row a
                let col = b * d + a;
                for m in 0..d {
                    for n in 0..d {
                        // S(|a><b|)[m,n] = matrix[n*d + m, col]
                        j.set(a * d + m, b * d + n, self.matrix.get(n * d + m, col));
                    }
                }
            }
        }
        j
    }

    /// Max deviation of tr(S X) from tr(X) over a basis, i.e. the defect of
    /// S^dag acting on vec(identity).
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.dim;
        let vid = vectorize(&CMatrix::identity(d));
        let img = self.matrix.adjoint().mul_vec(&vid);
        img.iter()
            .zip(vid.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Same as [`trace_preservation_defect`] but against zero: generators of
    /// trace-preserving semigroups annihilate the trace.
    pub fn trace_annihilation_defect(&self) -> f64 {
        let d = self.dim;
        let vid = vectorize(&CMatrix::identity(d));
        let img = self.matrix.adjoint().mul_vec(&vid);
        img.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Complete positivity and trace preservation within `tol`, via the
    /// Choi matrix.
    pub fn is_cptp(&self, tol: f64) -> Result<bool> {
        let choi = self.choi();
        if choi.hermiticity_defect() > tol.sqrt() {
            return Ok(false);
        }
        // symmetrize before the eigensolve; CP only depends on the
        // hermitian part when the defect is already small
        let sym = (&choi + &choi.adjoint()).scale(C64::new(0.5, 0.0));
        let min_eig = eigen::min_eigenvalue(&sym)?;
        Ok(min_eig >= -tol && self.trace_preservation_defect() <= tol)
    }
}

impl core::ops::Add for &SuperOperator {
    type Output = SuperOperator;
    fn add(self, rhs: &SuperOperator) -> SuperOperator {
        assert_eq!(self.dim, rhs.dim);
        SuperOperator { dim: self.dim, matrix: &self.matrix + &rhs.matrix }
    }
}

impl core::ops::Sub for &SuperOperator {
    type Output = SuperOperator;
    fn sub(self, rhs: &SuperOperator) -> SuperOperator {
        assert_eq!(self.dim, rhs.dim);
        SuperOperator { dim: self.dim, matrix: &self.matrix - &rhs.matrix }
    }
}

/// Column-stacked vec(X).
pub fn vectorize(x: &CMatrix) -> Vec<C64> {
    let d = x.rows();
    let mut v = Vec::with_capacity(d * x.cols());
    for c in 0..x.cols() {
        for r in 0..d {
            v.push(x.get(r, c));
        }
    }
    v
}

pub fn unvectorize(v: &[C64], dim: usize) -> CMatrix {
    let mut x = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            x.set(r, c, v[c * dim + r]);
        }
    }
    x
}

/// Matrix exponential: scaling and squaring with the degree-13 Pade
/// approximant (Higham 2005). Robust for the modest, well-scaled matrices
/// that occur here.
pub fn expm(a: &CMatrix) -> CMatrix {
    const THETA13: f64 = 5.371_920_351_148_152;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.rows();
    let norm = a.norm_one();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(C64::new(0.5_f64.powi(s), 0.0));
    let id = CMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    let mut w1 = a6.scale(C64::new(B[13], 0.0));
    w1.add_scaled(&a4, C64::new(B[11], 0.0));
    w1.add_scaled(&a2, C64::new(B[9], 0.0));
    let mut w2 = a6.scale(C64::new(B[7], 0.0));
    w2.add_scaled(&a4, C64::new(B[5], 0.0));
    w2.add_scaled(&a2, C64::new(B[3], 0.0));
    w2.add_scaled(&id, C64::new(B[1], 0.0));
    let u = a.matmul(&(&a6.matmul(&w1) + &w2));

    let mut z1 = a6.scale(C64::new(B[12], 0.0));
    z1.add_scaled(&a4, C64::new(B[10], 0.0));
    z1.add_scaled(&a2, C64::new(B[8], 0.0));
    let mut v = a6.matmul(&z1);
    v.add_scaled(&a6, C64::new(B[6], 0.0));
    v.add_scaled(&a4, C64::new(B[4], 0.0));
    v.add_scaled(&a2, C64::new(B[2], 0.0));
    v.add_scaled(&id, C64::new(B[0], 0.0));

    let num = &v + &u;
    let den = &v - &u;
    let mut r = den.solve(&num).expect("Pade denominator is nonsingular");
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmatrix::{mats, ONE};
    use rand::{Rng, SeedableRng};

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix {
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            a.set(i, i, C64::new(rng.random::<f64>() * 2.0 - 1.0, 0.0));
            for j in i + 1..n {
                let z = C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
                a.set(i, j, z);
                a.set(j, i, z.conj());
            }
        }
        a
    }

    #[test]
    fn spectral_identity_single_projector() {
        let obs = HermitianObservable::spectral_decompose(&CMatrix::identity(2), None).unwrap();
        assert_eq!(obs.eigenvalues().len(), 1);
        assert!((obs.eigenvalues()[0] - 1.0).abs() < 1e-14);
        assert!((obs.projector(0) - &CMatrix::identity(2)).max_abs() < 1e-13);
    }

    #[test]
    fn spectral_pauli_z() {
        let obs = HermitianObservable::spectral_decompose(&mats::pauli_z(), None).unwrap();
        assert_eq!(obs.eigenvalues(), &[-1.0, 1.0]);
        let p_plus = obs.projector(1);
        assert!((p_plus.get(0, 0) - ONE).norm() < 1e-14);
        assert!(p_plus.get(1, 1).norm() < 1e-14);
    }

    #[test]
    fn spectral_reconstruction_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(4, &mut rng);
        let obs = HermitianObservable::spectral_decompose(&a, None).unwrap();
        assert!((&obs.reconstruct() - &a).max_abs() < 1e-12);
        // orthogonality and completeness
        let mut sum = CMatrix::zeros(4, 4);
        for (i, p) in obs.projectors().iter().enumerate() {
            sum = &sum + p;
            for (j, q) in obs.projectors().iter().enumerate() {
                let prod = p.matmul(q);
                if i == j {
                    assert!((&prod - p).max_abs() < 1e-11);
                } else {
                    assert!(prod.max_abs() < 1e-11);
                }
            }
        }
        assert!((&sum - &CMatrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut a = CMatrix::identity(2);
        a.set(0, 1, C64::new(0.5, 0.0));
        assert!(matches!(
            HermitianObservable::spectral_decompose(&a, None),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn unitary_basics() {
        let h = CMatrix::diag_real(&[0.0, 2.5]);
        let u0 = unitary_at(&h, 0.0).unwrap();
        assert!((&u0 - &CMatrix::identity(2)).max_abs() < 1e-14);
        let t = 0.7;
        let u = unitary_at(&h, t).unwrap();
        assert!((u.get(0, 0) - ONE).norm() < 1e-14);
        assert!((u.get(1, 1) - (-C64::i() * 2.5 * t).exp()).norm() < 1e-14);
    }

    #[test]
    fn unitary_group_law() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(6, &mut rng);
        let (t1, t2) = (0.3, 1.1);
        let lhs = unitary_at(&h, t1).unwrap().matmul(&unitary_at(&h, t2).unwrap());
        let rhs = unitary_at(&h, t1 + t2).unwrap();
        assert!((&lhs - &rhs).max_abs() < 1e-12);
        let u = unitary_at(&h, t1).unwrap();
        assert!((&u.adjoint().matmul(&u) - &CMatrix::identity(6)).max_abs() < 1e-12);
    }

    #[test]
    fn thermal_limits() {
        let flat = thermal_state(&CMatrix::zeros(2, 2), 3.0).unwrap();
        assert!((flat.matrix() - &CMatrix::identity(2).scale(C64::new(0.5, 0.0))).max_abs() < 1e-14);

        let h = CMatrix::diag_real(&[0.0, 1.0]);
        let beta0 = thermal_state(&h, 0.0).unwrap();
        assert!((beta0.matrix().get(0, 0).re - 0.5).abs() < 1e-14);

        let cold = thermal_state(&h, 50.0).unwrap();
        let ground = CMatrix::diag_real(&[1.0, 0.0]);
        assert!((cold.matrix() - &ground).max_abs() < 1e-8);
    }

    #[test]
    fn superop_pair_and_composition() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let l1 = random_hermitian(3, &mut rng);
        let r1 = random_hermitian(3, &mut rng);
        let l2 = random_hermitian(3, &mut rng);
        let r2 = random_hermitian(3, &mut rng);
        let x = random_hermitian(3, &mut rng);

        let s1 = SuperOperator::from_pair(&l1, &r1).unwrap();
        assert!((&s1.apply(&x) - &l1.matmul(&x).matmul(&r1)).max_abs() < 1e-12);

        // (L1 . R1)(L2 . R2) = (L1 L2) . (R2 R1)
        let s2 = SuperOperator::from_pair(&l2, &r2).unwrap();
        let comp = s1.compose(&s2);
        let direct =
            SuperOperator::from_pair(&l1.matmul(&l2), &r2.matmul(&r1)).unwrap();
        assert!((comp.matrix() - direct.matrix()).max_abs() < 1e-12);

        let idsup = SuperOperator::from_pair(&CMatrix::identity(3), &CMatrix::identity(3)).unwrap();
        assert_eq!(idsup, SuperOperator::identity(3));
    }

    #[test]
    fn commutator_superop_matches_direct() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let v = random_hermitian(4, &mut rng);
        let x = random_hermitian(4, &mut rng);
        let s = SuperOperator::commutator(&v).unwrap();
        assert!((&s.apply(&x) - &v.commutator(&x)).max_abs() < 1e-12);
    }

    #[test]
    fn expm_diagonal_and_group_law() {
        let s = SuperOperator::from_matrix(1, CMatrix::diag_real(&[-0.37])).unwrap();
        let e = s.exp(2.0);
        assert!((e.matrix().get(0, 0).re - (-0.74_f64).exp()).abs() < 1e-13);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let g = random_hermitian(3, &mut rng).scale(C64::new(0.0, -1.0));
        let m1 = expm(&g.scale(C64::new(0.4, 0.0)));
        let m2 = expm(&g.scale(C64::new(1.3, 0.0)));
        let m12 = expm(&g.scale(C64::new(1.7, 0.0)));
        assert!((&m1.matmul(&m2) - &m12).max_abs() < 1e-11);
    }

    #[test]
    fn exp_zero_is_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let g = random_hermitian(4, &mut rng);
        let s = SuperOperator::from_matrix(2, g).unwrap();
        let e = s.exp(0.0);
        assert!((e.matrix() - &CMatrix::identity(4)).max_abs() < 1e-14);
    }

    #[test]
    fn unitary_conjugation_is_cptp() {
        let h = mats::pauli_x().scale(C64::new(0.9, 0.0));
        let u = unitary_at(&h, 1.0).unwrap();
        let s = SuperOperator::conjugation(&u).unwrap();
        assert!(s.is_cptp(1e-9).unwrap());
        assert!(s.trace_preservation_defect() < 1e-12);
    }

    #[test]
    fn transpose_map_is_not_cp() {
        // the transpose map is the canonical positive-but-not-CP example
        let d = 2;
        let mut m = CMatrix::zeros(4, 4);
        // vec index (c*d + r) -> transpose sends X[r,c] to X[c,r]
        for r in 0..d {
            for c in 0..d {
                m.set(r * d + c, c * d + r, ONE);
            }
        }
        let s = SuperOperator::from_matrix(2, m).unwrap();
        assert!(!s.is_cptp(1e-9).unwrap());
    }
}
