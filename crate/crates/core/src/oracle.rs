//! Definition-level computation of multi-time correlation functions and
//! bi-probability tables on a finite-dimensional closed system, plus the
//! moment/cumulant machinery over ordered partitions. This module is the
//! ground truth that every approximation in the crate is tested against.

use alloc::format;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::cmatrix::{CMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::opalg::{unitary_at, DensityMatrix, HermitianObservable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// A query for one MTC value: nondecreasing times, one hermitian observable
/// and one branch label per time.
#[derive(Debug, Clone)]
pub struct MTCQuery {
    times: Vec<f64>,
    observables: Vec<HermitianObservable>,
    branches: Vec<Branch>,
}

impl MTCQuery {
    pub fn new(
        times: Vec<f64>,
        observables: Vec<HermitianObservable>,
        branches: Vec<Branch>,
    ) -> Result<Self> {
        if times.len() != observables.len() || times.len() != branches.len() {
            return Err(Error::InvalidQuery(format!(
                "lengths differ: {} times, {} observables, {} branches",
                times.len(),
                observables.len(),
                branches.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidQuery("empty query".into()));
        }
        if times[0] < 0.0 {
            return Err(Error::InvalidQuery(format!("t1 = {} must be >= 0", times[0])));
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidQuery("times must be sorted ascending".into()));
        }
        let d = observables[0].dim();
        if observables.iter().any(|o| o.dim() != d) {
            return Err(Error::InvalidQuery("observables have mixed dimensions".into()));
        }
        Ok(Self { times, observables, branches })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn observables(&self) -> &[HermitianObservable] {
        &self.observables
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.observables[0].dim()
    }
}

/// Heisenberg picture: e^{i H t} F e^{-i H t}.
pub fn heisenberg(f: &CMatrix, h: &CMatrix, t: f64) -> Result<CMatrix> {
    f.check_same_shape(h)?;
    let u = unitary_at(h, -t)?; // e^{+iHt}
    Ok(u.matmul(f).matmul(&u.adjoint()))
}

/// Exact MTC: tr[ T{prod_{j in I+} F_j(t_j)} rho T{prod_{k in I-} F_k(t_k)}^dag ],
/// with later times leftmost inside each time-ordered product and ties kept
/// in list order.
pub fn mtc_exact(q: &MTCQuery, h: &CMatrix, rho: &DensityMatrix) -> Result<C64> {
    let d = q.dim();
    if h.rows() != d || rho.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "query dim {d}, H dim {}, rho dim {}",
            h.rows(),
            rho.dim()
        )));
    }
    let mut plus = CMatrix::identity(d);
    let mut minus = CMatrix::identity(d);
    // slot 0 is earliest; walk from latest down so later factors end up leftmost
    for j in (0..q.len()).rev() {
        let fj = heisenberg(q.observables[j].matrix(), h, q.times[j])?;
        match q.branches[j] {
            Branch::Plus => plus = plus.matmul(&fj),
            Branch::Minus => minus = minus.matmul(&fj),
        }
    }
    Ok(plus.matmul(rho.matrix()).trace_mul(&minus.adjoint()))
}

/// Complex-valued table over pairs of eigenvalue tuples for a timed
/// observable sequence. Slot 0 is the earliest time; an entry is addressed
/// by one eigenvalue index per slot on each branch.
#[derive(Debug, Clone)]
pub struct BiProbTable {
    times: Vec<f64>,
    spectra: Vec<Vec<f64>>,
    entries: Vec<C64>,
}

impl BiProbTable {
    pub(crate) fn new_zeroed(times: Vec<f64>, spectra: Vec<Vec<f64>>) -> Self {
        let size: usize = spectra.iter().map(|s| s.len()).product();
        Self { times, spectra, entries: alloc::vec![ZERO; size * size] }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// Eigenvalues per slot, earliest slot first.
    pub fn spectra(&self) -> &[Vec<f64>] {
        &self.spectra
    }

    /// Number of eigenvalue tuples per branch.
    pub fn branch_size(&self) -> usize {
        self.spectra.iter().map(|s| s.len()).product()
    }

    fn flat(&self, idx: &[usize]) -> usize {
        let mut acc = 0;
        let mut stride = 1;
        for (j, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.spectra[j].len());
            acc += i * stride;
            stride *= self.spectra[j].len();
        }
        acc
    }

    /// Decompose a flat branch index into per-slot eigenvalue indices.
    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.spectra.len());
        for s in &self.spectra {
            idx.push(flat % s.len());
            flat /= s.len();
        }
        idx
    }

    pub fn get(&self, plus: &[usize], minus: &[usize]) -> C64 {
        self.entries[self.flat(plus) * self.branch_size() + self.flat(minus)]
    }

    pub(crate) fn set_flat(&mut self, plus_flat: usize, minus_flat: usize, v: C64) {
        let n = self.branch_size();
        self.entries[plus_flat * n + minus_flat] = v;
    }

    pub(crate) fn add_flat(&mut self, plus_flat: usize, minus_flat: usize, v: C64) {
        let n = self.branch_size();
        self.entries[plus_flat * n + minus_flat] += v;
    }

    pub fn get_flat(&self, plus_flat: usize, minus_flat: usize) -> C64 {
        self.entries[plus_flat * self.branch_size() + minus_flat]
    }

    /// Sum of all entries; 1 for a proper table, 0 for a correction table.
    pub fn total(&self) -> C64 {
        self.entries.iter().sum()
    }

    /// Largest violation of entry(f+, f-)^* = entry(f-, f+).
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.branch_size();
        let mut worst = 0.0_f64;
        for p in 0..n {
            for m in p..n {
                let d = (self.get_flat(p, m).conj() - self.get_flat(m, p)).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Moment with the given branch assignment: weights each entry by the
    /// product of eigenvalues read off the assigned branches.
    pub fn moment(&self, branches: &[Branch]) -> C64 {
        assert_eq!(branches.len(), self.spectra.len());
        let n = self.branch_size();
        let mut acc = ZERO;
        for p in 0..n {
            let pi = self.unflat(p);
            for m in 0..n {
                let mi = self.unflat(m);
                let mut w = 1.0;
                for (j, br) in branches.iter().enumerate() {
                    let i = match br {
                        Branch::Plus => pi[j],
                        Branch::Minus => mi[j],
                    };
                    w *= self.spectra[j][i];
                }
                acc += self.get_flat(p, m) * w;
            }
        }
        acc
    }

    /// Sum out the latest time slot on both branches independently,
    /// producing the table for the first n-1 times.
    pub fn marginalize_latest(&self) -> BiProbTable {
        let n_slots = self.spectra.len();
        assert!(n_slots >= 1);
        let last = n_slots - 1;
        let k_last = self.spectra[last].len();
        let mut out = BiProbTable::new_zeroed(
            self.times[..last].to_vec(),
            self.spectra[..last].to_vec(),
        );
        let inner = out.branch_size();
        for p_in in 0..inner {
            for m_in in 0..inner {
                let mut acc = ZERO;
                for fp in 0..k_last {
                    for fm in 0..k_last {
                        let p = p_in + fp * inner;
                        let m = m_in + fm * inner;
                        acc += self.get_flat(p, m);
                    }
                }
                out.set_flat(p_in, m_in, acc);
            }
        }
        out
    }

    /// Entrywise largest absolute difference against another table of the
    /// same shape.
    pub fn max_abs_diff(&self, other: &BiProbTable) -> f64 {
        assert_eq!(self.entries.len(), other.entries.len());
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise accumulate another table of the same shape, e.g. a
    /// perturbative correction onto its zeroth order.
    pub fn add_table(&mut self, other: &BiProbTable) {
        assert_eq!(self.entries.len(), other.entries.len());
        for (a, b) in self.entries.iter_mut().zip(other.entries.iter()) {
            *a += b;
        }
    }
}

/// Exact bi-probability table: entry(f+, f-) =
/// tr[ P_{t_n}(f_n^+) ... P_{t_1}(f_1^+) rho P_{t_1}(f_1^-) ... P_{t_n}(f_n^-) ].
pub fn biprob_exact(
    times: &[f64],
    observables: &[HermitianObservable],
    h: &CMatrix,
    rho: &DensityMatrix,
) -> Result<BiProbTable> {
    if times.len() != observables.len() || times.is_empty() {
        return Err(Error::InvalidQuery(format!(
            "{} times vs {} observables",
            times.len(),
            observables.len()
        )));
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidQuery("times must be sorted ascending".into()));
    }
    let d = observables[0].dim();
    if h.rows() != d || rho.dim() != d || observables.iter().any(|o| o.dim() != d) {
        return Err(Error::DimensionMismatch("observable/H/rho dimensions differ".into()));
    }

    // Heisenberg-rotated projectors per slot
    let mut rotated: Vec<Vec<CMatrix>> = Vec::with_capacity(times.len());
    for (t, obs) in times.iter().zip(observables.iter()) {
        let u = unitary_at(h, -*t)?; // e^{+iHt}
        let udag = u.adjoint();
        rotated.push(
            obs.projectors()
                .iter()
                .map(|p| u.matmul(p).matmul(&udag))
                .collect(),
        );
    }

    let spectra: Vec<Vec<f64>> = observables.iter().map(|o| o.eigenvalues().to_vec()).collect();
    let mut table = BiProbTable::new_zeroed(times.to_vec(), spectra);
    let size = table.branch_size();

    // All ordered products A(f) = P_{t_n}(f_n) ... P_{t_1}(f_1), built by
    // extending products of later slots with earlier ones on the right.
    let mut products: Vec<CMatrix> = alloc::vec![CMatrix::identity(d); size];
    // iterate slots from latest to earliest so the later factor sits leftmost
    let n_slots = times.len();
    let mut built: Vec<CMatrix> = alloc::vec![CMatrix::identity(d)];
    let mut built_strides = 1usize;
    for j in (0..n_slots).rev() {
        let k = rotated[j].len();
        let mut next = Vec::with_capacity(built.len() * k);
        for f in 0..k {
            for b in &built {
                next.push(b.matmul(&rotated[j][f]));
            }
        }
        built = next;
        built_strides *= k;
    }
    debug_assert_eq!(built_strides, size);
    // `built` is indexed with the latest slot varying slowest and, within,
    // earlier slots faster -- matching flat() where slot 0 has stride 1
    // requires a reshuffle: flat() uses stride_j = prod_{l<j} k_l, while the
    // loop above produced index = sum_j f_j * prod_{l>j} k_l. Rebuild into
    // canonical order.
    {
        let dims: Vec<usize> = table.spectra().iter().map(|s| s.len()).collect();
        for (loop_idx, m) in built.into_iter().enumerate() {
            // decode loop index: slot n-1 slowest ... slot 0 fastest?
            // Construction: for j from n-1 down to 0, new index = f_j * (old len) + old.
            // After the full loop, index = f_0 * (k_{n-1} ... k_1) + ... hmm --
            // decode by reversing the construction instead.
            let mut rem = loop_idx;
            let mut fidx = alloc::vec![0usize; n_slots];
            for j in 0..n_slots {
                // last extension was j = 0, done over f as the slowest digit
                let tail: usize = dims[j + 1..].iter().product();
                fidx[j] = rem / tail;
                rem %= tail;
            }
            let canon = table.flat(&fidx);
            products[canon] = m;
        }
    }

    // entry = tr[A(f+) rho A(f-)^dag]
    let mut a_rho: Vec<CMatrix> = Vec::with_capacity(size);
    for a in &products {
        a_rho.push(a.matmul(rho.matrix()));
    }
    for p in 0..size {
        for m in 0..size {
            // tr[X B^dag] = sum_ij X_ij conj(B_ij)
            let x = &a_rho[p];
            let b = &products[m];
            let mut acc = ZERO;
            for i in 0..d {
                for jj in 0..d {
                    acc += x.get(i, jj) * b.get(i, jj).conj();
                }
            }
            table.set_flat(p, m, acc);
        }
    }
    Ok(table)
}

/// Set partitions of positions 0..n; blocks list their members in ascending
/// position order.
fn partitions_of_positions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut current: Vec<Vec<usize>> = Vec::new();
    fn recurse(pos: usize, n: usize, current: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if pos == n {
            out.push(current.clone());
            return;
        }
        for b in 0..current.len() {
            current[b].push(pos);
            recurse(pos + 1, n, current, out);
            current[b].pop();
        }
        current.push(alloc::vec![pos]);
        recurse(pos + 1, n, current, out);
        current.pop();
    }
    recurse(0, n, &mut current, &mut out);
    out
}

/// Partitions of the descending index set {n, ..., 1} into blocks that keep
/// the descending order of their members. `n = 0` yields the single empty
/// partition.
pub fn ordered_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    partitions_of_positions(n)
        .into_iter()
        .map(|p| {
            p.into_iter()
                .map(|block| block.into_iter().map(|pos| n - pos).collect())
                .collect()
        })
        .collect()
}

/// Joint cumulant of the variables selected by `seq`, defined through the
/// recursive inversion of the moment-partition identity. `moment` must
/// accept any subsequence of `seq`. Generic over the scalar ring so tests
/// can run it in exact rational arithmetic.
pub fn cumulant<T, F>(moment: &F, seq: &[usize]) -> T
where
    T: Clone + Zero + One + core::ops::Sub<Output = T> + core::ops::Mul<Output = T>,
    F: Fn(&[usize]) -> T,
{
    let n = seq.len();
    if n == 0 {
        return T::zero();
    }
    let mut acc = moment(seq);
    for partition in partitions_of_positions(n) {
        if partition.len() <= 1 {
            continue; // the full block is the cumulant being solved for
        }
        let mut prod = T::one();
        for block in &partition {
            let sub: Vec<usize> = block.iter().map(|&p| seq[p]).collect();
            prod = prod * cumulant(moment, &sub);
        }
        acc = acc - prod;
    }
    acc
}

/// Reassemble a moment from cumulants via the partition sum; used as the
/// round-trip oracle for [`cumulant`].
pub fn moment_from_cumulants<T, F>(moment: &F, seq: &[usize]) -> T
where
    T: Clone + Zero + One + core::ops::Sub<Output = T> + core::ops::Mul<Output = T> + core::ops::Add<Output = T>,
    F: Fn(&[usize]) -> T,
{
    let n = seq.len();
    let mut acc = T::zero();
    for partition in partitions_of_positions(n) {
        let mut prod = T::one();
        for block in &partition {
            let sub: Vec<usize> = block.iter().map(|&p| seq[p]).collect();
            prod = prod * cumulant(moment, &sub);
        }
        acc = acc + prod;
    }
    acc
}

/// Connected autocorrelation C = Re<F(t2+)F(t1+)> - <F(t2+)><F(t1+)>.
pub fn autocorrelation(
    f: &HermitianObservable,
    h: &CMatrix,
    rho: &DensityMatrix,
    t2: f64,
    t1: f64,
) -> Result<f64> {
    let (lo, hi) = if t2 >= t1 { (t1, t2) } else { (t2, t1) };
    let q2 = MTCQuery::new(
        alloc::vec![lo, hi],
        alloc::vec![f.clone(), f.clone()],
        alloc::vec![Branch::Plus, Branch::Plus],
    )?;
    let m2 = mtc_exact(&q2, h, rho)?;
    let e2 = expectation(f, h, rho, t2)?;
    let e1 = expectation(f, h, rho, t1)?;
    Ok(m2.re - e2 * e1)
}

/// Susceptibility K = Theta(t2 - t1) Im<F(t2+)F(t1+)>.
pub fn susceptibility(
    f: &HermitianObservable,
    h: &CMatrix,
    rho: &DensityMatrix,
    t2: f64,
    t1: f64,
) -> Result<f64> {
    if t2 <= t1 {
        return Ok(0.0);
    }
    let q = MTCQuery::new(
        alloc::vec![t1, t2],
        alloc::vec![f.clone(), f.clone()],
        alloc::vec![Branch::Plus, Branch::Plus],
    )?;
    Ok(mtc_exact(&q, h, rho)?.im)
}

fn expectation(f: &HermitianObservable, h: &CMatrix, rho: &DensityMatrix, t: f64) -> Result<f64> {
    let ft = heisenberg(f.matrix(), h, t)?;
    Ok(ft.trace_mul(rho.matrix()).re)
}
