//! Frequency decomposition of coupling operators and the propagator
//! approximation ladder: Davies (secular GKLS), Redfield (non-secular
//! Markov with off-resonance phases) and Born (second-super-cumulant ODE).

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bath::{CorrelationModel, HalfLineQuad, SpectralRates};
use crate::cmatrix::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::opalg::{HermitianObservable, SuperOperator};
use crate::quad::{integrate_matrix, QuadConfig};
use crate::tolerances;

/// Decomposition of a hermitian coupling V over the Bohr frequencies of a
/// (renormalized) system Hamiltonian: V(omega) raises the system energy by
/// omega, sum_omega V(omega) = V and V(-omega) = V(omega)^dag.
#[derive(Debug, Clone)]
pub struct JumpDecomposition {
    dim: usize,
    bohr_freqs: Vec<f64>,
    jumps: Vec<CMatrix>,
}

impl JumpDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sorted Bohr frequencies with a nonzero jump block; closed under
    /// negation.
    pub fn bohr_freqs(&self) -> &[f64] {
        &self.bohr_freqs
    }

    pub fn jumps(&self) -> impl Iterator<Item = (f64, &CMatrix)> {
        self.bohr_freqs.iter().copied().zip(self.jumps.iter())
    }

    pub fn jump(&self, omega: f64) -> Result<&CMatrix> {
        let scale = self.bohr_freqs.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        let tol = 1e-8 * scale + 1e-12;
        self.bohr_freqs
            .iter()
            .position(|&om| (om - omega).abs() <= tol)
            .map(|i| &self.jumps[i])
            .ok_or(Error::MissingRate { omega })
    }

    /// Interaction-picture coupling e^{i Hs t} V e^{-i Hs t}
    /// = sum_omega e^{i omega t} V(omega).
    pub fn coupling_at(&self, t: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (om, v) in self.jumps() {
            out.add_scaled(v, (C64::i() * (om * t)).exp());
        }
        out
    }

    /// sum_omega V(omega); reconstructs the bare coupling.
    pub fn total_coupling(&self) -> CMatrix {
        self.coupling_at(0.0)
    }
}

/// Split `v` into jump operators over the Bohr frequencies of `hs`,
/// binning frequencies within `freq_tol` (default 1e-8 times the spectral
/// radius of `hs`). Blocks with negligible norm are dropped.
pub fn jump_decomposition(
    hs: &CMatrix,
    v: &CMatrix,
    freq_tol: Option<f64>,
) -> Result<JumpDecomposition> {
    hs.check_same_shape(v)?;
    let obs = HermitianObservable::spectral_decompose(hs, None)?;
    v.check_hermitian(tolerances::HERMITICITY_ABS)?;
    let d = hs.rows();
    let radius = obs.eigenvalues().iter().fold(0.0_f64, |m, &e| m.max(e.abs()));
    let tol = freq_tol.unwrap_or(tolerances::FREQ_BIN_REL * radius.max(1e-300));

    let mut pairs: Vec<(f64, CMatrix)> = Vec::new();
    for (k, &ek) in obs.eigenvalues().iter().enumerate() {
        for (l, &el) in obs.eigenvalues().iter().enumerate() {
            let omega = ek - el;
            let block = obs.projector(k).matmul(v).matmul(obs.projector(l));
            if block.max_abs() < 1e-14 * v.max_abs().max(1e-300) {
                continue;
            }
            match pairs.iter_mut().find(|(om, _)| (*om - omega).abs() <= tol) {
                Some((_, acc)) => acc.add_scaled(&block, C64::new(1.0, 0.0)),
                None => pairs.push((omega, block)),
            }
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite frequencies"));
    let (bohr_freqs, jumps): (Vec<f64>, Vec<CMatrix>) = pairs.into_iter().unzip();
    Ok(JumpDecomposition { dim: d, bohr_freqs, jumps })
}

/// Center an environment coupling against the stationary state:
/// E = V - tr(V rho) 1. Returns the centered operator and the subtracted
/// mean.
pub fn centered_coupling(v_e: &CMatrix, rho_e: &CMatrix) -> (CMatrix, f64) {
    let mean = v_e.trace_mul(rho_e).re;
    let mut e = v_e.clone();
    e.add_scaled(&CMatrix::identity(v_e.rows()), C64::new(-mean, 0.0));
    (e, mean)
}

/// Renormalized system Hamiltonian H = H0 + lambda <V_e> V_s.
pub fn renormalized_hs(h0: &CMatrix, v_s: &CMatrix, coupling_mean: f64, lambda: f64) -> CMatrix {
    let mut h = h0.clone();
    h.add_scaled(v_s, C64::new(lambda * coupling_mean, 0.0));
    h
}

/// Secular GKLS generator
///   sum_omega  w(omega) ( V(omega) . V(-omega) - 1/2 {V(-omega)V(omega), .} )
///            + i h(omega)/2 [V(-omega)V(omega), .].
/// Requires a rate entry for every Bohr frequency of the decomposition.
pub fn davies_generator(jd: &JumpDecomposition, rates: &SpectralRates) -> Result<SuperOperator> {
    let d = jd.dim();
    let mut gen = SuperOperator::zero(d);
    for (omega, v_om) in jd.jumps() {
        let gamma = rates.half_line_transform(omega)?; // (w - i h)/2
        let w = 2.0 * gamma.re;
        let v_neg = jd.jump(-omega)?;
        let a = v_neg.matmul(v_om);
        let sandwich = SuperOperator::from_pair(v_om, v_neg)?;
        gen = &gen + &sandwich.scale(C64::new(w, 0.0));
        gen = &gen - &SuperOperator::left_mul(&a)?.scale(gamma);
        gen = &gen - &SuperOperator::right_mul(&a)?.scale(gamma.conj());
    }
    Ok(gen)
}

/// Non-secular Markov generator, time-averaged over [t0, t1]: the
/// off-resonance pairs (omega, omega') keep their exactly integrated phase
/// factor (1/Dt) int e^{i(omega-omega')u} du. Reduces to the Davies
/// generator when only on-resonance pairs survive.
pub fn redfield_generator(
    jd: &JumpDecomposition,
    rates: &SpectralRates,
    t_interval: (f64, f64),
) -> Result<SuperOperator> {
    let (t0, t1) = t_interval;
    if t1 <= t0 {
        return Err(Error::InvalidParameter(format!(
            "need t1 > t0, got interval ({t0}, {t1})"
        )));
    }
    let dt = t1 - t0;
    let d = jd.dim();
    let mut gen = SuperOperator::zero(d);
    for (omega, v_om) in jd.jumps() {
        let gamma = rates.half_line_transform(omega)?;
        for (omega_p, _) in jd.jumps() {
            let v_negp = jd.jump(-omega_p)?;
            let gamma_p = rates.half_line_transform(omega_p)?;
            let delta = omega - omega_p;
            let phase = if delta.abs() * dt < 1e-12 {
                C64::new(1.0, 0.0)
            } else {
                let i_delta = C64::i() * delta;
                ((i_delta * t1).exp() - (i_delta * t0).exp()) / (i_delta * dt)
            };
            let a = v_negp.matmul(v_om);
            let sandwich = SuperOperator::from_pair(v_om, v_negp)?;
            let mut term = sandwich.scale(gamma + gamma_p.conj());
            term = &term - &SuperOperator::left_mul(&a)?.scale(gamma);
            term = &term - &SuperOperator::right_mul(&a)?.scale(gamma_p.conj());
            gen = &gen + &term.scale(phase);
        }
    }
    Ok(gen)
}

/// The two-time kernel <<Z(u2) Z(u1)>> of the interaction-picture
/// dynamical variable, as a superoperator matrix (lambda-free):
///   c  (V2 V1) .   +  c* . (V1 V2)  -  c* V2 . V1  -  c V1 . V2,
/// with c = <E(u2-u1) E(0)> and V_j the interaction-picture coupling.
pub fn cross_cumulant_kernel(
    u2: f64,
    u1: f64,
    jd: &JumpDecomposition,
    model: &CorrelationModel,
) -> CMatrix {
    debug_assert!(u2 >= u1);
    let c = model.corr_fn(u2 - u1);
    let v2 = jd.coupling_at(u2);
    let v1 = jd.coupling_at(u1);
    let d = jd.dim();
    let id = CMatrix::identity(d);
    let v2v1 = v2.matmul(&v1);
    let v1v2 = v1.matmul(&v2);
    let mut k = id.kron(&v2v1).scale(c);
    k.add_scaled(&v1v2.transpose().kron(&id), c.conj());
    k.add_scaled(&v1.transpose().kron(&v2), -c.conj());
    k.add_scaled(&v2.transpose().kron(&v1), -c);
    k
}

/// Second super-cumulant generator at time t:
///   lambda^2 L2(t, t0) = -lambda^2 int_{t0}^{t} <<Z(t) Z(u')>> du',
/// with the inner integral cut off once the kernel range (40 tau) is
/// exhausted.
pub fn second_supercumulant(
    t: f64,
    t0: f64,
    jd: &JumpDecomposition,
    model: &CorrelationModel,
    cfg: &QuadConfig,
) -> Result<SuperOperator> {
    if t < t0 {
        return Err(Error::InvalidParameter(format!("need t >= t0, got t={t}, t0={t0}")));
    }
    let d = jd.dim();
    if t == t0 {
        return Ok(SuperOperator::zero(d));
    }
    let reach = tolerances::QUAD_CUTOFF_TAU * model.tau();
    let lo = t0.max(t - reach);
    let (m, _err, _ok) = integrate_matrix(|u| cross_cumulant_kernel(t, u, jd, model), lo, t, cfg);
    let lam2 = model.lambda() * model.lambda();
    SuperOperator::from_matrix(d, m.scale(C64::new(-lam2, 0.0)))
}

#[derive(Debug, Clone, Copy)]
pub struct OdeConfig {
    pub dt: f64,
    pub quad: QuadConfig,
}

impl OdeConfig {
    pub fn for_tau(tau: f64) -> Self {
        Self { dt: tolerances::ODE_DT_TAU * tau, quad: QuadConfig::default() }
    }
}

/// Born propagator: integrates d Lambda / dt = lambda^2 L2(t, t0) Lambda
/// from the identity with classical fixed-step RK4.
pub fn born_propagator(
    t1: f64,
    t0: f64,
    jd: &JumpDecomposition,
    model: &CorrelationModel,
    ode: &OdeConfig,
) -> Result<SuperOperator> {
    if t1 < t0 {
        return Err(Error::InvalidParameter(format!("need t1 >= t0, got t1={t1}, t0={t0}")));
    }
    let d = jd.dim();
    if t1 == t0 {
        return Ok(SuperOperator::identity(d));
    }
    if ode.dt <= 1e-12 * (t1 - t0) {
        return Err(Error::StepUnderflow {
            t: t0,
            detail: format!("dt = {:.3e} over interval {:.3e}", ode.dt, t1 - t0),
        });
    }
    let n_steps = ((t1 - t0) / ode.dt).ceil() as usize;
    let h = (t1 - t0) / n_steps as f64;
    let gen_at = |t: f64| -> Result<CMatrix> {
        Ok(second_supercumulant(t, t0, jd, model, &ode.quad)?.matrix().clone())
    };
    let mut lam = CMatrix::identity(d * d);
    let mut g_lo = gen_at(t0)?;
    for step in 0..n_steps {
        let ta = t0 + h * step as f64;
        let g_mid = gen_at(ta + 0.5 * h)?;
        let g_hi = gen_at(ta + h)?;
        let k1 = g_lo.matmul(&lam);
        let mut s1 = lam.clone();
        s1.add_scaled(&k1, C64::new(0.5 * h, 0.0));
        let k2 = g_mid.matmul(&s1);
        let mut s2 = lam.clone();
        s2.add_scaled(&k2, C64::new(0.5 * h, 0.0));
        let k3 = g_mid.matmul(&s2);
        let mut s3 = lam.clone();
        s3.add_scaled(&k3, C64::new(h, 0.0));
        let k4 = g_hi.matmul(&s3);
        lam.add_scaled(&k1, C64::new(h / 6.0, 0.0));
        lam.add_scaled(&k2, C64::new(h / 3.0, 0.0));
        lam.add_scaled(&k3, C64::new(h / 3.0, 0.0));
        lam.add_scaled(&k4, C64::new(h / 6.0, 0.0));
        g_lo = g_hi;
    }
    SuperOperator::from_matrix(d, lam)
}

/// Davies and Redfield generators built from one coupling, with the
/// decomposition and rates they were assembled from.
#[derive(Debug, Clone)]
pub struct GeneratorBundle {
    pub davies: SuperOperator,
    pub redfield: SuperOperator,
    pub jd: JumpDecomposition,
    pub rates: SpectralRates,
}

impl GeneratorBundle {
    pub fn build(
        hs: &CMatrix,
        v: &CMatrix,
        model: &CorrelationModel,
        interval: (f64, f64),
        quad: &HalfLineQuad,
    ) -> Result<Self> {
        let jd = jump_decomposition(hs, v, None)?;
        let rates = crate::bath::gamma_rates(model, jd.bohr_freqs(), quad)?;
        let davies = davies_generator(&jd, &rates)?;
        let redfield = redfield_generator(&jd, &rates, interval)?;
        Ok(Self { davies, redfield, jd, rates })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::gamma_rates;
    use crate::cmatrix::mats;
    use crate::opalg::thermal_state;
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

    fn synthetic_rates(entries: &[(f64, f64, f64)]) -> SpectralRates {
        SpectralRates::from_entries(entries.to_vec())
    }

    #[test]
    fn degenerate_qubit_single_jump() {
        let jd = jump_decomposition(&CMatrix::zeros(2, 2), &mats::pauli_x(), None).unwrap();
        assert_eq!(jd.bohr_freqs(), &[0.0]);
        assert!((&jd.jump(0.0).unwrap().clone() - &mats::pauli_x()).max_abs() < 1e-14);
    }

    #[test]
    fn split_qubit_raising_lowering() {
        let delta = 1.4;
        let hs = CMatrix::diag_real(&[0.0, delta]);
        let jd = jump_decomposition(&hs, &mats::pauli_x(), None).unwrap();
        assert_eq!(jd.bohr_freqs().len(), 2);
        let v_up = jd.jump(delta).unwrap();
        // raising block |1><0|
        assert!((v_up.get(1, 0) - C64::new(1.0, 0.0)).norm() < 1e-13);
        assert!(v_up.get(0, 1).norm() < 1e-13);
        let v_dn = jd.jump(-delta).unwrap();
        assert!((&v_up.adjoint() - v_dn).max_abs() < 1e-13);
    }

    #[test]
    fn jump_completeness_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        let hs = random_hermitian(4, &mut rng);
        let v = random_hermitian(4, &mut rng);
        let jd = jump_decomposition(&hs, &v, None).unwrap();
        assert!((&jd.total_coupling() - &v).max_abs() < 1e-11);
        // frequency list closed under negation
        for &om in jd.bohr_freqs() {
            assert!(jd.jump(-om).is_ok(), "missing -omega for {om}");
        }
        // interaction picture matches direct conjugation
        let t = 0.9;
        let direct = crate::oracle::heisenberg(&v, &hs, t).unwrap();
        assert!((&jd.coupling_at(t) - &direct).max_abs() < 1e-11);
    }

    #[test]
    fn davies_matches_dephasing_form_for_degenerate_qubit() {
        let jd = jump_decomposition(&CMatrix::zeros(2, 2), &mats::pauli_x(), None).unwrap();
        let w0 = 0.37;
        let rates = synthetic_rates(&[(0.0, w0, 0.0)]);
        let gen = davies_generator(&jd, &rates).unwrap();
        let sx = mats::pauli_x();
        let want = &sx.transpose().kron(&sx) - &CMatrix::identity(4);
        assert!((gen.matrix() - &want.scale(C64::new(w0, 0.0))).max_abs() < 1e-14);
        assert!(gen.trace_annihilation_defect() < 1e-14);
    }

    #[test]
    fn zero_rates_zero_generator() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(67);
        let hs = random_hermitian(3, &mut rng);
        let v = random_hermitian(3, &mut rng);
        let jd = jump_decomposition(&hs, &v, None).unwrap();
        let entries: Vec<(f64, f64, f64)> =
            jd.bohr_freqs().iter().map(|&om| (om, 0.0, 0.0)).collect();
        let gen = davies_generator(&jd, &synthetic_rates(&entries)).unwrap();
        assert!(gen.matrix().max_abs() < 1e-15);
    }

    #[test]
    fn missing_rate_is_an_error() {
        let delta = 1.0;
        let hs = CMatrix::diag_real(&[0.0, delta]);
        let jd = jump_decomposition(&hs, &mats::pauli_x(), None).unwrap();
        let rates = synthetic_rates(&[(delta, 1.0, 0.0)]); // -delta missing
        assert!(matches!(davies_generator(&jd, &rates), Err(Error::MissingRate { .. })));
    }

    #[test]
    fn kms_rates_fix_the_thermal_state() {
        let delta = 0.9;
        let beta = 1.3;
        let hs = CMatrix::diag_real(&[0.0, delta]);
        let jd = jump_decomposition(&hs, &mats::pauli_x(), None).unwrap();
        // w(-omega)/w(omega) = e^{beta omega}, plus an arbitrary Lamb shift
        let w_up = 0.4;
        let w_dn = w_up * (beta * delta).exp();
        let rates = synthetic_rates(&[(delta, w_up, 0.05), (-delta, w_dn, -0.02), (0.0, 0.0, 0.0)]);
        let gen = davies_generator(&jd, &rates).unwrap();
        let gibbs = thermal_state(&hs, beta).unwrap();
        let moved = gen.apply(gibbs.matrix());
        assert!(moved.max_abs() < 1e-9);
        assert!(gen.trace_annihilation_defect() < 1e-12);
        // secular structure: commutes with the free dephasing superoperator
        let deph = SuperOperator::commutator(&hs).unwrap();
        let comm = &gen.compose(&deph) - &deph.compose(&gen);
        assert!(comm.matrix().max_abs() < 1e-10);
    }

    #[test]
    fn davies_maps_are_cptp_across_timescales() {
        let delta = 1.1;
        let hs = CMatrix::diag_real(&[0.0, delta]);
        let jd = jump_decomposition(&hs, &mats::pauli_x(), None).unwrap();
        let m = CorrelationModel::exponential_high_t(1.0, 0.3, 0.1).unwrap();
        let rates = gamma_rates(&m, jd.bohr_freqs(), &HalfLineQuad::for_tau(1.0)).unwrap();
        let gen = davies_generator(&jd, &rates).unwrap();
        let w0 = rates.w(delta).unwrap();
        for t in [0.1 / w0, 1.0 / w0, 10.0 / w0] {
            let map = gen.exp(t);
            let choi = map.choi();
            let sym = (&choi + &choi.adjoint()).scale(C64::new(0.5, 0.0));
            let min_eig = crate::eigen::min_eigenvalue(&sym).unwrap();
            assert!(min_eig >= -1e-9, "Choi min eig {min_eig} at t={t}");
            assert!(map.trace_preservation_defect() < 1e-10);
        }
        // secular structure: [L, [Hs, .]] = 0
        let deph = SuperOperator::commutator(&hs).unwrap();
        let comm = &gen.compose(&deph) - &deph.compose(&gen);
        assert!(comm.matrix().max_abs() < 1e-10);
    }

    #[test]
    fn redfield_equals_davies_for_single_frequency() {
        let jd = jump_decomposition(&CMatrix::zeros(2, 2), &mats::pauli_x(), None).unwrap();
        let rates = synthetic_rates(&[(0.0, 0.8, 0.1)]);
        let davies = davies_generator(&jd, &rates).unwrap();
        let redfield = redfield_generator(&jd, &rates, (0.0, 3.0)).unwrap();
        assert!((davies.matrix() - redfield.matrix()).max_abs() < 1e-13);
    }

    #[test]
    fn redfield_approaches_davies_in_the_secular_limit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        let hs = CMatrix::diag_real(&[0.0, 1.0, 2.6]);
        let v = random_hermitian(3, &mut rng);
        let jd = jump_decomposition(&hs, &v, None).unwrap();
        let entries: Vec<(f64, f64, f64)> = jd
            .bohr_freqs()
            .iter()
            .map(|&om| (om, 0.5 / (1.0 + om * om), 0.1 * om / (1.0 + om * om)))
            .collect();
        let rates = synthetic_rates(&entries);
        let davies = davies_generator(&jd, &rates).unwrap();
        let redfield = redfield_generator(&jd, &rates, (0.0, 2000.0)).unwrap();
        let rel = (davies.matrix() - redfield.matrix()).max_abs() / davies.matrix().max_abs();
        assert!(rel < 0.05, "relative deviation {rel}");
    }

    #[test]
    fn supercumulant_empty_interval_is_zero() {
        let jd = jump_decomposition(&CMatrix::zeros(2, 2), &mats::pauli_x(), None).unwrap();
        let m = CorrelationModel::exponential_high_t(1.0, 0.1, 0.1).unwrap();
        let s = second_supercumulant(2.0, 2.0, &jd, &m, &QuadConfig::default()).unwrap();
        assert!(s.matrix().max_abs() == 0.0);
    }

    #[test]
    fn supercumulant_kernel_infinite_temperature_anticommutator_free() {
        // Im corr = 0 collapses the kernel onto pure double-commutator form;
        // acting on the identity it must vanish.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(73);
        let hs = random_hermitian(2, &mut rng);
        let v = random_hermitian(2, &mut rng);
        let jd = jump_decomposition(&hs, &v, None).unwrap();
        let m = CorrelationModel::exponential_high_t(1.0, 0.0, 0.2).unwrap();
        let k = cross_cumulant_kernel(1.7, 0.4, &jd, &m);
        let s = SuperOperator::from_matrix(2, k).unwrap();
        assert!(s.apply(&CMatrix::identity(2)).max_abs() < 1e-13);
    }

    #[test]
    fn supercumulant_saturates_to_davies() {
        let tau = 1.0;
        let lambda = 0.1;
        let m = CorrelationModel::exponential_high_t(tau, 0.2, lambda).unwrap();
        let jd = jump_decomposition(&CMatrix::zeros(2, 2), &mats::pauli_x(), None).unwrap();
        let rates = gamma_rates(&m, &[0.0], &HalfLineQuad::for_tau(tau)).unwrap();
        let davies = davies_generator(&jd, &rates).unwrap();
        let s = second_supercumulant(50.0 * tau, 0.0, &jd, &m, &QuadConfig::default()).unwrap();
        let rel = (s.matrix() - davies.matrix()).max_abs() / davies.matrix().max_abs();
        assert!(rel < 1e-6, "relative deviation {rel}");

        // finite-difference slope of the integrated generator over a late
        // window reproduces the Davies generator
        let (f_a, _, _) = integrate_matrix(
            |t| second_supercumulant(t, 0.0, &jd, &m, &QuadConfig::default()).unwrap().matrix().clone(),
            40.0 * tau,
            50.0 * tau,
            &QuadConfig { rel_tol: 1e-8, ..QuadConfig::default() },
        );
        let slope = f_a.scale(C64::new(1.0 / (10.0 * tau), 0.0));
        let rel2 = (&slope - davies.matrix()).max_abs() / davies.matrix().max_abs();
        assert!(rel2 < 0.02, "slope deviation {rel2}");
    }

    #[test]
    fn born_identity_at_zero_interval() {
        let jd = jump_decomposition(&CMatrix::zeros(2, 2), &mats::pauli_x(), None).unwrap();
        let m = CorrelationModel::exponential_high_t(1.0, 0.1, 0.1).unwrap();
        let lam = born_propagator(3.0, 3.0, &jd, &m, &OdeConfig::for_tau(1.0)).unwrap();
        assert_eq!(lam, SuperOperator::identity(2));
    }

    #[test]
    fn born_matches_davies_map_at_weak_coupling() {
        // the discrepancy is the O((lambda tau)^2) startup transient of the
        // integrated super-cumulant; keep w0*dt small so the envelope does
        // not mask the quadratic shrink
        let tau = 1.0;
        let jd = jump_decomposition(&CMatrix::zeros(2, 2), &mats::pauli_x(), None).unwrap();
        let dt_total = 8.0 * tau;
        let mut prev_err = f64::INFINITY;
        for &lambda in &[0.05, 0.025] {
            let m = CorrelationModel::exponential_high_t(tau, 0.2, lambda).unwrap();
            let rates = gamma_rates(&m, &[0.0], &HalfLineQuad::for_tau(tau)).unwrap();
            let davies_map = davies_generator(&jd, &rates).unwrap().exp(dt_total);
            let born = born_propagator(dt_total, 0.0, &jd, &m, &OdeConfig::for_tau(tau)).unwrap();
            let err = (born.matrix() - davies_map.matrix()).max_abs();
            assert!(err < prev_err / 3.0 || prev_err == f64::INFINITY, "errors {prev_err} -> {err}");
            prev_err = err;
        }
    }

    #[test]
    fn born_trace_preservation_long_run() {
        let tau = 1.0;
        let lambda = 0.05;
        let m = CorrelationModel::exponential_high_t(tau, 0.2, lambda).unwrap();
        let jd = jump_decomposition(&CMatrix::zeros(2, 2), &mats::pauli_x(), None).unwrap();
        let born = born_propagator(100.0 * tau, 0.0, &jd, &m, &OdeConfig::for_tau(tau)).unwrap();
        assert!(born.trace_preservation_defect() < 1e-8);
    }

    #[test]
    fn born_rk4_richardson_order() {
        let tau = 1.0;
        let lambda = 0.15;
        let m = CorrelationModel::exponential_high_t(tau, 0.3, lambda).unwrap();
        let hs = CMatrix::diag_real(&[0.0, 0.8]);
        let jd = jump_decomposition(&hs, &mats::pauli_x(), None).unwrap();
        let t1 = 4.0 * tau;
        let run = |dt: f64| {
            born_propagator(t1, 0.0, &jd, &m, &OdeConfig { dt, quad: QuadConfig::default() })
                .unwrap()
        };
        let reference = run(tau / 160.0);
        let coarse = run(tau / 10.0);
        let fine = run(tau / 20.0);
        let e_coarse = (coarse.matrix() - reference.matrix()).max_abs();
        let e_fine = (fine.matrix() - reference.matrix()).max_abs();
        assert!(
            e_coarse >= 8.0 * e_fine,
            "expected 4th-order decay, got {e_coarse} -> {e_fine}"
        );
    }
}
