//! Interventions, regression-formula bi-probabilities, the cross-coefficient
//! integrals C and K, and the first-order cross-intervention correction.
//!
//! The zeroth order threads the initial state through alternating
//! propagators and projector-pair interventions; the first order replaces
//! one intervention at a time by its dressed counterpart
//!   Frame(t) [V(w), .] (P+ . P-) sum_{w'} ( C(w,w') [V(-w'), .]
//!                                         + i K(w,w') {V(-w'), .} ) Frame(-t),
//! which confines all environment memory to the coefficient table.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bath::{gamma_rates, CorrelationModel, HalfLineQuad};
use crate::cmatrix::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::generators::{
    born_propagator, davies_generator, jump_decomposition, redfield_generator, JumpDecomposition,
    OdeConfig,
};
use crate::opalg::{unitary_at, DensityMatrix, HermitianObservable, SuperOperator};
use crate::oracle::{BiProbTable, MTCQuery};
use crate::quad::{integrate_fourier, QuadConfig};
use crate::tolerances;

/// A projector-pair insertion P(f+) . P(f-) at time t, rotated into the
/// frame of the system Hamiltonian.
#[derive(Debug, Clone)]
pub struct Intervention {
    pub time: f64,
    pub fplus: f64,
    pub fminus: f64,
    superop: SuperOperator,
}

impl Intervention {
    pub fn superop(&self) -> &SuperOperator {
        &self.superop
    }
}

/// Build one intervention; `fplus`/`fminus` must be eigenvalues of `obs`.
pub fn intervention(
    obs: &HermitianObservable,
    fplus: f64,
    fminus: f64,
    t: f64,
    hs: &CMatrix,
) -> Result<Intervention> {
    let spread = obs.eigenvalues().iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    let tol = 1e-8 * (spread + 1.0);
    let kp = obs.eigenvalue_index(fplus, tol)?;
    let km = obs.eigenvalue_index(fminus, tol)?;
    let u = unitary_at(hs, -t)?; // e^{+i Hs t}
    let udag = u.adjoint();
    let p_plus = u.matmul(obs.projector(kp)).matmul(&udag);
    let p_minus = u.matmul(obs.projector(km)).matmul(&udag);
    Ok(Intervention {
        time: t,
        fplus: obs.eigenvalues()[kp],
        fminus: obs.eigenvalues()[km],
        superop: SuperOperator::from_pair(&p_plus, &p_minus)?,
    })
}

/// Which propagator approximation stands in for the averaged
/// interaction-picture evolution between interventions.
#[derive(Debug, Clone)]
pub enum PropagatorChoice {
    /// e^{(t1-t0) L} with the Davies generator; the default.
    Davies,
    /// Exponential of the interval-averaged non-secular Markov generator.
    Redfield,
    /// Second-super-cumulant ODE integration.
    Born(OdeConfig),
    /// Identity map: the closed system in the interaction frame.
    Closed,
}

/// Propagator family for one system/bath pairing.
pub struct PropagatorSet<'a> {
    choice: PropagatorChoice,
    jd: &'a JumpDecomposition,
    model: &'a CorrelationModel,
    davies: SuperOperator,
    rates: crate::bath::SpectralRates,
}

impl<'a> PropagatorSet<'a> {
    pub fn new(
        choice: PropagatorChoice,
        jd: &'a JumpDecomposition,
        model: &'a CorrelationModel,
        quad: &HalfLineQuad,
    ) -> Result<Self> {
        let rates = gamma_rates(model, jd.bohr_freqs(), quad)?;
        let davies = davies_generator(jd, &rates)?;
        Ok(Self { choice, jd, model, davies, rates })
    }

    pub fn dim(&self) -> usize {
        self.jd.dim()
    }

    pub fn davies_generator(&self) -> &SuperOperator {
        &self.davies
    }

    pub fn propagator(&self, t1: f64, t0: f64) -> Result<SuperOperator> {
        if t1 < t0 {
            return Err(Error::InvalidParameter(format!("need t1 >= t0, got ({t0}, {t1})")));
        }
        if t1 == t0 {
            return Ok(SuperOperator::identity(self.dim()));
        }
        match &self.choice {
            PropagatorChoice::Davies => Ok(self.davies.exp(t1 - t0)),
            PropagatorChoice::Redfield => {
                let gen = redfield_generator(self.jd, &self.rates, (t0, t1))?;
                Ok(gen.exp(t1 - t0))
            }
            PropagatorChoice::Born(ode) => born_propagator(t1, t0, self.jd, self.model, ode),
            PropagatorChoice::Closed => Ok(SuperOperator::identity(self.dim())),
        }
    }
}

fn check_grid(times: &[f64], observables: &[HermitianObservable], d: usize) -> Result<()> {
    if times.len() != observables.len() || times.is_empty() {
        return Err(Error::InvalidQuery(format!(
            "{} times vs {} observables",
            times.len(),
            observables.len()
        )));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidQuery("times must be sorted ascending from t >= 0".into()));
    }
    if observables.iter().any(|o| o.dim() != d) {
        return Err(Error::DimensionMismatch("observable dimension mismatch".into()));
    }
    Ok(())
}

/// Warnings for intervention spacings inside the environment memory time.
pub fn separation_warnings(times: &[f64], tau: f64) -> Vec<String> {
    let threshold = tolerances::MIN_SEPARATION_TAU * tau;
    let mut w = Vec::new();
    let mut prev = 0.0;
    for (j, &t) in times.iter().enumerate() {
        if j > 0 && t - prev < threshold {
            w.push(format!(
                "interventions {} and {} are separated by {:.3} < {:.1} tau; \
                 the perturbative tables may be outside their validity window",
                j,
                j + 1,
                t - prev,
                tolerances::MIN_SEPARATION_TAU
            ));
        }
        prev = t;
    }
    w
}

fn intervention_superops(
    times: &[f64],
    observables: &[HermitianObservable],
    hs: &CMatrix,
) -> Result<Vec<Vec<SuperOperator>>> {
    // per slot, indexed kp * n_eig + km
    let mut out = Vec::with_capacity(times.len());
    for (t, obs) in times.iter().zip(observables.iter()) {
        let u = unitary_at(hs, -*t)?;
        let udag = u.adjoint();
        let rotated: Vec<CMatrix> =
            obs.projectors().iter().map(|p| u.matmul(p).matmul(&udag)).collect();
        let k = rotated.len();
        let mut slot = Vec::with_capacity(k * k);
        for kp in 0..k {
            for km in 0..k {
                slot.push(SuperOperator::from_pair(&rotated[kp], &rotated[km])?);
            }
        }
        out.push(slot);
    }
    Ok(out)
}

/// Zeroth-order (regression formula) bi-probability table:
/// entry(f+, f-) = tr[ prod_j P_j Lambda_{t_j, t_{j-1}} rho0 ].
pub fn qrf_biprob(
    times: &[f64],
    observables: &[HermitianObservable],
    hs: &CMatrix,
    rho0: &DensityMatrix,
    props: &PropagatorSet<'_>,
) -> Result<BiProbTable> {
    let d = props.dim();
    check_grid(times, observables, d)?;
    if hs.rows() != d || rho0.dim() != d {
        return Err(Error::DimensionMismatch("system dimension mismatch".into()));
    }
    let slots = intervention_superops(times, observables, hs)?;
    let mut propagators = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        propagators.push(props.propagator(t, prev)?);
        prev = t;
    }
    let spectra: Vec<Vec<f64>> = observables.iter().map(|o| o.eigenvalues().to_vec()).collect();
    let mut table = BiProbTable::new_zeroed(times.to_vec(), spectra);
    let mut slot_sizes = Vec::with_capacity(times.len());
    for obs in observables {
        slot_sizes.push(obs.eigenvalues().len());
    }
    fill_recursive(
        &mut table,
        &slots,
        &propagators,
        &slot_sizes,
        0,
        rho0.matrix().clone(),
        0,
        0,
        &|_, _| None,
    );
    Ok(table)
}

/// Recursive walker shared by the zeroth-order table and the first-order
/// correction: at slot `level` the state is propagated once, then branched
/// over the (f+, f-) pairs. `replace` may supply a substitute superoperator
/// for a slot (the dressed intervention).
#[allow(clippy::too_many_arguments)]
fn fill_recursive(
    table: &mut BiProbTable,
    slots: &[Vec<SuperOperator>],
    propagators: &[SuperOperator],
    slot_sizes: &[usize],
    level: usize,
    state: CMatrix,
    plus_flat: usize,
    minus_flat: usize,
    replace: &dyn Fn(usize, (usize, usize)) -> Option<SuperOperator>,
) {
    if level == slots.len() {
        table.add_flat(plus_flat, minus_flat, state.trace());
        return;
    }
    let propagated = propagators[level].apply(&state);
    let k = slot_sizes[level];
    let stride: usize = slot_sizes[..level].iter().product();
    for kp in 0..k {
        for km in 0..k {
            let op = match replace(level, (kp, km)) {
                Some(sub) => sub,
                None => slots[level][kp * k + km].clone(),
            };
            let next = op.apply(&propagated);
            fill_recursive(
                table,
                slots,
                propagators,
                slot_sizes,
                level + 1,
                next,
                plus_flat + kp * stride,
                minus_flat + km * stride,
                replace,
            );
        }
    }
}

/// Cross-intervention coefficient pair for one frequency pair:
///   C(w, w') = -lambda^2 int_0^inf du e^{i(w-w')u} int_u^inf dv e^{i w' v} Re<E(v)E(0)>,
///   K(w, w') = same with Im<E(v)E(0)>.
/// Closed forms for the exponential model, windowed nested quadrature
/// otherwise. The returned flag is false when the outer integral shows
/// signs of conditional convergence (on-resonance w = w' with a slowly
/// decaying correlation).
pub fn cross_coefficients(
    model: &CorrelationModel,
    omega: f64,
    omega_prime: f64,
    quad: &HalfLineQuad,
) -> Result<(C64, C64, bool)> {
    match model {
        CorrelationModel::ExponentialHighT { tau, beta, lambda } => {
            let lam2 = lambda * lambda;
            let denom = C64::new(1.0, -omega * tau) * C64::new(1.0, -omega_prime * tau);
            let c = C64::new(-lam2 * tau * tau, 0.0) / denom;
            let k = C64::new(lam2 * beta * tau / 2.0, 0.0) / denom;
            Ok((c, k, true))
        }
        CorrelationModel::Finite(_) => cross_coefficients_quadrature(model, omega, omega_prime, quad),
    }
}

/// The nested-quadrature evaluation of the C/K integrals, usable for any
/// model (it is the cross-check path for the closed forms).
pub fn cross_coefficients_quadrature(
    model: &CorrelationModel,
    omega: f64,
    omega_prime: f64,
    quad: &HalfLineQuad,
) -> Result<(C64, C64, bool)> {
    let lam2 = model.lambda() * model.lambda();
    let cut = quad.cutoff;
    let wr = quad.window_rate;
    let inner_cfg = QuadConfig { rel_tol: tolerances::CROSS_COEFF_REL, ..quad.cfg };
    // inner integrals from u to the cutoff, with the damping window on v
    let inner = |u: f64, re_part: bool| -> C64 {
        integrate_fourier(
            |v| {
                let c = model.corr_fn(v);
                let x = if re_part { c.re } else { c.im };
                C64::new(x * (-wr * v).exp(), 0.0)
            },
            u,
            cut,
            -omega_prime, // phase e^{+i w' v}
            &inner_cfg,
        )
        .value
    };
    // the outer integrand must have died out by the cutoff, otherwise the
    // half-line extension was only conditionally convergent
    let mut ok = true;
    let mut outer = |re_part: bool| -> C64 {
        let r = integrate_fourier(
            |u| inner(u, re_part),
            0.0,
            cut,
            -(omega - omega_prime), // phase e^{+i(w-w')u}
            &inner_cfg,
        );
        let head = inner(0.0, re_part).norm();
        let tail = inner(0.95 * cut, re_part).norm();
        if !r.converged || tail > 1e-3 * head.max(1e-300) {
            ok = false;
        }
        r.value
    };
    let c = outer(true) * (-lam2);
    let k = outer(false) * (-lam2);
    Ok((c, k, ok))
}

/// Coefficient table over the Bohr frequencies of a jump decomposition.
#[derive(Debug, Clone)]
pub struct CrossCoefficients {
    omegas: Vec<f64>,
    c: Vec<C64>,
    k: Vec<C64>,
    pub warnings: Vec<String>,
}

impl CrossCoefficients {
    pub fn build(
        model: &CorrelationModel,
        jd: &JumpDecomposition,
        quad: &HalfLineQuad,
    ) -> Result<Self> {
        let omegas: Vec<f64> = jd.bohr_freqs().to_vec();
        let n = omegas.len();
        let mut c = Vec::with_capacity(n * n);
        let mut k = Vec::with_capacity(n * n);
        let mut warnings = Vec::new();
        for &om in &omegas {
            for &omp in &omegas {
                let (cv, kv, converged) = cross_coefficients(model, om, omp, quad)?;
                if !converged {
                    warnings.push(format!(
                        "coefficient integral at (omega, omega') = ({om}, {omp}) is only \
                         conditionally convergent; the windowed value is regularization-dependent"
                    ));
                }
                c.push(cv);
                k.push(kv);
            }
        }
        Ok(Self { omegas, c, k, warnings })
    }

    fn index(&self, omega: f64, omega_prime: f64) -> Result<usize> {
        let scale = self.omegas.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        let tol = 1e-8 * scale + 1e-12;
        let i = self
            .omegas
            .iter()
            .position(|&o| (o - omega).abs() <= tol)
            .ok_or(Error::MissingRate { omega })?;
        let j = self
            .omegas
            .iter()
            .position(|&o| (o - omega_prime).abs() <= tol)
            .ok_or(Error::MissingRate { omega: omega_prime })?;
        Ok(i * self.omegas.len() + j)
    }

    pub fn c(&self, omega: f64, omega_prime: f64) -> Result<C64> {
        Ok(self.c[self.index(omega, omega_prime)?])
    }

    pub fn k(&self, omega: f64, omega_prime: f64) -> Result<C64> {
        Ok(self.k[self.index(omega, omega_prime)?])
    }
}

/// First-order correction table: one dressed intervention inserted per
/// interior slot, everything else as in the zeroth order. The entries sum
/// to zero because the dressed intervention leads with a commutator.
pub fn first_order_biprob(
    times: &[f64],
    observables: &[HermitianObservable],
    hs: &CMatrix,
    rho0: &DensityMatrix,
    props: &PropagatorSet<'_>,
    jd: &JumpDecomposition,
    coeffs: &CrossCoefficients,
) -> Result<BiProbTable> {
    let d = props.dim();
    check_grid(times, observables, d)?;
    let n = times.len();
    let spectra: Vec<Vec<f64>> = observables.iter().map(|o| o.eigenvalues().to_vec()).collect();
    let mut table = BiProbTable::new_zeroed(times.to_vec(), spectra);
    if n < 2 {
        return Ok(table); // no interior insertion points
    }

    let slots = intervention_superops(times, observables, hs)?;
    let mut propagators = Vec::with_capacity(n);
    let mut prev = 0.0;
    for &t in times {
        propagators.push(props.propagator(t, prev)?);
        prev = t;
    }
    let slot_sizes: Vec<usize> = observables.iter().map(|o| o.eigenvalues().len()).collect();

    // per Bohr frequency: the left commutator [V(w), .] and the coefficient-
    // weighted right factor sum_{w'} ( C [V(-w'), .] + i K {V(-w'), .} )
    let mut lefts = Vec::new();
    let mut rights = Vec::new();
    for (om, v_om) in jd.jumps() {
        lefts.push(SuperOperator::commutator(v_om)?);
        let mut right = SuperOperator::zero(d);
        for (omp, _) in jd.jumps() {
            let v_neg = jd.jump(-omp)?;
            let com = SuperOperator::commutator(v_neg)?;
            let anti = SuperOperator::anticommutator(v_neg)?;
            right = &right + &com.scale(coeffs.c(om, omp)?);
            right = &right + &anti.scale(C64::i() * coeffs.k(om, omp)?);
        }
        rights.push(right);
    }

    for j in 0..n - 1 {
        // dressed intervention at slot j, in the frame of t_j
        let u = unitary_at(hs, -times[j])?;
        let frame = SuperOperator::conjugation(&u)?;
        let frame_inv = SuperOperator::conjugation(&u.adjoint())?;
        let k = slot_sizes[j];
        let mut dressed: Vec<SuperOperator> = Vec::with_capacity(k * k);
        let obs = &observables[j];
        for kp in 0..k {
            for km in 0..k {
                let proj = SuperOperator::from_pair(obs.projector(kp), obs.projector(km))?;
                let mut acc = SuperOperator::zero(d);
                for (left, right) in lefts.iter().zip(rights.iter()) {
                    acc = &acc + &left.compose(&proj).compose(right);
                }
                dressed.push(frame.compose(&acc).compose(&frame_inv));
            }
        }
        let replace = |level: usize, idx: (usize, usize)| -> Option<SuperOperator> {
            if level == j {
                Some(dressed[idx.0 * k + idx.1].clone())
            } else {
                None
            }
        };
        fill_recursive(
            &mut table,
            &slots,
            &propagators,
            &slot_sizes,
            0,
            rho0.matrix().clone(),
            0,
            0,
            &replace,
        );
    }
    Ok(table)
}

/// Perturbative MTC value with its pieces and validity diagnostics.
#[derive(Debug, Clone)]
pub struct PerturbativeMTCResult {
    pub zeroth: C64,
    pub first_correction: C64,
    pub total: C64,
    pub lambda_tau: f64,
    pub warnings: Vec<String>,
}

/// System side of an open-system problem: renormalized Hamiltonian,
/// coupling operator, and initial state.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub hs: CMatrix,
    pub coupling: CMatrix,
    pub rho0: DensityMatrix,
}

/// MTC through the perturbative tables at the requested order (0 or 1),
/// with the default quadrature setup for the model's correlation time.
pub fn mtc_perturbative(
    q: &MTCQuery,
    sys: &SystemSpec,
    model: &CorrelationModel,
    order: u32,
    choice: PropagatorChoice,
) -> Result<PerturbativeMTCResult> {
    mtc_perturbative_with(q, sys, model, order, choice, &HalfLineQuad::for_tau(model.tau()))
}

/// Same as [`mtc_perturbative`] with explicit quadrature configuration.
pub fn mtc_perturbative_with(
    q: &MTCQuery,
    sys: &SystemSpec,
    model: &CorrelationModel,
    order: u32,
    choice: PropagatorChoice,
    quad: &HalfLineQuad,
) -> Result<PerturbativeMTCResult> {
    if order > 1 {
        return Err(Error::UnsupportedOrder(order));
    }
    let jd = jump_decomposition(&sys.hs, &sys.coupling, None)?;
    let props = PropagatorSet::new(choice, &jd, model, quad)?;
    let mut warnings = separation_warnings(q.times(), model.tau());
    warnings.extend(model.validity_warnings());

    let table0 = qrf_biprob(q.times(), q.observables(), &sys.hs, &sys.rho0, &props)?;
    let zeroth = table0.moment(q.branches());
    let first_correction = if order >= 1 {
        let coeffs = CrossCoefficients::build(model, &jd, quad)?;
        warnings.extend(coeffs.warnings.iter().cloned());
        let table1 =
            first_order_biprob(q.times(), q.observables(), &sys.hs, &sys.rho0, &props, &jd, &coeffs)?;
        table1.moment(q.branches())
    } else {
        C64::new(0.0, 0.0)
    };
    Ok(PerturbativeMTCResult {
        zeroth,
        first_correction,
        total: zeroth + first_correction,
        lambda_tau: model.lambda() * model.tau(),
        warnings,
    })
}
