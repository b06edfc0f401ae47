//! Environment correlation functions and their spectral transforms: the
//! transition rate w, Lamb shift h, spectral density S, the
//! fluctuation-dissipation relation, and the residue-method susceptibility
//! for the exponential high-temperature model.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::cmatrix::{CMatrix, C64};
use crate::eigen::eigh;
use crate::error::{Error, Result};
use crate::opalg::{thermal_state, DensityMatrix};
use crate::quad::{integrate, integrate_fourier, QuadConfig};
use crate::tolerances;

/// One spectral line of a finite-bath correlation function:
/// contributes `weight * e^{i nu u}` to <E(u) E(0)>.
#[derive(Debug, Clone, Copy)]
pub struct Line {
    pub nu: f64,
    pub weight: C64,
}

/// Exact finite-dimensional environment with a stationary state.
#[derive(Debug, Clone)]
pub struct FiniteBath {
    h_e: CMatrix,
    couplings: Vec<CMatrix>,
    rho_e: DensityMatrix,
    lambda: f64,
    beta: Option<f64>,
    tau_hint: f64,
    broadening: f64,
    /// line decomposition per coupling pair (alpha, alpha'), row-major
    lines: Vec<Vec<Line>>,
}

impl FiniteBath {
    /// Bath with a thermal stationary state at inverse temperature `beta`.
    /// Couplings are centered so tr(E rho) = 0.
    pub fn thermal(h_e: &CMatrix, couplings: &[CMatrix], beta: f64, lambda: f64) -> Result<Self> {
        let rho = thermal_state(h_e, beta)?;
        Self::build(h_e, couplings, rho, lambda, Some(beta))
    }

    /// Bath with an arbitrary stationary state ([H_e, rho_e] = 0).
    pub fn stationary(
        h_e: &CMatrix,
        couplings: &[CMatrix],
        rho_e: DensityMatrix,
        lambda: f64,
    ) -> Result<Self> {
        Self::build(h_e, couplings, rho_e, lambda, None)
    }

    fn build(
        h_e: &CMatrix,
        couplings: &[CMatrix],
        rho_e: DensityMatrix,
        lambda: f64,
        beta: Option<f64>,
    ) -> Result<Self> {
        h_e.check_hermitian(tolerances::HERMITICITY_ABS)?;
        if couplings.is_empty() {
            return Err(Error::InvalidParameter("at least one coupling operator required".into()));
        }
        let comm = h_e.commutator(rho_e.matrix());
        if comm.max_abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "stationary state does not commute with H_e (defect {:.3e})",
                comm.max_abs()
            )));
        }
        let (evals, evecs) = eigh(h_e)?;
        let basis_dag = evecs.adjoint();
        let rho_eig = basis_dag.matmul(rho_e.matrix()).matmul(&evecs);

        // center each coupling and move it to the eigenbasis
        let d = h_e.rows();
        let mut centered = Vec::with_capacity(couplings.len());
        let mut eig_cpl = Vec::with_capacity(couplings.len());
        for v in couplings {
            v.check_hermitian(tolerances::HERMITICITY_ABS)?;
            let mean = v.trace_mul(rho_e.matrix()).re;
            let mut e = v.clone();
            e.add_scaled(&CMatrix::identity(d), C64::new(-mean, 0.0));
            eig_cpl.push(basis_dag.matmul(&e).matmul(&evecs));
            centered.push(e);
        }

        // line decomposition: tr[E_a(u) E_b rho] = sum_{mn} e^{i(E_m - E_n)u}
        //   (E_a)_{mn} (E_b rho)_{nm}
        let radius = evals.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        let merge_tol = 1e-9 * (radius + 1.0);
        let n_cpl = couplings.len();
        let mut lines = Vec::with_capacity(n_cpl * n_cpl);
        for a in 0..n_cpl {
            for b in 0..n_cpl {
                let eb_rho = eig_cpl[b].matmul(&rho_eig);
                let mut raw: Vec<Line> = Vec::new();
                for m in 0..d {
                    for n in 0..d {
                        let w = eig_cpl[a].get(m, n) * eb_rho.get(n, m);
                        if w.norm() < 1e-16 {
                            continue;
                        }
                        raw.push(Line { nu: evals[m] - evals[n], weight: w });
                    }
                }
                raw.sort_by(|x, y| x.nu.partial_cmp(&y.nu).expect("finite frequencies"));
                let mut merged: Vec<Line> = Vec::new();
                for l in raw {
                    match merged.last_mut() {
                        Some(last) if (l.nu - last.nu).abs() <= merge_tol => {
                            last.weight += l.weight;
                        }
                        _ => merged.push(l),
                    }
                }
                lines.push(merged);
            }
        }

        Ok(Self {
            h_e: h_e.clone(),
            couplings: centered,
            rho_e,
            lambda,
            beta,
            tau_hint: 1.0,
            broadening: tolerances::LINE_BROADENING_TAU,
            lines,
        })
    }

    /// Declare the correlation-time scale used for quadrature cutoffs.
    pub fn with_tau_hint(mut self, tau: f64) -> Self {
        self.tau_hint = tau;
        self
    }

    pub fn with_broadening(mut self, eps: f64) -> Self {
        self.broadening = eps;
        self
    }

    pub fn h_e(&self) -> &CMatrix {
        &self.h_e
    }

    pub fn couplings(&self) -> &[CMatrix] {
        &self.couplings
    }

    pub fn rho_e(&self) -> &DensityMatrix {
        &self.rho_e
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// Lorentzian width used when this bath's point spectrum is broadened
    /// into transforms.
    pub fn broadening(&self) -> f64 {
        self.broadening
    }

    pub fn lines_pair(&self, a: usize, b: usize) -> &[Line] {
        &self.lines[a * self.couplings.len() + b]
    }
}

/// Environment two-time correlation model.
#[derive(Debug, Clone)]
pub enum CorrelationModel {
    Finite(FiniteBath),
    /// Exponential real part e^{-u/tau} with the high-temperature imaginary
    /// part -(beta/2 tau) e^{-u/tau}.
    ExponentialHighT { tau: f64, beta: f64, lambda: f64 },
}

impl CorrelationModel {
    pub fn exponential_high_t(tau: f64, beta: f64, lambda: f64) -> Result<Self> {
        if tau <= 0.0 || beta < 0.0 || lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "need tau > 0, beta >= 0, lambda >= 0; got tau={tau}, beta={beta}, lambda={lambda}"
            )));
        }
        Ok(Self::ExponentialHighT { tau, beta, lambda })
    }

    pub fn lambda(&self) -> f64 {
        match self {
            Self::Finite(fb) => fb.lambda,
            Self::ExponentialHighT { lambda, .. } => *lambda,
        }
    }

    pub fn with_lambda(&self, new_lambda: f64) -> Self {
        let mut m = self.clone();
        match &mut m {
            Self::Finite(fb) => fb.lambda = new_lambda,
            Self::ExponentialHighT { lambda, .. } => *lambda = new_lambda,
        }
        m
    }

    /// Correlation time scale used for cutoffs and validity checks.
    pub fn tau(&self) -> f64 {
        match self {
            Self::Finite(fb) => fb.tau_hint,
            Self::ExponentialHighT { tau, .. } => *tau,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            Self::Finite(fb) => fb.beta,
            Self::ExponentialHighT { beta, .. } => Some(*beta),
        }
    }

    pub fn n_couplings(&self) -> usize {
        match self {
            Self::Finite(fb) => fb.couplings.len(),
            Self::ExponentialHighT { .. } => 1,
        }
    }

    /// Bare (lambda-free) correlation <E_a(u+) E_b(0+)> for u >= 0.
    pub fn corr_pair(&self, a: usize, b: usize, u: f64) -> C64 {
        match self {
            Self::Finite(fb) => fb
                .lines_pair(a, b)
                .iter()
                .map(|l| l.weight * (C64::i() * (l.nu * u)).exp())
                .sum(),
            Self::ExponentialHighT { tau, beta, .. } => {
                debug_assert!(a == 0 && b == 0);
                C64::new(1.0, -beta / (2.0 * tau)) * (-u / tau).exp()
            }
        }
    }

    /// <E(u+) E(0+)> for the first (or only) coupling.
    pub fn corr_fn(&self, u: f64) -> C64 {
        self.corr_pair(0, 0, u)
    }

    /// Validity notes surfaced in reports; empty when all regimes hold.
    pub fn validity_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if let Self::ExponentialHighT { tau, beta, .. } = self {
            if beta / tau > 0.2 {
                w.push(format!(
                    "high-temperature form used outside its regime: beta/tau = {:.3} > 0.2",
                    beta / tau
                ));
            }
        }
        w
    }
}

/// Half-line Fourier transform setup shared by the rate and coefficient
/// integrals.
#[derive(Debug, Clone, Copy)]
pub struct HalfLineQuad {
    pub cfg: QuadConfig,
    /// upper integration limit
    pub cutoff: f64,
    /// exponential window e^{-rate * u} regularizing non-decaying
    /// correlations; 0 disables it
    pub window_rate: f64,
}

impl HalfLineQuad {
    pub fn for_tau(tau: f64) -> Self {
        let cutoff = tolerances::QUAD_CUTOFF_TAU * tau;
        Self { cfg: QuadConfig::default(), cutoff, window_rate: 1.0 / cutoff }
    }
}

/// Transition rates and Lamb shifts on a frequency grid, with diagnostics
/// from the transform stage.
#[derive(Debug, Clone)]
pub struct SpectralRates {
    entries: Vec<(f64, f64, f64)>, // (omega, w, h)
    pub est_error: f64,
    pub warnings: Vec<String>,
}

impl SpectralRates {
    /// Assemble from explicit (omega, w, h) triples, e.g. synthetic
    /// detailed-balance rates.
    pub fn from_entries(entries: Vec<(f64, f64, f64)>) -> Self {
        Self { entries, est_error: 0.0, warnings: Vec::new() }
    }

    fn lookup(&self, omega: f64) -> Result<(f64, f64)> {
        let scale = self.entries.iter().fold(0.0_f64, |m, e| m.max(e.0.abs()));
        let tol = 1e-8 * scale + 1e-12;
        for &(om, w, h) in &self.entries {
            if (om - omega).abs() <= tol {
                return Ok((w, h));
            }
        }
        Err(Error::MissingRate { omega })
    }

    /// Transition rate w(omega) >= 0 in the thermal case.
    pub fn w(&self, omega: f64) -> Result<f64> {
        Ok(self.lookup(omega)?.0)
    }

    /// Lamb shift h(omega).
    pub fn h(&self, omega: f64) -> Result<f64> {
        Ok(self.lookup(omega)?.1)
    }

    /// gamma(omega) = (w + i h)/2, exact by construction.
    pub fn gamma(&self, omega: f64) -> Result<C64> {
        let (w, h) = self.lookup(omega)?;
        Ok(C64::new(w / 2.0, h / 2.0))
    }

    /// The half-line transform lambda^2 int_0^inf <E(u)E(0)> e^{-i omega u} du
    /// = (w - i h)/2; this is the object that enters the generators.
    pub fn half_line_transform(&self, omega: f64) -> Result<C64> {
        let (w, h) = self.lookup(omega)?;
        Ok(C64::new(w / 2.0, -h / 2.0))
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.0).collect()
    }
}

/// w(omega) = 2 lambda^2 Re int_0^inf <E(u)E(0)> e^{-i omega u} du and
/// h(omega) = -2 lambda^2 Im of the same integral, evaluated in closed form
/// for the exponential model and by windowed adaptive quadrature for finite
/// baths.
pub fn gamma_rates(
    model: &CorrelationModel,
    omegas: &[f64],
    quad: &HalfLineQuad,
) -> Result<SpectralRates> {
    let tau = model.tau();
    if quad.cutoff < 20.0 * tau {
        return Err(Error::InvalidParameter(format!(
            "quadrature cutoff {:.3} is below 20 tau = {:.3}",
            quad.cutoff,
            20.0 * tau
        )));
    }
    let lam2 = model.lambda() * model.lambda();
    let mut entries = Vec::with_capacity(omegas.len());
    let mut est_error = 0.0;
    let mut warnings = Vec::new();
    match model {
        CorrelationModel::ExponentialHighT { tau, beta, .. } => {
            for &om in omegas {
                // lambda^2 (1 - i beta/2tau) tau / (1 + i omega tau)
                let t = C64::new(1.0, -beta / (2.0 * tau)) * *tau / C64::new(1.0, om * tau);
                let t = t * lam2;
                entries.push((om, 2.0 * t.re, -2.0 * t.im));
            }
        }
        CorrelationModel::Finite(_) => {
            let tail = model.corr_fn(quad.cutoff).norm() * (-quad.window_rate * quad.cutoff).exp();
            if tail > 1e-6 * model.corr_fn(0.0).norm().max(1e-300) {
                warnings.push(format!(
                    "correlation tail {tail:.3e} at the cutoff; windowed transform may be \
                     under-resolved"
                ));
            }
            for &om in omegas {
                let r = integrate_fourier(
                    |u| model.corr_fn(u) * (-quad.window_rate * u).exp(),
                    0.0,
                    quad.cutoff,
                    om,
                    &quad.cfg,
                );
                if !r.converged {
                    warnings.push(format!("transform at omega = {om} did not converge"));
                }
                est_error += r.est_error * lam2;
                let t = r.value * lam2;
                entries.push((om, 2.0 * t.re, -2.0 * t.im));
            }
        }
    }
    Ok(SpectralRates { entries, est_error, warnings })
}

/// Windowed line-sum transform: lambda-free
/// int_0^cutoff sum_p w_p e^{i nu_p u} e^{-eps u} e^{-i omega u} du in
/// closed form. Oracle for the quadrature path.
pub fn windowed_line_transform(lines: &[Line], omega: f64, eps: f64, cutoff: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for l in lines {
        let z = C64::new(eps, omega - l.nu);
        acc += l.weight * (C64::new(1.0, 0.0) - (-z * cutoff).exp()) / z;
    }
    acc
}

/// S(omega): full-line transform of Re <E(t)E(0)>. Closed form
/// 2 tau / (1 + tau^2 omega^2) for the exponential model; Lorentzian line
/// broadening for finite baths.
pub fn spectral_density(model: &CorrelationModel, omega: f64) -> f64 {
    match model {
        CorrelationModel::ExponentialHighT { tau, .. } => {
            2.0 * tau / (1.0 + tau * tau * omega * omega)
        }
        CorrelationModel::Finite(fb) => {
            let eps = fb.broadening;
            let mut acc = 0.0;
            for l in fb.lines_pair(0, 0) {
                let lo = eps / (eps * eps + (omega - l.nu) * (omega - l.nu));
                let hi = eps / (eps * eps + (omega + l.nu) * (omega + l.nu));
                let dlo = (l.nu - omega) / (eps * eps + (l.nu - omega) * (l.nu - omega));
                let dhi = (l.nu + omega) / (eps * eps + (l.nu + omega) * (l.nu + omega));
                acc += l.weight.re * (lo + hi) - l.weight.im * (dlo + dhi);
            }
            acc
        }
    }
}

/// The thermal spectral identity
/// int i Im<E(t)E(0)> e^{-i omega t} dt = (1 - e^{beta omega})/(1 + e^{beta omega}) S(omega);
/// returns the right-hand side. Errors for non-thermal finite baths.
pub fn fdt_im_spectrum(model: &CorrelationModel, omega: f64) -> Result<f64> {
    let beta = model.beta().ok_or(Error::NonThermal)?;
    Ok(-((beta * omega / 2.0).tanh()) * spectral_density(model, omega))
}

/// Reconstruct Im <E(t)E(0)> for a thermal finite bath from the real-part
/// line weights through the spectral identity: exact for point spectra.
pub fn fdt_im_corr_from_lines(fb: &FiniteBath, t: f64) -> Result<f64> {
    let beta = fb.beta.ok_or(Error::NonThermal)?;
    // real-part line weight at nu > 0: R(nu) = Re w(nu) + Re w(-nu)
    let lines = fb.lines_pair(0, 0);
    let mut acc = 0.0;
    for l in lines {
        if l.nu <= 0.0 {
            continue;
        }
        let partner = lines
            .iter()
            .find(|p| (p.nu + l.nu).abs() <= 1e-9 * (1.0 + l.nu.abs()))
            .map(|p| p.weight.re)
            .unwrap_or(0.0);
        let r = l.weight.re + partner;
        acc -= (beta * l.nu / 2.0).tanh() * r * (l.nu * t).sin();
    }
    Ok(acc)
}

/// Numeric inverse transform of the spectral identity:
/// Im corr(t) = -(1/pi) int_0^inf tanh(beta w / 2) S(w) sin(w t) dw,
/// truncated at `omega_cutoff`. Independent oracle for the residue series.
pub fn fdt_inverse_transform(
    s: impl Fn(f64) -> f64,
    beta: f64,
    t: f64,
    omega_cutoff: f64,
    cfg: &QuadConfig,
) -> f64 {
    // sin transform as the imaginary part of e^{+i t omega}
    let r = integrate_fourier(
        |om| C64::new((beta * om / 2.0).tanh() * s(om), 0.0),
        0.0,
        omega_cutoff,
        -t,
        cfg,
    );
    -r.value.im / core::f64::consts::PI
}

fn check_residue_poles(beta: f64, tau: f64) -> Result<()> {
    let ratio = beta / (2.0 * core::f64::consts::PI * tau);
    let twice = 2.0 * ratio;
    if (twice - twice.round()).abs() < 2e-6 && beta > 0.0 {
        return Err(Error::PoleCollision { ratio });
    }
    Ok(())
}

/// Residue-method susceptibility
/// I(t) = -tan(beta/2tau) e^{-t/tau}
///        - (4 tau / beta) sum_n e^{-(2n+1) pi t / beta} / (1 - (2n+1)^2 pi^2 tau^2 / beta^2),
/// truncated after `n_terms` terms or once a term drops below 1e-14.
pub fn susceptibility_residue(t: f64, beta: f64, tau: f64, n_terms: usize) -> Result<f64> {
    if t <= 0.0 || tau <= 0.0 || beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need t > 0, tau > 0, beta >= 0; got t={t}, beta={beta}, tau={tau}"
        )));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    check_residue_poles(beta, tau)?;
    let pi = core::f64::consts::PI;
    let mut acc = -(beta / (2.0 * tau)).tan() * (-t / tau).exp();
    for n in 0..n_terms {
        let k = (2 * n + 1) as f64;
        let term = (-k * pi * t / beta).exp() / (1.0 - k * k * pi * pi * tau * tau / (beta * beta));
        acc -= 4.0 * tau / beta * term;
        if term.abs() * 4.0 * tau / beta < 1e-14 {
            break;
        }
    }
    Ok(acc)
}

/// Same susceptibility through the incomplete-beta closed form; valid while
/// beta < pi tau so both beta-function arguments stay positive.
pub fn susceptibility_beta_form(t: f64, beta: f64, tau: f64, cfg: &QuadConfig) -> Result<f64> {
    if t <= 0.0 || tau <= 0.0 || beta < 0.0 {
        return Err(Error::InvalidParameter("need t > 0, tau > 0, beta >= 0".into()));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    check_residue_poles(beta, tau)?;
    let pi = core::f64::consts::PI;
    let c = beta / (2.0 * pi * tau);
    if c >= 0.5 {
        return Err(Error::InvalidParameter(format!(
            "closed form needs beta < pi tau (got beta/(pi tau) = {:.3})",
            2.0 * c
        )));
    }
    let z = (-2.0 * pi * t / beta).exp();
    let b_plus = incomplete_beta(z, 0.5 + c, 0.0, cfg)?;
    let b_minus = incomplete_beta(z, 0.5 - c, 0.0, cfg)?;
    Ok(-(beta / (2.0 * tau)).tan() * (-t / tau).exp()
        - ((t / tau).exp() * b_plus - (-t / tau).exp() * b_minus) / pi)
}

/// B_z(a, b) = int_0^z s^{a-1} (1-s)^{b-1} ds by adaptive quadrature, for
/// z in (0,1), a > 0 and b >= 0. The b = 0 endpoint singularity sits at
/// s = 1 and is never reached; an a < 1 power singularity at s = 0 is
/// removed by the substitution s = u^{1/a}.
pub fn incomplete_beta(z: f64, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    if !(0.0 < z && z < 1.0) || a <= 0.0 || b < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "incomplete beta needs z in (0,1), a > 0, b >= 0; got z={z}, a={a}, b={b}"
        )));
    }
    let value = if a < 1.0 {
        // int_0^{z^a} (1 - u^{1/a})^{b-1} du / a
        let r = integrate(
            |u| C64::new((1.0 - u.powf(1.0 / a)).powf(b - 1.0), 0.0),
            0.0,
            z.powf(a),
            cfg,
        );
        r.value.re / a
    } else {
        let r = integrate(
            |s| C64::new(s.powf(a - 1.0) * (1.0 - s).powf(b - 1.0), 0.0),
            0.0,
            z,
            cfg,
        );
        r.value.re
    };
    Ok(value)
}
