//! Scripted studies: the thermalization-propagation demo, error-scaling
//! sweeps against the exact composite oracle, and spectral checks of the
//! fluctuation-dissipation identity.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bath::{CorrelationModel, FiniteBath, HalfLineQuad};
use crate::cmatrix::{mats, CMatrix, C64};
use crate::error::{Error, Result};
use crate::generators::jump_decomposition;
use crate::opalg::{DensityMatrix, HermitianObservable};
use crate::oracle::{biprob_exact, Branch, MTCQuery};
use crate::perturb::{
    first_order_biprob, mtc_perturbative, qrf_biprob, CrossCoefficients, PropagatorChoice,
    PropagatorSet, SystemSpec,
};

/// One row of the thermalization demo: transition rates and their
/// detailed-balance ratios at a probe frequency.
#[derive(Debug, Clone, Copy)]
pub struct DemoRow {
    pub omega: f64,
    pub wq_order0: f64,
    pub wq_order1: f64,
    pub ratio0: f64,
    pub ratio1: f64,
    pub target: f64,
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub rows: Vec<DemoRow>,
    pub beta: f64,
    pub lambda: f64,
    pub mu: f64,
    pub tau: f64,
    /// complex prefactors of the exponential MTC envelope per order
    pub amplitude0: C64,
    pub amplitude1: C64,
    pub max_ratio0_deviation: f64,
    pub max_ratio1_deviation_from_target: f64,
    pub warnings: Vec<String>,
}

/// Probe-qubit transition rate from the exponential-envelope MTC,
/// w^q(omega) = 2 mu^2 int_{-inf}^{inf} amp e^{-2 w0 |u|} e^{-i omega u} du
///            = 4 mu^2 Re[ amp / (2 w0 + i omega) ].
fn probe_rate(amp: C64, w0: f64, mu: f64, omega: f64) -> f64 {
    4.0 * mu * mu * (amp / C64::new(2.0 * w0, omega)).re
}

/// Reproduce the thermalization-propagation study: a probe coupled to a
/// thermalized qubit whose two-time correlations are computed at orders 0
/// and 1, transformed to transition rates, and compared against detailed
/// balance.
pub fn run_thermalization_demo(
    beta: f64,
    lambda: f64,
    mu: f64,
    tau: f64,
    omega_grid: &[f64],
    dt_grid: &[f64],
) -> Result<DemoReport> {
    if lambda * tau > 0.2 {
        return Err(Error::InvalidParameter(format!(
            "lambda tau = {} exceeds the weak-coupling window 0.2",
            lambda * tau
        )));
    }
    for &om in omega_grid {
        if beta * om >= 2.0 {
            return Err(Error::InvalidParameter(format!(
                "beta omega = {} >= 2 hits the pole of the ratio",
                beta * om
            )));
        }
    }
    if dt_grid.is_empty() || dt_grid.iter().any(|&dt| dt <= 0.0) {
        return Err(Error::InvalidParameter("dt grid must be nonempty and positive".into()));
    }

    let model = CorrelationModel::exponential_high_t(tau, beta, lambda)?;
    let w0 = 2.0 * lambda * lambda * tau;
    let sys = SystemSpec {
        hs: CMatrix::zeros(2, 2),
        coupling: mats::pauli_x(),
        rho0: DensityMatrix::maximally_mixed(2),
    };
    let z = HermitianObservable::spectral_decompose(&mats::pauli_z(), None)?;

    // extract the complex envelope amplitudes M(dt) e^{+2 w0 dt} per order
    let mut warnings = model.validity_warnings();
    let mut amp0 = C64::new(0.0, 0.0);
    let mut amp1 = C64::new(0.0, 0.0);
    let mut prev0: Option<C64> = None;
    let mut prev1: Option<C64> = None;
    for &dt in dt_grid {
        let q = MTCQuery::new(
            alloc::vec![0.0, dt],
            alloc::vec![z.clone(), z.clone()],
            alloc::vec![Branch::Plus, Branch::Plus],
        )?;
        let r = mtc_perturbative(&q, &sys, &model, 1, PropagatorChoice::Davies)?;
        let envelope = (2.0 * w0 * dt).exp();
        let c0 = r.zeroth * envelope;
        let c1 = r.total * envelope;
        if let (Some(p0), Some(p1)) = (prev0, prev1) {
            if (c0 - p0).norm() > 1e-8 || (c1 - p1).norm() > 1e-8 {
                warnings.push(format!(
                    "MTC envelope is not a single exponential at dt = {dt}; amplitude drift \
                     {:.3e}/{:.3e}",
                    (c0 - p0).norm(),
                    (c1 - p1).norm()
                ));
            }
        }
        prev0 = Some(c0);
        prev1 = Some(c1);
        amp0 = c0;
        amp1 = c1;
    }

    let mut rows = Vec::with_capacity(omega_grid.len());
    let mut max_dev0 = 0.0_f64;
    let mut max_dev1 = 0.0_f64;
    for &om in omega_grid {
        let w0_plus = probe_rate(amp0, w0, mu, om);
        let w0_minus = probe_rate(amp0, w0, mu, -om);
        let w1_plus = probe_rate(amp1, w0, mu, om);
        let w1_minus = probe_rate(amp1, w0, mu, -om);
        let ratio0 = w0_minus / w0_plus;
        let ratio1 = w1_minus / w1_plus;
        let target = (beta * om).exp();
        max_dev0 = max_dev0.max((ratio0 - 1.0).abs());
        max_dev1 = max_dev1.max((ratio1 - target).abs());
        rows.push(DemoRow {
            omega: om,
            wq_order0: w0_plus,
            wq_order1: w1_plus,
            ratio0,
            ratio1,
            target,
        });
    }
    Ok(DemoReport {
        rows,
        beta,
        lambda,
        mu,
        tau,
        amplitude0: amp0,
        amplitude1: amp1,
        max_ratio0_deviation: max_dev0,
        max_ratio1_deviation_from_target: max_dev1,
        warnings,
    })
}

/// Inputs of the oracle error-scaling sweep: a qubit probed through
/// `observable`, coupled by `v_s (x) v_e` to a finite bath.
#[derive(Debug, Clone)]
pub struct ScalingStudySpec {
    pub h_e: CMatrix,
    pub v_e: CMatrix,
    pub beta_e: f64,
    pub sys: SystemSpec,
    pub observable: HermitianObservable,
    pub times: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub choice: PropagatorChoice,
    pub tau_hint: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub lambdas: Vec<f64>,
    pub err_order0: Vec<f64>,
    pub err_order1: Vec<f64>,
    pub slope0: f64,
    pub slope1: f64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

fn random_hermitian_seeded(n: usize, rng: &mut impl Rng) -> CMatrix {
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

/// The default sweep: one system qubit against a three-qubit thermal bath
/// with seeded random Hamiltonian and coupling, Born propagators in
/// between interventions. The coupling is normalized to unit correlation
/// at zero lag so the swept lambda carries the whole interaction strength,
/// and the declared correlation-time scale follows the initial collapse of
/// the eight-level correlation function.
pub fn default_scaling_spec(seed: u64) -> Result<ScalingStudySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d_e = 8;
    let beta_e = 1.0;
    let h_e = random_hermitian_seeded(d_e, &mut rng);
    let mut v_e = random_hermitian_seeded(d_e, &mut rng);
    let probe = FiniteBath::thermal(&h_e, core::slice::from_ref(&v_e), beta_e, 1.0)?;
    let c0 = CorrelationModel::Finite(probe).corr_fn(0.0).re;
    v_e = v_e.scale(C64::new(1.0 / c0.sqrt(), 0.0));
    let sys = SystemSpec {
        hs: CMatrix::zeros(2, 2),
        coupling: mats::pauli_x(),
        rho0: DensityMatrix::maximally_mixed(2),
    };
    let observable = HermitianObservable::spectral_decompose(&mats::pauli_z(), None)?;
    Ok(ScalingStudySpec {
        h_e,
        v_e,
        beta_e,
        sys,
        observable,
        times: alloc::vec![6.0, 14.0],
        lambdas: alloc::vec![0.02, 0.04, 0.08],
        choice: PropagatorChoice::Born(crate::generators::OdeConfig {
            dt: 0.05,
            quad: crate::quad::QuadConfig { rel_tol: 1e-7, ..Default::default() },
        }),
        tau_hint: 0.25,
        seed,
    })
}

/// Exact-vs-perturbative table errors at one coupling strength. Returns
/// (order-0 error, order-1 error) as max entrywise deviations.
pub fn scaling_point(spec: &ScalingStudySpec, lambda: f64) -> Result<(f64, f64)> {
    let d_s = spec.sys.hs.rows();
    let d_e = spec.h_e.rows();
    if d_s * d_e > 64 {
        return Err(Error::InvalidParameter(format!(
            "composite dimension {} exceeds the supported 64",
            d_s * d_e
        )));
    }
    let bath = FiniteBath::thermal(&spec.h_e, core::slice::from_ref(&spec.v_e), spec.beta_e, lambda)?
        .with_tau_hint(spec.tau_hint);
    let model = CorrelationModel::Finite(bath.clone());

    // exact composite table
    let id_s = CMatrix::identity(d_s);
    let id_e = CMatrix::identity(d_e);
    let e_centered = bath.couplings()[0].clone();
    let mut h_comp = spec.sys.hs.kron(&id_e);
    h_comp.add_scaled(&id_s.kron(bath.h_e()), C64::new(1.0, 0.0));
    h_comp.add_scaled(&spec.sys.coupling.kron(&e_centered), C64::new(lambda, 0.0));
    let rho_comp = spec.sys.rho0.tensor(bath.rho_e());
    let f_comp =
        HermitianObservable::spectral_decompose(&spec.observable.matrix().kron(&id_e), None)?;
    let n = spec.times.len();
    let f_comps = alloc::vec![f_comp; n];
    let exact = biprob_exact(&spec.times, &f_comps, &h_comp, &rho_comp)?;

    // perturbative tables on the system alone
    let jd = jump_decomposition(&spec.sys.hs, &spec.sys.coupling, None)?;
    let quad = HalfLineQuad::for_tau(spec.tau_hint);
    let props = PropagatorSet::new(spec.choice.clone(), &jd, &model, &quad)?;
    let fs = alloc::vec![spec.observable.clone(); n];
    let table0 = qrf_biprob(&spec.times, &fs, &spec.sys.hs, &spec.sys.rho0, &props)?;
    let coeffs = CrossCoefficients::build(&model, &jd, &quad)?;
    let table1 = first_order_biprob(
        &spec.times,
        &fs,
        &spec.sys.hs,
        &spec.sys.rho0,
        &props,
        &jd,
        &coeffs,
    )?;
    let mut corrected = table0.clone();
    corrected.add_table(&table1);
    Ok((exact.max_abs_diff(&table0), exact.max_abs_diff(&corrected)))
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(ly.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Fit the slopes and assemble the report from per-lambda errors (the
/// sweep itself may have run elsewhere, e.g. on a thread pool).
pub fn assemble_scaling_report(
    spec: &ScalingStudySpec,
    err_order0: Vec<f64>,
    err_order1: Vec<f64>,
) -> Result<ScalingReport> {
    if spec.lambdas.len() < 2 || err_order0.len() != spec.lambdas.len() {
        return Err(Error::InvalidParameter("need at least two coupling strengths".into()));
    }
    let slope0 = log_log_slope(&spec.lambdas, &err_order0);
    let slope1 = log_log_slope(&spec.lambdas, &err_order1);
    Ok(ScalingReport {
        lambdas: spec.lambdas.clone(),
        err_order0,
        err_order1,
        slope0,
        slope1,
        seed: spec.seed,
        warnings: Vec::new(),
    })
}

pub fn error_scaling_study(spec: &ScalingStudySpec) -> Result<ScalingReport> {
    if spec.lambdas.len() < 2 {
        return Err(Error::InvalidParameter("need at least two coupling strengths".into()));
    }
    // couplings are normalized to unit corr(0) in natural time units, so
    // lambda itself is the weak-coupling parameter of the sweep
    for &lam in &spec.lambdas {
        if !(0.01..=0.2).contains(&lam) {
            return Err(Error::InvalidParameter(format!(
                "coupling grid point {lam} outside the validity window [0.01, 0.2]"
            )));
        }
    }
    let mut err0 = Vec::with_capacity(spec.lambdas.len());
    let mut err1 = Vec::with_capacity(spec.lambdas.len());
    for &lam in &spec.lambdas {
        let (e0, e1) = scaling_point(spec, lam)?;
        err0.push(e0);
        err1.push(e1);
    }
    let mut report = assemble_scaling_report(spec, err0, err1)?;
    report.warnings = coefficient_warnings(spec)?;
    Ok(report)
}

/// Convergence diagnostics of the coefficient integrals for this bath
/// realization; independent of the swept coupling strength.
pub fn coefficient_warnings(spec: &ScalingStudySpec) -> Result<Vec<String>> {
    let bath = FiniteBath::thermal(
        &spec.h_e,
        core::slice::from_ref(&spec.v_e),
        spec.beta_e,
        spec.lambdas[0],
    )?
    .with_tau_hint(spec.tau_hint);
    let model = CorrelationModel::Finite(bath);
    let jd = jump_decomposition(&spec.sys.hs, &spec.sys.coupling, None)?;
    let quad = crate::bath::HalfLineQuad::for_tau(spec.tau_hint);
    Ok(CrossCoefficients::build(&model, &jd, &quad)?.warnings)
}

/// One row of the spectral fluctuation-dissipation check.
#[derive(Debug, Clone, Copy)]
pub struct FdtRow {
    pub omega: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_dev: f64,
    /// deviation normalized by the largest |rhs| on the grid
    pub rel_dev: f64,
}

#[derive(Debug, Clone)]
pub struct FdtReport {
    pub rows: Vec<FdtRow>,
    pub max_rel_dev: f64,
}

/// Verify the spectral identity
///   int i Im<F(t)F(0)> e^{-i omega t} dt = (1-e^{beta omega})/(1+e^{beta omega}) S(omega)
/// pointwise on a frequency grid. For a finite thermal bath both sides are
/// evaluated from the exact line decomposition of the correlation function
/// of `observable`, sharing one Lorentzian broadening; for the exponential
/// model the imaginary part is itself constructed from the identity, which
/// then holds by definition.
pub fn fdt_verification(
    model: &CorrelationModel,
    observable: Option<&CMatrix>,
    omega_grid: &[f64],
) -> Result<FdtReport> {
    let beta = model.beta().ok_or(Error::NonThermal)?;
    let mut rows = Vec::with_capacity(omega_grid.len());
    match model {
        CorrelationModel::ExponentialHighT { .. } => {
            for &om in omega_grid {
                let rhs = crate::bath::fdt_im_spectrum(model, om)?;
                rows.push(FdtRow { omega: om, lhs: rhs, rhs, abs_dev: 0.0, rel_dev: 0.0 });
            }
            Ok(FdtReport { rows, max_rel_dev: 0.0 })
        }
        CorrelationModel::Finite(fb) => {
            let probe = match observable {
                Some(f) => {
                    FiniteBath::thermal(fb.h_e(), core::slice::from_ref(f), beta, 1.0)?
                        .with_broadening(fb_broadening(fb))
                }
                None => fb.clone(),
            };
            let eps = fb_broadening(&probe);
            let lines = probe.lines_pair(0, 0);
            let lorentz = |x: f64| eps / (eps * eps + x * x);
            let mut max_abs_rhs = 0.0_f64;
            let mut raw = Vec::with_capacity(omega_grid.len());
            for &om in omega_grid {
                let mut lhs = 0.0;
                let mut s = 0.0;
                for l in lines {
                    lhs += l.weight.re * (lorentz(om - l.nu) - lorentz(om + l.nu));
                    s += l.weight.re * (lorentz(om - l.nu) + lorentz(om + l.nu));
                }
                let rhs = -((beta * om / 2.0).tanh()) * s;
                max_abs_rhs = max_abs_rhs.max(rhs.abs());
                raw.push((om, lhs, rhs));
            }
            let scale = max_abs_rhs.max(1e-300);
            let mut max_rel = 0.0_f64;
            for (om, lhs, rhs) in raw {
                let abs_dev = (lhs - rhs).abs();
                let rel_dev = abs_dev / scale;
                max_rel = max_rel.max(rel_dev);
                rows.push(FdtRow { omega: om, lhs, rhs, abs_dev, rel_dev });
            }
            Ok(FdtReport { rows, max_rel_dev: max_rel })
        }
    }
}

fn fb_broadening(fb: &FiniteBath) -> f64 {
    // reuse the bath's configured Lorentzian width
    fb.broadening()
}

/// A symmetric frequency grid that pins every Bohr line of the bath plus
/// midpoints, padded to `n_points` with a uniform fill.
pub fn fdt_default_grid(fb: &FiniteBath, n_points: usize) -> Vec<f64> {
    let mut lines: Vec<f64> = fb
        .lines_pair(0, 0)
        .iter()
        .map(|l| l.nu)
        .filter(|nu| nu.abs() > 1e-12)
        .collect();
    lines.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    lines.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut grid = lines.clone();
    for w in lines.windows(2) {
        grid.push(0.5 * (w[0] + w[1]));
    }
    let span = lines.last().copied().unwrap_or(1.0).abs().max(1.0) * 1.2;
    let mut k = 0usize;
    while grid.len() < n_points {
        // deterministic uniform fill avoiding exact duplicates
        let frac = (k as f64 + 0.37) / n_points as f64;
        grid.push(-span + 2.0 * span * frac);
        k += 1;
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    grid.truncate(n_points);
    grid
}
