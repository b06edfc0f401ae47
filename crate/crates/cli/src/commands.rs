//! Command implementations: each consumes the validated config, runs a
//! library routine, and emits one deterministic CSV artifact.

use std::path::PathBuf;

use mtcorr_core::bath::{
    fdt_inverse_transform, susceptibility_residue, CorrelationModel, HalfLineQuad,
};
use mtcorr_core::experiments::{
    assemble_scaling_report, default_scaling_spec, error_scaling_study, fdt_default_grid,
    fdt_verification, run_thermalization_demo, scaling_point, ScalingReport,
};
use mtcorr_core::generators::jump_decomposition;
use mtcorr_core::oracle::{BiProbTable, MTCQuery};
use mtcorr_core::perturb::{
    first_order_biprob, mtc_perturbative_with, qrf_biprob, CrossCoefficients, PropagatorSet,
};
use mtcorr_core::quad::QuadConfig;

use crate::config::{build, build_model, RunConfig};
use crate::csvout::CsvWriter;
use crate::CliError;

pub fn demo_thermalization(c: &RunConfig, w: &CsvWriter) -> Result<PathBuf, CliError> {
    if c.model.kind != "exponential" {
        return Err(CliError::validation(
            "demo-thermalization requires model.kind = 'exponential'".into(),
        ));
    }
    let n = c.demo.omega_points;
    let omegas: Vec<f64> = (0..n)
        .map(|i| {
            c.demo.omega_min
                + (c.demo.omega_max - c.demo.omega_min) * i as f64 / (n - 1) as f64
        })
        .collect();
    let report = run_thermalization_demo(
        c.model.beta,
        c.model.lambda,
        c.demo.mu,
        c.model.tau,
        &omegas,
        &c.demo.dt_grid,
    )
    .map_err(CliError::numeric_from)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                w.fmt(r.omega),
                w.fmt(r.wq_order0),
                w.fmt(r.wq_order1),
                w.fmt(r.ratio0),
                w.fmt(r.ratio1),
                w.fmt(r.target),
            ]
        })
        .collect();
    let mut comments = vec![format!(
        "beta={} lambda={} mu={} tau={}",
        report.beta, report.lambda, report.mu, report.tau
    )];
    comments.extend(report.warnings.iter().cloned());
    w.write(
        "demo_thermalization.csv",
        &["omega", "wq_order0", "wq_order1", "ratio0", "ratio1", "target_exp_beta_omega"],
        &rows,
        &comments,
    )
}

fn half_line_quad(c: &RunConfig, tau: f64) -> HalfLineQuad {
    let cutoff = c.numerics.quad_cutoff_tau * tau;
    HalfLineQuad {
        cfg: QuadConfig { rel_tol: c.numerics.quad_rel_tol, ..QuadConfig::default() },
        cutoff,
        window_rate: 1.0 / cutoff,
    }
}

pub fn mtc(c: &RunConfig, w: &CsvWriter) -> Result<PathBuf, CliError> {
    let built = build(c)?;
    let q = MTCQuery::new(c.query.times.clone(), built.observables.clone(), built.branches.clone())
        .map_err(|e| CliError::validation(format!("query: {e}")))?;
    let quad = half_line_quad(c, built.model.tau());
    let r = mtc_perturbative_with(
        &q,
        &built.sys,
        &built.model,
        c.query.order,
        built.choice.clone(),
        &quad,
    )
    .map_err(CliError::numeric_from)?;
    let row = vec![
        w.fmt(r.zeroth.re),
        w.fmt(r.zeroth.im),
        w.fmt(r.first_correction.re),
        w.fmt(r.first_correction.im),
        w.fmt(r.total.re),
        w.fmt(r.total.im),
        w.fmt(r.lambda_tau),
    ];
    let mut comments = vec![format!(
        "times={:?} order={} propagator={}",
        c.query.times, c.query.order, c.query.propagator
    )];
    comments.extend(r.warnings.iter().cloned());
    w.write(
        "mtc.csv",
        &[
            "zeroth_re",
            "zeroth_im",
            "correction_re",
            "correction_im",
            "total_re",
            "total_im",
            "lambda_tau",
        ],
        &[row],
        &comments,
    )
}

fn biprob_columns(n: usize) -> Vec<String> {
    let mut cols = Vec::new();
    for j in (1..=n).rev() {
        cols.push(format!("f{j}p"));
    }
    for j in (1..=n).rev() {
        cols.push(format!("f{j}m"));
    }
    cols.push("re".into());
    cols.push("im".into());
    cols
}

fn biprob_rows(table: &BiProbTable, w: &CsvWriter) -> Vec<Vec<String>> {
    let size = table.branch_size();
    let n = table.n_times();
    let mut rows = Vec::with_capacity(size * size);
    for p in 0..size {
        let pi = table.unflat(p);
        for m in 0..size {
            let mi = table.unflat(m);
            let mut row = Vec::with_capacity(2 * n + 2);
            for j in (0..n).rev() {
                row.push(w.fmt(table.spectra()[j][pi[j]]));
            }
            for j in (0..n).rev() {
                row.push(w.fmt(table.spectra()[j][mi[j]]));
            }
            let v = table.get_flat(p, m);
            row.push(w.fmt(v.re));
            row.push(w.fmt(v.im));
            rows.push(row);
        }
    }
    rows
}

pub fn biprob(c: &RunConfig, w: &CsvWriter) -> Result<PathBuf, CliError> {
    let built = build(c)?;
    let jd = jump_decomposition(&built.sys.hs, &built.sys.coupling, None)
        .map_err(CliError::numeric_from)?;
    let quad = half_line_quad(c, built.model.tau());
    let props = PropagatorSet::new(built.choice.clone(), &jd, &built.model, &quad)
        .map_err(CliError::numeric_from)?;
    let mut table = qrf_biprob(
        &c.query.times,
        &built.observables,
        &built.sys.hs,
        &built.sys.rho0,
        &props,
    )
    .map_err(CliError::numeric_from)?;
    let mut comments = vec![format!(
        "times={:?} order={} propagator={}",
        c.query.times, c.query.order, c.query.propagator
    )];
    comments.extend(mtcorr_core::perturb::separation_warnings(
        &c.query.times,
        built.model.tau(),
    ));
    comments.extend(built.model.validity_warnings());
    if c.query.order >= 1 {
        let coeffs = CrossCoefficients::build(&built.model, &jd, &quad)
            .map_err(CliError::numeric_from)?;
        comments.extend(coeffs.warnings.iter().cloned());
        let corr = first_order_biprob(
            &c.query.times,
            &built.observables,
            &built.sys.hs,
            &built.sys.rho0,
            &props,
            &jd,
            &coeffs,
        )
        .map_err(CliError::numeric_from)?;
        table.add_table(&corr);
    }
    let cols = biprob_columns(table.n_times());
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let rows = biprob_rows(&table, w);
    w.write("biprob.csv", &col_refs, &rows, &comments)
}

fn thread_cap() -> usize {
    std::env::var("MTCORR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

pub fn scaling(c: &RunConfig, w: &CsvWriter) -> Result<PathBuf, CliError> {
    let mut spec = default_scaling_spec(c.scaling.seed).map_err(CliError::numeric_from)?;
    spec.lambdas = c.scaling.lambdas.clone();
    let cap = thread_cap().min(spec.lambdas.len().max(1));
    let report: ScalingReport = if cap <= 1 {
        error_scaling_study(&spec).map_err(CliError::numeric_from)?
    } else {
        // the coupling strengths are independent; run them on a bounded
        // pool and reassemble in grid order
        let lambdas = spec.lambdas.clone();
        let spec_ref = &spec;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(lambdas.len());
        for chunk in lambdas.chunks(cap) {
            let chunk_results: Vec<Result<(f64, f64), mtcorr_core::Error>> =
                std::thread::scope(|scope| {
                    let handles: Vec<_> = chunk
                        .iter()
                        .map(|&lam| scope.spawn(move || scaling_point(spec_ref, lam)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("scaling worker panicked"))
                        .collect()
                });
            for r in chunk_results {
                pairs.push(r.map_err(CliError::numeric_from)?);
            }
        }
        let (err0, err1): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut r =
            assemble_scaling_report(&spec, err0, err1).map_err(CliError::numeric_from)?;
        r.warnings = mtcorr_core::experiments::coefficient_warnings(&spec)
            .map_err(CliError::numeric_from)?;
        r
    };
    let rows: Vec<Vec<String>> = report
        .lambdas
        .iter()
        .zip(report.err_order0.iter().zip(report.err_order1.iter()))
        .map(|(lam, (e0, e1))| vec![w.fmt(*lam), w.fmt(*e0), w.fmt(*e1)])
        .collect();
    let mut comments = vec![
        format!("seed={}", report.seed),
        format!("slope_order0={}", w.fmt(report.slope0)),
        format!("slope_order1={}", w.fmt(report.slope1)),
    ];
    comments.extend(report.warnings.iter().cloned());
    w.write("scaling.csv", &["lambda", "err_order0", "err_order1"], &rows, &comments)
}

pub fn fdt_check(c: &RunConfig, w: &CsvWriter) -> Result<PathBuf, CliError> {
    let model = build_model(c)?;
    let grid = match &model {
        CorrelationModel::Finite(fb) => fdt_default_grid(fb, c.fdt.omega_points),
        CorrelationModel::ExponentialHighT { tau, .. } => {
            let n = c.fdt.omega_points;
            (0..n)
                .map(|i| (-4.0 + 8.0 * i as f64 / (n - 1) as f64) / tau)
                .collect()
        }
    };
    let observable = match &c.fdt.observable {
        Some(spec) => Some(spec.build("fdt.observable")?),
        None => None,
    };
    let report = fdt_verification(&model, observable.as_ref(), &grid)
        .map_err(CliError::numeric_from)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![w.fmt(r.omega), w.fmt(r.lhs), w.fmt(r.rhs), w.fmt(r.abs_dev), w.fmt(r.rel_dev)]
        })
        .collect();
    let comments = vec![format!("max_rel_dev={}", w.fmt(report.max_rel_dev))];
    w.write("fdt_check.csv", &["omega", "lhs", "rhs", "abs_dev", "rel_dev"], &rows, &comments)
}

pub fn susceptibility(c: &RunConfig, w: &CsvWriter) -> Result<PathBuf, CliError> {
    if c.model.kind != "exponential" {
        return Err(CliError::validation(
            "susceptibility requires model.kind = 'exponential'".into(),
        ));
    }
    let (tau, beta) = (c.model.tau, c.model.beta);
    let s = &c.susceptibility;
    let cfg = QuadConfig { rel_tol: 1e-10, ..QuadConfig::default() };
    let spectral = |om: f64| 2.0 * tau / (1.0 + tau * tau * om * om);
    let mut rows = Vec::with_capacity(s.t_points);
    for i in 0..s.t_points {
        let t = s.t_min + (s.t_max - s.t_min) * i as f64 / (s.t_points.max(2) - 1) as f64;
        let residue =
            susceptibility_residue(t, beta, tau, s.n_terms).map_err(CliError::numeric_from)?;
        let high_t = -beta / (2.0 * tau) * (-t / tau).exp();
        let numeric = fdt_inverse_transform(spectral, beta, t, s.omega_cutoff, &cfg);
        rows.push(vec![
            w.fmt(t),
            w.fmt(residue),
            w.fmt(high_t),
            w.fmt(numeric),
            w.fmt((residue - numeric).abs()),
        ]);
    }
    w.write(
        "susceptibility.csv",
        &["t", "residue_sum", "highT_limit", "numeric_ft", "abs_diff"],
        &rows,
        &[],
    )
}
