//! Adaptive Gauss-Kronrod quadrature (G7/K15) for complex- and
//! matrix-valued integrands, with panel presplitting for oscillatory
//! half-line Fourier transforms.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::cmatrix::{CMatrix, C64, ZERO};
use crate::tolerances;

// K15 abscissae (positive half) and weights; G7 reuses every other node.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { rel_tol: tolerances::QUAD_REL, abs_tol: 1e-14, max_depth: 40 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub est_error: f64,
    pub converged: bool,
}

fn kronrod_panel(f: &mut impl FnMut(f64) -> C64, a: f64, b: f64) -> (C64, C64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k15 = ZERO;
    let mut g7 = ZERO;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        if x == 0.0 {
            let fc = f(c);
            k15 += fc * wk;
            g7 += fc * WG[3];
            continue;
        }
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        k15 += (f1 + f2) * wk;
        if i % 2 == 1 {
            g7 += (f1 + f2) * WG[i / 2];
        }
    }
    (k15 * h, g7 * h)
}

fn adapt(
    f: &mut impl FnMut(f64) -> C64,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
    depth: u32,
    out: &mut QuadResult,
) {
    let (k15, g7) = kronrod_panel(f, a, b);
    let err = (k15 - g7).norm();
    let tol = cfg.abs_tol.max(cfg.rel_tol * k15.norm());
    if err <= tol || depth >= cfg.max_depth {
        out.value += k15;
        out.est_error += err;
        if depth >= cfg.max_depth && err > tol {
            out.converged = false;
        }
        return;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, cfg, depth + 1, out);
    adapt(f, mid, b, cfg, depth + 1, out);
}

/// Adaptive integral of a complex-valued function over [a, b].
pub fn integrate(mut f: impl FnMut(f64) -> C64, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    let mut out = QuadResult { value: ZERO, est_error: 0.0, converged: true };
    if a == b {
        return out;
    }
    adapt(&mut f, a, b, cfg, 0, &mut out);
    out
}

/// Integral of f(u) e^{-i omega u} over [a, b], presplit into panels no
/// longer than one oscillation period so the adaptive rule sees a tame
/// integrand.
pub fn integrate_fourier(
    mut f: impl FnMut(f64) -> C64,
    a: f64,
    b: f64,
    omega: f64,
    cfg: &QuadConfig,
) -> QuadResult {
    let mut out = QuadResult { value: ZERO, est_error: 0.0, converged: true };
    if a == b {
        return out;
    }
    let span = b - a;
    let period = if omega.abs() > 0.0 { 2.0 * core::f64::consts::PI / omega.abs() } else { f64::INFINITY };
    let n_panels = if span > period {
        ((span / period).ceil() as usize).min(65536)
    } else {
        1
    };
    let step = span / n_panels as f64;
    let mut g = |u: f64| f(u) * (-C64::i() * (omega * u)).exp();
    for k in 0..n_panels {
        let lo = a + step * k as f64;
        let hi = if k + 1 == n_panels { b } else { lo + step };
        adapt(&mut g, lo, hi, cfg, 0, &mut out);
    }
    out
}

/// Matrix-valued adaptive quadrature; the error control uses the Frobenius
/// norm of the Kronrod/Gauss difference.
pub fn integrate_matrix(
    mut f: impl FnMut(f64) -> CMatrix,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> (CMatrix, f64, bool) {
    struct Frame {
        a: f64,
        b: f64,
        depth: u32,
    }
    let probe = f(0.5 * (a + b));
    let (rows, cols) = (probe.rows(), probe.cols());
    let mut acc = CMatrix::zeros(rows, cols);
    let mut est = 0.0;
    let mut converged = true;
    if a == b {
        return (acc, est, converged);
    }
    let mut stack: Vec<Frame> = alloc::vec![Frame { a, b, depth: 0 }];
    while let Some(fr) = stack.pop() {
        let c = 0.5 * (fr.a + fr.b);
        let h = 0.5 * (fr.b - fr.a);
        let mut k15 = CMatrix::zeros(rows, cols);
        let mut g7 = CMatrix::zeros(rows, cols);
        for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
            if x == 0.0 {
                let fc = f(c);
                k15.add_scaled(&fc, C64::new(wk, 0.0));
                g7.add_scaled(&fc, C64::new(WG[3], 0.0));
                continue;
            }
            let f1 = f(c - h * x);
            let f2 = f(c + h * x);
            let s = &f1 + &f2;
            k15.add_scaled(&s, C64::new(wk, 0.0));
            if i % 2 == 1 {
                g7.add_scaled(&s, C64::new(WG[i / 2], 0.0));
            }
        }
        k15.scale_mut(C64::new(h, 0.0));
        g7.scale_mut(C64::new(h, 0.0));
        let err = (&k15 - &g7).frobenius_norm();
        let tol = cfg.abs_tol.max(cfg.rel_tol * k15.frobenius_norm());
        if err <= tol || fr.depth >= cfg.max_depth {
            acc.add_scaled(&k15, C64::new(1.0, 0.0));
            est += err;
            if fr.depth >= cfg.max_depth && err > tol {
                converged = false;
            }
        } else {
            stack.push(Frame { a: fr.a, b: c, depth: fr.depth + 1 });
            stack.push(Frame { a: c, b: fr.b, depth: fr.depth + 1 });
        }
    }
    (acc, est, converged)
}
