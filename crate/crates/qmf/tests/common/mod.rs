//! Shared oracles for integration tests: brute-force searches and
//! finite-difference machinery kept independent of the library internals.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Distance loss for a one-latent-dimension surface, scalar math only.
pub fn h_1d(c: &[f64], a: &[f64], b: &[f64], x: &[f64], tau: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..c.len() {
        let r = x[k] - c[k] - a[k] * tau - b[k] * tau * tau;
        acc += r * r;
    }
    acc
}

/// Global minimizer of `h_1d` over `[lo, hi]` by exhaustive grid scan at
/// `step`, refined by golden-section search on the winning bracket.
pub fn grid_min_1d(c: &[f64], a: &[f64], b: &[f64], x: &[f64], lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let n = ((hi - lo) / step).round() as usize;
    let mut best_tau = lo;
    let mut best_h = f64::INFINITY;
    for i in 0..=n {
        let tau = lo + step * i as f64;
        let h = h_1d(c, a, b, x, tau);
        if h < best_h {
            best_h = h;
            best_tau = tau;
        }
    }
    golden_refine(
        |t| h_1d(c, a, b, x, t),
        (best_tau - step).max(lo),
        (best_tau + step).min(hi),
    )
}

/// Golden-section search for a unimodal bracket, run to near machine width.
pub fn golden_refine(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Columns of `m` as owned vectors.
pub fn columns(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    m.column_iter().map(|c| c.into_owned()).collect()
}
