//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saddle_ssn::splitting::{residual, DrsContext};
use saddle_ssn::{LiftedPoint, MatrixGame};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_game(rng: &mut impl Rng, n: usize, m: usize) -> MatrixGame {
    MatrixGame::new(DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))).unwrap()
}

pub fn random_point(rng: &mut impl Rng, dim: usize, scale: f64) -> LiftedPoint {
    LiftedPoint::new(DVector::from_fn(dim, |_, _| rng.gen_range(-scale..scale))).unwrap()
}

pub fn random_simplex_point(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    let w = DVector::from_fn(d, |_, _| -rng.gen_range(1e-12f64..1.0).ln());
    let s = w.sum();
    w / s
}

/// Gap by enumerating every pure response with plain loops.
pub fn brute_gap(a: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let (n, m) = a.shape();
    let mut best_col = f64::NEG_INFINITY;
    for j in 0..m {
        let mut v = 0.0;
        for i in 0..n {
            v += x[i] * a[(i, j)];
        }
        best_col = best_col.max(v);
    }
    let mut best_row = f64::INFINITY;
    for i in 0..n {
        let mut v = 0.0;
        for j in 0..m {
            v += a[(i, j)] * y[j];
        }
        best_row = best_row.min(v);
    }
    best_col - best_row
}

/// Threshold `τ` with `Σ max(p_i − τ, 0) = 1`, found by bisection.
pub fn bisection_threshold(p: &[f64]) -> f64 {
    let mass = |t: f64| p.iter().map(|v| (v - t).max(0.0)).sum::<f64>();
    let hi0 = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (hi0 - 1.0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn bisection_projection(p: &[f64]) -> DVector<f64> {
    let t = bisection_threshold(p);
    DVector::from_iterator(p.len(), p.iter().map(|v| (v - t).max(0.0)))
}

/// Smallest distance from a coordinate to its block's projection threshold.
/// Projections are affine within this distance.
pub fn kink_margin(z: &LiftedPoint, n: usize) -> f64 {
    let s = z.as_vector().as_slice();
    [&s[..n], &s[n..]]
        .iter()
        .map(|block| {
            let t = bisection_threshold(block);
            block.iter().map(|v| (v - t).abs()).fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random lifted point whose kink margin exceeds `margin`.
pub fn kink_free_point(rng: &mut impl Rng, ctx: &DrsContext<'_>, margin: f64) -> LiftedPoint {
    loop {
        let z = random_point(rng, ctx.dim(), 1.0);
        if kink_margin(&z, ctx.game().rows()) > margin {
            return z;
        }
    }
}

pub fn central_difference_jacobian(ctx: &DrsContext<'_>, z: &LiftedPoint, h: f64) -> DMatrix<f64> {
    let d = ctx.dim();
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut plus = z.as_vector().clone();
        let mut minus = z.as_vector().clone();
        plus[j] += h;
        minus[j] -= h;
        let rp = residual(ctx, &LiftedPoint::new(plus).unwrap()).unwrap();
        let rm = residual(ctx, &LiftedPoint::new(minus).unwrap()).unwrap();
        out.set_column(j, &((rp.vector() - rm.vector()) / (2.0 * h)));
    }
    out
}

/// Spectral norm of `(J + μI)⁻¹` from the singular values of `J + μI`.
pub fn regularized_inverse_norm(j: &DMatrix<f64>, mu: f64) -> f64 {
    let mut s = j.clone();
    for i in 0..s.nrows() {
        s[(i, i)] += mu;
    }
    1.0 / s.singular_values().min()
}

/// `log‖r_{k+1}‖ / log‖r_k‖` over consecutive entries.
pub fn log_ratios(norms: &[f64]) -> Vec<f64> {
    norms.windows(2).map(|w| w[1].ln() / w[0].ln()).collect()
}
