//! Small dense and matrix-free linear algebra helpers shared by the norm
//! evaluators and the exact verifier.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let a = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| m[(i, j)]);
    let eig = a.self_adjoint_eigen(faer::Side::Lower).expect("eigendecomposition did not converge");
    let s = eig.S().column_vector();
    let u = eig.U();
    let vals = (0..n).map(|i| s[i].re).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    (vals, vecs)
}

/// Largest singular value of a dense matrix.
pub fn dense_spectral_norm(m: &DMatrix<C64>) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 if m.ncols() == 1 => m[(0, 0)].norm(),
        2 if m.ncols() == 2 => norm_2x2(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]),
        _ => {
            if is_hermitian(m, 1e-13) {
                let (vals, _) = hermitian_eigen(m);
                vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
            } else {
                let g = m.adjoint() * m;
                let (vals, _) = hermitian_eigen(&g);
                vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
            }
        }
    }
}

fn norm_2x2(a: C64, b: C64, c: C64, d: C64) -> f64 {
    // largest eigenvalue of M^dagger M in closed form
    let p = a.norm_sqr() + c.norm_sqr();
    let q = b.norm_sqr() + d.norm_sqr();
    let off = a.conj() * b + c.conj() * d;
    let half_tr = 0.5 * (p + q);
    let det = p * q - off.norm_sqr();
    (half_tr + (half_tr * half_tr - det).max(0.0).sqrt()).max(0.0).sqrt()
}

pub fn is_hermitian(m: &DMatrix<C64>, tol: f64) -> bool {
    let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Reduced row-echelon basis of the GF(2) span of `masks`, each vector paired
/// with its pivot bit. Every pivot bit is set in exactly one basis vector.
pub(crate) fn gf2_basis(masks: &[u64]) -> Vec<(u64, u32)> {
    let mut basis: Vec<(u64, u32)> = Vec::new();
    for &m in masks {
        let mut v = m;
        for &(b, p) in &basis {
            if v >> p & 1 == 1 {
                v ^= b;
            }
        }
        if v == 0 {
            continue;
        }
        let p = 63 - v.leading_zeros();
        for entry in basis.iter_mut() {
            if entry.0 >> p & 1 == 1 {
                entry.0 ^= v;
            }
        }
        basis.push((v, p));
    }
    basis
}

/// Operator norm of a sparse operator on `k` qubits whose nonzero entries
/// only connect basis states differing by an element of span(`masks`).
///
/// `column(b, out)` must push the entries `(b', amp)` of column `b`. The
/// operator splits into one dense block per coset of the mask span.
pub(crate) fn block_spectral_norm<F>(k: u32, masks: &[u64], column: F) -> f64
where
    F: Fn(u64, &mut Vec<(u64, C64)>),
{
    let basis = gf2_basis(masks);
    let r = basis.len();
    let pivot_mask = basis.iter().fold(0u64, |acc, &(_, p)| acc | 1 << p);
    let dim = 1usize << r;
    let local = |s: u64| -> usize {
        let mut idx = 0usize;
        for (i, &(_, p)) in basis.iter().enumerate() {
            idx |= ((s >> p & 1) as usize) << i;
        }
        idx
    };
    let mut best = 0.0f64;
    let mut buf = Vec::new();
    let mut block = DMatrix::<C64>::zeros(dim, dim);
    let total: u64 = 1u64 << k;
    for rep in 0..total {
        if rep & pivot_mask != 0 {
            continue;
        }
        block.fill(C64::new(0.0, 0.0));
        let mut any = false;
        for j in 0..dim {
            let mut s = rep;
            for (i, &(b, _)) in basis.iter().enumerate() {
                if j >> i & 1 == 1 {
                    s ^= b;
                }
            }
            buf.clear();
            column(s, &mut buf);
            for &(t, amp) in &buf {
                block[(local(t), j)] += amp;
                any = true;
            }
        }
        if any {
            best = best.max(dense_spectral_norm(&block));
        }
    }
    best
}

/// Outcome of a matrix-free top-eigenvalue solve.
#[derive(Clone, Copy, Debug)]
pub struct KrylovResult {
    pub eigenvalue: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Largest eigenvalue of a positive semidefinite operator given only through
/// `apply(x, y)` (y = A x). Power iteration accelerated with a Lanczos basis,
/// restarted from the current Ritz vector plus a small random kick.
pub(crate) fn psd_top_eigenvalue<F>(
    dim: usize,
    apply: F,
    steps: usize,
    restarts: usize,
    rel_tol: f64,
    seed: u64,
) -> KrylovResult
where
    F: Fn(&[C64], &mut [C64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let mut best = KrylovResult { eigenvalue: 0.0, residual: f64::INFINITY, converged: false };
    let steps = steps.max(1).min(dim);
    for _ in 0..restarts.max(1) {
        normalize(&mut start);
        let (theta, resid, ritz) = lanczos(dim, &apply, &start, steps);
        let converged = resid <= rel_tol * theta.abs().max(f64::MIN_POSITIVE) || theta == 0.0 && resid < 1e-300;
        if theta >= best.eigenvalue || !best.converged {
            best = KrylovResult { eigenvalue: theta, residual: resid, converged };
        }
        if converged {
            return best;
        }
        start = ritz;
        for z in start.iter_mut() {
            *z += C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * 1e-3;
        }
    }
    best
}

fn normalize(v: &mut [C64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Lanczos with full reorthogonalization. Returns the top Ritz value, its
/// residual norm and Ritz vector.
fn lanczos<F>(dim: usize, apply: &F, start: &[C64], steps: usize) -> (f64, f64, Vec<C64>)
where
    F: Fn(&[C64], &mut [C64]),
{
    let mut q: Vec<Vec<C64>> = vec![start.to_vec()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut last_beta = 0.0;
    for j in 0..steps {
        apply(&q[j], &mut w);
        let a = dot(&q[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                for (wk, qk) in w.iter_mut().zip(qi) {
                    *wk -= c * qk;
                }
            }
        }
        let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        last_beta = b;
        if j + 1 == steps || b < 1e-13 * a.abs().max(1e-300) {
            break;
        }
        beta.push(b);
        q.push(w.iter().map(|z| z / b).collect());
    }
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let (imax, theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let y: DVector<f64> = eig.eigenvectors.column(imax).into_owned();
    let resid = (last_beta * y[m - 1]).abs();
    let mut ritz = vec![C64::new(0.0, 0.0); dim];
    for (i, qi) in q.iter().take(m).enumerate() {
        for (r, x) in ritz.iter_mut().zip(qi) {
            *r += x * y[i];
        }
    }
    (theta, resid, ritz)
}
