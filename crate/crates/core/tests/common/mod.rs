//! Reference computations on nalgebra matrices, independent of the crate's
//! own eigensolver and state constructions.

#![allow(dead_code)]

use chernoff_qkd::ComplexMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type M = DMatrix<Complex64>;

pub fn to_na(m: &ComplexMatrix) -> M {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

fn herm(m: &M) -> M {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn eig(m: &M) -> (Vec<f64>, M) {
    let e = SymmetricEigen::new(herm(m));
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

pub fn eigvals(m: &M) -> Vec<f64> {
    eig(m).0
}

/// `f` applied to the spectrum of a Hermitian matrix.
pub fn apply(m: &M, f: impl Fn(f64) -> f64) -> M {
    let (l, v) = eig(m);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        l.len(),
        l.iter().map(|&x| Complex64::new(f(x), 0.0)),
    ));
    &v * d * v.adjoint()
}

fn xlog2x(x: f64) -> f64 {
    if x > 1e-300 {
        -x * x.log2()
    } else {
        0.0
    }
}

/// `-Tr(m log2 m)` for a positive (possibly unnormalized) matrix.
pub fn entropy(m: &M) -> f64 {
    eigvals(m).into_iter().map(|l| xlog2x(l.max(0.0))).sum()
}

/// `H(C|E)` of `sum_c w_c |c><c| (x) rho_c`.
pub fn cond_entropy(parts: &[(f64, &M)]) -> f64 {
    let joint: f64 = parts.iter().map(|(w, r)| entropy(&(*r * Complex64::new(*w, 0.0)))).sum();
    let mut avg = parts[0].1 * Complex64::new(0.0, 0.0);
    for (w, r) in parts {
        avg += *r * Complex64::new(*w, 0.0);
    }
    joint - entropy(&avg)
}

pub fn trace_norm(m: &M) -> f64 {
    eigvals(m).iter().map(|l| l.abs()).sum()
}

pub fn trace_distance(a: &M, b: &M) -> f64 {
    0.5 * trace_norm(&(a - b))
}

pub fn fidelity(a: &M, b: &M) -> f64 {
    let sa = apply(a, |x| x.max(0.0).sqrt());
    eigvals(&(&sa * b * &sa)).iter().map(|l| l.max(0.0).sqrt()).sum()
}

/// Optimal error of discriminating `w0 rho0` from `w1 rho1`.
pub fn helstrom_error(w0: f64, a: &M, w1: f64, b: &M) -> f64 {
    0.5 * (1.0 - trace_norm(&(a * Complex64::new(w0, 0.0) - b * Complex64::new(w1, 0.0))))
}

/// `Tr(a^s b^(1-s))` with `0^x = 0`.
pub fn overlap(a: &M, b: &M, s: f64) -> f64 {
    let p = |x: f64, e: f64| if x > 1e-14 { x.powf(e) } else { 0.0 };
    let ap = apply(a, |x| p(x, s));
    let bp = apply(b, |x| p(x, 1.0 - s));
    (ap * bp).trace().re
}

/// `min_s Tr(a^s b^(1-s))` by a coarse scan followed by ternary search.
pub fn nqcd(a: &M, b: &M) -> f64 {
    let n = 200;
    let vals: Vec<f64> = (1..n).map(|i| overlap(a, b, i as f64 / n as f64)).collect();
    let (i, _) = vals.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let (mut lo, mut hi) = (i as f64 / n as f64, (i + 2) as f64 / n as f64);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if overlap(a, b, m1) < overlap(a, b, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let edge = overlap(a, b, 1e-9).min(overlap(a, b, 1.0 - 1e-9));
    overlap(a, b, 0.5 * (lo + hi)).min(vals.iter().copied().fold(f64::INFINITY, f64::min)).min(edge)
}

pub fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

pub fn projector(d: usize, i: usize) -> M {
    let mut m = M::zeros(d, d);
    m[(i, i)] = Complex64::new(1.0, 0.0);
    m
}

/// `rho_ET|ab = (sigma_ab (x) |0><0| + sigma_a'b' (x) |1><1|) / 2` from the four `sigma_ab` (index `2a + b`).
pub fn symmetrized(sigma: &[M; 4], a: u8, b: u8) -> M {
    let i = (2 * a + b) as usize;
    let j = 3 - i;
    (kron(&sigma[i], &projector(2, 0)) + kron(&sigma[j], &projector(2, 1))) * Complex64::new(0.5, 0.0)
}

/// Tensor product of per-round states `rho[a_i][b_i]`, round 1 leftmost.
pub fn block(rho: &[M; 4], a: &[u8], b: &[u8]) -> M {
    let mut m = rho[(2 * a[0] + b[0]) as usize].clone();
    for i in 1..a.len() {
        m = kron(&m, &rho[(2 * a[i] + b[i]) as usize]);
    }
    m
}

pub fn power(m: &M, k: usize) -> M {
    let mut r = m.clone();
    for _ in 1..k {
        r = kron(&r, m);
    }
    r
}

pub fn delta(eps: f64, k: usize) -> f64 {
    let (a, b) = (eps.powi(k as i32), (1.0 - eps).powi(k as i32));
    a / (a + b)
}

pub fn complement(m: &[u8]) -> Vec<u8> {
    m.iter().map(|b| 1 - b).collect()
}

/// Conditional states `C = 0, 1` of an accepted block with message `m`, weights included.
pub fn accepted_key_states(rho: &[M; 4], eps: f64, m: &[u8]) -> (M, M) {
    let d = delta(eps, m.len());
    let mb = complement(m);
    let w = |x: f64| Complex64::new(x, 0.0);
    let c0 = block(rho, m, m) * w(0.5 * (1.0 - d)) + block(rho, m, &mb) * w(0.5 * d);
    let c1 = block(rho, &mb, &mb) * w(0.5 * (1.0 - d)) + block(rho, &mb, m) * w(0.5 * d);
    (c0, c1)
}
