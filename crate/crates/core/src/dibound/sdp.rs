//! Primal-dual interior-point solver for single-block real SDPs.
//!
//! Standard form:
//!
//! ```text
//! (P)  min <C, X>   s.t. <A_i, X> = b_i,  X >= 0
//! (D)  max b^T y    s.t. S = C - sum_i y_i A_i >= 0
//! ```
//!
//! Infeasible-start HKM search direction with a Mehrotra predictor-corrector.
//! The Schur complement `M_ij = Tr(A_i X A_j S^-1)` is formed from the sparse
//! `A_i` and factored by dense Cholesky.

use crate::error::{Error, Result};
use crate::qmath::eigen::sym_eigenvalues;
use crate::scalar::Real;

/// Default relative duality-gap and feasibility tolerance.
pub const DEFAULT_SDP_TOL: f64 = 1e-7;

/// Iteration cap.
pub const MAX_ITERATIONS: usize = 200;

const STEP_FRACTION: f64 = 0.95;

/// Symmetric matrix given by its upper-triangle entries `(row, col, value)`, `row <= col`.
#[derive(Debug, Clone, Default)]
pub struct SparseSym<T> {
    pub entries: Vec<(usize, usize, T)>,
}

impl<T: Real> SparseSym<T> {
    /// Full list including mirrored off-diagonal entries.
    fn expanded(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(2 * self.entries.len());
        for &(r, c, v) in &self.entries {
            out.push((r, c, v));
            if r != c {
                out.push((c, r, v));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SdpProblem<T> {
    pub n: usize,
    /// Dense row-major `C`.
    pub c: Vec<T>,
    pub a: Vec<SparseSym<T>>,
    pub b: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SdpResult<T> {
    pub status: SdpStatus,
    /// `<C, X>`.
    pub primal_objective: T,
    /// `b^T y`.
    pub dual_objective: T,
    /// `|pobj - dobj| / (1 + |pobj| + |dobj|)`.
    pub relative_gap: T,
    pub primal_infeasibility: T,
    pub dual_infeasibility: T,
    pub iterations: usize,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn matmul<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == T::zero() {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, &bv) in dst.iter_mut().zip(row) {
                *d = *d + aik * bv;
            }
        }
    }
    out
}

fn sym_part<T: Real>(a: &[T], n: usize) -> Vec<T> {
    let half = T::lit(0.5);
    let mut out = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (a[i * n + j] + a[j * n + i]) * half;
        }
    }
    out
}

/// Lower Cholesky factor, or `None` when a pivot is not positive.
fn cholesky<T: Real>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d = d - l[j * n + k] * l[j * n + k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn chol_solve<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s = s - l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s = s - l[k * n + i] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    z
}

/// Inverse of a lower-triangular matrix.
fn tri_inverse<T: Real>(l: &[T], n: usize) -> Vec<T> {
    let mut inv = vec![T::zero(); n * n];
    for col in 0..n {
        inv[col * n + col] = T::one() / l[col * n + col];
        for i in col + 1..n {
            let mut s = T::zero();
            for k in col..i {
                s = s + l[i * n + k] * inv[k * n + col];
            }
            inv[i * n + col] = -s / l[i * n + i];
        }
    }
    inv
}

fn transpose<T: Real>(a: &[T], n: usize) -> Vec<T> {
    let mut t = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// Largest `alpha <= 1` keeping `X + alpha dX` positive definite, shortened by the step fraction.
fn step_length<T: Real>(x_chol: &[T], dx: &[T], n: usize) -> T {
    let linv = tri_inverse(x_chol, n);
    let w = matmul(&matmul(&linv, dx, n), &transpose(&linv, n), n);
    let w = sym_part(&w, n);
    let lmin = sym_eigenvalues(&w, n).first().copied().unwrap_or(T::zero());
    if lmin >= T::zero() {
        T::one()
    } else {
        (T::lit(STEP_FRACTION) / -lmin).min(T::one())
    }
}

fn apply_a<T: Real>(a: &[Vec<(usize, usize, T)>], x: &[T], n: usize) -> Vec<T> {
    a.iter().map(|ai| ai.iter().map(|&(r, c, v)| v * x[r * n + c]).sum()).collect()
}

fn add_scaled_a<T: Real>(out: &mut [T], ai: &[(usize, usize, T)], scale: T, n: usize) {
    for &(r, c, v) in ai {
        out[r * n + c] = out[r * n + c] + scale * v;
    }
}

fn frob<T: Real>(a: &[T]) -> T {
    a.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Solve an SDP in standard form.
pub fn solve<T: Real>(p: &SdpProblem<T>, tol: T) -> Result<SdpResult<T>> {
    let n = p.n;
    let m = p.a.len();
    if p.c.len() != n * n || p.b.len() != m {
        return Err(Error::DimensionMismatch("SDP data sizes are inconsistent".into()));
    }
    let a: Vec<Vec<(usize, usize, T)>> = p.a.iter().map(|ai| ai.expanded()).collect();
    if a.iter().flatten().any(|&(r, c, _)| r >= n || c >= n) {
        return Err(Error::DimensionMismatch("constraint entry outside the matrix".into()));
    }

    let norm_b = p.b.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    let norm_c = frob(&p.c);
    let scale = T::lit(10.0).max(T::from_usize_lossy(n).sqrt() * (T::one() + norm_b).max(T::one() + norm_c));
    let mut x = vec![T::zero(); n * n];
    let mut s = vec![T::zero(); n * n];
    for i in 0..n {
        x[i * n + i] = scale;
        s[i * n + i] = scale;
    }
    let mut y = vec![T::zero(); m];
    let nf = T::from_usize_lossy(n);
    let tiny = T::epsilon();

    let mut iterations = 0;
    let mut status = SdpStatus::MaxIter;
    let (mut pobj, mut dobj, mut gap, mut pinf, mut dinf);
    loop {
        // Residuals.
        let ax = apply_a(&a, &x, n);
        let rp: Vec<T> = p.b.iter().zip(&ax).map(|(&bi, &v)| bi - v).collect();
        let mut rd: Vec<T> = p.c.iter().zip(&s).map(|(&c, &sv)| c - sv).collect();
        for (ai, &yi) in a.iter().zip(&y) {
            add_scaled_a(&mut rd, ai, -yi, n);
        }
        pobj = dot(&p.c, &x);
        dobj = dot(&p.b, &y);
        gap = (pobj - dobj).abs() / (T::one() + pobj.abs() + dobj.abs());
        pinf = rp.iter().map(|v| v.abs()).fold(T::zero(), T::max) / (T::one() + norm_b);
        dinf = frob(&rd) / (T::one() + norm_c);
        if gap <= tol && pinf <= tol && dinf <= tol {
            status = SdpStatus::Optimal;
            break;
        }
        let trace_x: T = (0..n).map(|i| x[i * n + i]).sum();
        if trace_x > T::lit(1e10) * scale && dinf > tol {
            status = SdpStatus::Infeasible;
            break;
        }
        if iterations >= MAX_ITERATIONS {
            break;
        }
        iterations += 1;

        let mu = dot(&x, &s) / nf;
        let Some(s_chol) = cholesky(&s, n) else { break };
        let Some(x_chol) = cholesky(&x, n) else { break };
        let s_inv_l = tri_inverse(&s_chol, n);
        let z = matmul(&transpose(&s_inv_l, n), &s_inv_l, n);

        // Schur complement.
        let mut schur = vec![T::zero(); m * m];
        for i in 0..m {
            for j in i..m {
                let mut acc = T::zero();
                for &(r, c, v) in &a[i] {
                    for &(pp, q, w) in &a[j] {
                        acc = acc + v * w * x[c * n + pp] * z[q * n + r];
                    }
                }
                schur[i * m + j] = acc;
                schur[j * m + i] = acc;
            }
        }
        let max_diag = (0..m).map(|i| schur[i * m + i]).fold(T::zero(), T::max);
        let l_schur = match cholesky(&schur, m) {
            Some(l) => l,
            None => {
                let mut reg = schur.clone();
                for i in 0..m {
                    reg[i * m + i] = reg[i * m + i] + max_diag * tiny * T::lit(1e3) + tiny;
                }
                match cholesky(&reg, m) {
                    Some(l) => l,
                    None => break,
                }
            }
        };
        let x_rd_z = sym_part(&matmul(&matmul(&x, &rd, n), &z, n), n);
        let a_xrdz = apply_a(&a, &x_rd_z, n);

        // Direction for a given K, where dX = K - X dS Z.
        let direction = |k: &[T]| -> (Vec<T>, Vec<T>, Vec<T>) {
            let k_sym = sym_part(k, n);
            let a_k = apply_a(&a, &k_sym, n);
            let rhs: Vec<T> = (0..m).map(|i| rp[i] - a_k[i] + a_xrdz[i]).collect();
            let dy = chol_solve(&l_schur, m, &rhs);
            let mut ds = rd.clone();
            for (ai, &d) in a.iter().zip(&dy) {
                add_scaled_a(&mut ds, ai, -d, n);
            }
            let xdsz = matmul(&matmul(&x, &ds, n), &z, n);
            let dx: Vec<T> = k.iter().zip(&xdsz).map(|(&kv, &v)| kv - v).collect();
            (sym_part(&dx, n), dy, ds)
        };

        // Predictor.
        let k_pred: Vec<T> = x.iter().map(|&v| -v).collect();
        let (dx_p, _, ds_p) = direction(&k_pred);
        let ap = step_length(&x_chol, &dx_p, n);
        let ad = step_length(&s_chol, &ds_p, n);
        let x_aff: Vec<T> = x.iter().zip(&dx_p).map(|(&v, &d)| v + ap * d).collect();
        let s_aff: Vec<T> = s.iter().zip(&ds_p).map(|(&v, &d)| v + ad * d).collect();
        let mu_aff = dot(&x_aff, &s_aff) / nf;
        let sigma = (mu_aff / mu).max(T::zero()).min(T::one()).powi(3);

        // Corrector.
        let mut target = matmul(&dx_p, &ds_p, n);
        for v in target.iter_mut() {
            *v = -*v;
        }
        for i in 0..n {
            target[i * n + i] = target[i * n + i] + sigma * mu;
        }
        let k_corr: Vec<T> = matmul(&target, &z, n).iter().zip(&x).map(|(&t, &v)| t - v).collect();
        let (dx, dy, ds) = direction(&k_corr);
        let ap = step_length(&x_chol, &dx, n);
        let ad = step_length(&s_chol, &ds, n);
        for (v, d) in x.iter_mut().zip(&dx) {
            *v = *v + ap * *d;
        }
        for (v, d) in s.iter_mut().zip(&ds) {
            *v = *v + ad * *d;
        }
        for (v, d) in y.iter_mut().zip(&dy) {
            *v = *v + ad * *d;
        }
    }
    Ok(SdpResult {
        status,
        primal_objective: pobj,
        dual_objective: dobj,
        relative_gap: gap,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        iterations,
        x,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_round_trip() {
        let a = vec![4.0f64, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        let x: Vec<f64> = chol_solve(&l, 2, &[2.0, 1.0]);
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn max_eigenvalue_problem() {
        // min <C, X> s.t. Tr X = 1 gives the smallest eigenvalue of C.
        let c = vec![2.0f64, 1.0, 1.0, 2.0];
        let a = vec![SparseSym {
            entries: vec![(0, 0, 1.0), (1, 1, 1.0)],
        }];
        let r = solve(&SdpProblem { n: 2, c, a, b: vec![1.0] }, 1e-9).unwrap();
        assert_eq!(r.status, SdpStatus::Optimal);
        assert!((r.primal_objective - 1.0).abs() < 1e-7);
        assert!((r.dual_objective - 1.0).abs() < 1e-7);
    }
}
