//! Random matrices and states for sampling-based checks.
//!
//! Mixed states are drawn from the Hilbert-Schmidt ensemble (`G G^dagger / Tr`
//! with complex Ginibre `G`); unitaries come from Gram-Schmidt on a Ginibre matrix.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::qmath::{ComplexMatrix, DensityMatrix};
use crate::scalar::Real;

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re), T::lit(im))
}

pub fn ginibre<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Random Hermitian matrix `(G + G^dagger) / 2`.
pub fn hermitian<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    ginibre(n, n, rng).hermitian_part()
}

/// Hilbert-Schmidt random density matrix of order `n`.
pub fn density_matrix<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix<T> {
    let g = ginibre::<T, _>(n, n, rng);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_parts_unchecked(m.scale_real(T::one() / tr).hermitian_part(), vec![n])
}

/// Haar-random pure state of order `n`.
pub fn pure_state<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix<T> {
    let v: Vec<Complex<T>> = (0..n).map(|_| gaussian(rng)).collect();
    DensityMatrix::pure(&v, vec![n]).expect("gaussian vector is nonzero")
}

/// Haar-random unitary of order `n`.
pub fn unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    let g = ginibre::<T, _>(n, n, rng);
    let mut cols: Vec<Vec<Complex<T>>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut v = g.column(c);
        for _ in 0..2 {
            for q in &cols {
                let proj = q.iter().zip(&v).fold(Complex::new(T::zero(), T::zero()), |a, (x, y)| a + x.conj() * *y);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi = *vi - *qi * proj;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for z in &mut v {
            *z = z.unscale(norm);
        }
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, n, |r, c| cols[c][r])
}
