//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! The matrix is first split into the connected components of its sparsity
//! graph. Tensor powers of the block-diagonal conditional states built by the
//! protocol module decompose into many small components, so each is
//! diagonalized on its own.

use num_complex::Complex;
use num_traits::Zero;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) together with the unitary whose columns are the eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> Spectrum<T> {
    /// `V diag(f(lambda)) V^dagger`.
    pub fn apply(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        let n = self.values.len();
        let weights: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            for r in 0..n {
                let vr = v[(r, k)] * w;
                if vr.is_zero() {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] = out[(r, c)] + vr * v[(c, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input must be Hermitian within `tol_herm` (relative to `max(1, max|a_ij|)`);
/// it is symmetrized before diagonalization.
pub fn herm_eig<T: Real>(h: &ComplexMatrix<T>, tol_herm: T) -> Result<Spectrum<T>> {
    if !h.is_square() {
        return Err(Error::Validation(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let scale = T::one().max(h.max_abs());
    let defect = h.hermiticity_defect();
    if defect > tol_herm * scale {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (defect {defect:e} exceeds {:e})",
            tol_herm * scale
        )));
    }
    Ok(herm_eig_unchecked(&h.hermitian_part()))
}

/// Eigendecomposition assuming exact Hermiticity.
pub(crate) fn herm_eig_unchecked<T: Real>(h: &ComplexMatrix<T>) -> Spectrum<T> {
    let n = h.rows();
    let mut values = vec![T::zero(); n];
    let mut vectors = ComplexMatrix::zeros(n, n);

    for comp in components(h) {
        let m = comp.len();
        let mut block = ComplexMatrix::from_fn(m, m, |r, c| h[(comp[r], comp[c])]);
        let mut v = ComplexMatrix::identity(m);
        jacobi(&mut block, &mut v);
        for (local, &global) in comp.iter().enumerate() {
            values[global] = block[(local, local)].re;
            for (lr, &gr) in comp.iter().enumerate() {
                vectors[(gr, global)] = v[(lr, local)];
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = ComplexMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Spectrum {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

/// Connected components of the graph with an edge wherever `a_ij != 0`.
fn components<T: Real>(h: &ComplexMatrix<T>) -> Vec<Vec<usize>> {
    let n = h.rows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for r in 0..n {
        for c in (r + 1)..n {
            if !h[(r, c)].is_zero() {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

/// Cyclic Jacobi on a Hermitian block; `a` ends diagonal, `v` accumulates rotations.
fn jacobi<T: Real>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>) {
    let n = a.rows();
    if n == 1 {
        a[(0, 0)] = Complex::new(a[(0, 0)].re, T::zero());
        return;
    }
    let norm = a.frobenius_norm();
    if norm == T::zero() {
        return;
    }
    let stop = T::epsilon() * norm;
    let negligible = T::epsilon() * T::lit(1e-3) * norm;

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[(p, q)].norm_sqr();
            }
        }
        if (off + off).sqrt() <= stop {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= negligible {
                    if r != T::zero() {
                        a[(p, q)] = Complex::zero();
                        a[(q, p)] = Complex::zero();
                    }
                    continue;
                }
                rotated = true;
                rotate(a, v, p, q, apq, r);
            }
        }
        if !rotated {
            break;
        }
    }
    for i in 0..n {
        a[(i, i)] = Complex::new(a[(i, i)].re, T::zero());
    }
}

/// Annihilate `a_pq` with the unitary `G = diag(1, e^{-i phi}) R(theta)` on columns `p, q`.
fn rotate<T: Real>(
    a: &mut ComplexMatrix<T>,
    v: &mut ComplexMatrix<T>,
    p: usize,
    q: usize,
    apq: Complex<T>,
    r: T,
) {
    let n = a.rows();
    let phase = apq / r; // e^{i phi}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (r + r);
    let t = {
        let mag = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
        if theta < T::zero() {
            -mag
        } else {
            mag
        }
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    let g_pp = Complex::new(c, T::zero());
    let g_pq = Complex::new(s, T::zero());
    let g_qp = phase.conj() * (-s);
    let g_qq = phase.conj() * c;

    // A <- A G
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    // A <- G^dagger A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

/// Eigenvalues of a real symmetric matrix stored densely (used by the SDP solver).
pub fn sym_eigenvalues<T: Real>(a: &[T], n: usize) -> Vec<T> {
    let m = ComplexMatrix::from_fn(n, n, |r, c| Complex::new(a[r * n + c], T::zero()));
    herm_eig_unchecked(&m).values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::matrix::consts;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reconstruct(s: &Spectrum<f64>) -> ComplexMatrix<f64> {
        s.apply(|l| l)
    }

    #[test]
    fn pauli_spectra() {
        for m in [consts::pauli_z::<f64>(), consts::pauli_x(), consts::pauli_y()] {
            let s = herm_eig(&m, 1e-9).unwrap();
            assert!((s.values[0] + 1.0).abs() < 1e-14);
            assert!((s.values[1] - 1.0).abs() < 1e-14);
            assert!(reconstruct(&s).max_abs_diff(&m) < 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(herm_eig(&m, 1e-9), Err(Error::Validation(_))));
    }

    #[test]
    fn random_8x8_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random::hermitian::<f64, _>(8, &mut rng);
        let s = herm_eig(&h, 1e-9).unwrap();
        assert!(reconstruct(&s).max_abs_diff(&h) <= 1e-9);
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn block_structure_is_split() {
        let a = ComplexMatrix::<f64>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let b = ComplexMatrix::<f64>::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.5]]);
        let m = a.kron(&b);
        assert_eq!(components(&m).len(), 2);
        let s = herm_eig(&m, 1e-9).unwrap();
        let expect = [0.5, 1.0, 1.5, 3.0];
        for (got, want) in s.values.iter().zip(expect) {
            assert!((got - want).abs() < 1e-13);
        }
        assert!(reconstruct(&s).max_abs_diff(&m) < 1e-13);
    }

    #[test]
    fn works_in_single_precision() {
        let m = ComplexMatrix::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let s = herm_eig(&m, 1e-4).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-5);
        assert!((s.values[1] - 3.0).abs() < 1e-5);
    }

    #[test]
    fn zero_matrix() {
        let s = herm_eig(&ComplexMatrix::<f64>::zeros(3, 3), 1e-9).unwrap();
        assert_eq!(s.values, vec![0.0; 3]);
    }
}
