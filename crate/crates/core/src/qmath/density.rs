use std::sync::OnceLock;

use num_complex::Complex;
use num_traits::Zero;

use super::eigen::{herm_eig, herm_eig_unchecked, Spectrum};
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default cap on the order of any matrix built by tensoring.
pub const DEFAULT_MAX_DIM: usize = 1 << 13;

/// Numerical tolerances used when validating states.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    /// Allowed entrywise deviation from Hermiticity.
    pub herm: T,
    /// Eigenvalues in `[-psd, 0)` are clamped to zero; anything lower is rejected.
    pub psd: T,
    /// Allowed deviation of the trace (or of a weight sum) from one.
    pub trace: T,
    pub max_dim: usize,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        let t = T::default_tol();
        Self {
            herm: t,
            psd: t,
            trace: t,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// Positive semidefinite unit-trace Hermitian matrix on a tensor product of subsystems.
#[derive(Debug, Clone)]
pub struct DensityMatrix<T> {
    matrix: ComplexMatrix<T>,
    dims: Vec<usize>,
    spectrum: OnceLock<Spectrum<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validate `matrix` as a state on subsystems `dims` with default tolerances.
    pub fn new(matrix: ComplexMatrix<T>, dims: Vec<usize>) -> Result<Self> {
        Self::with_tolerances(matrix, dims, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: ComplexMatrix<T>, dims: Vec<usize>, tol: &Tolerances<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Validation("density matrix must be square".into()));
        }
        check_dims(&dims, matrix.rows())?;
        let spectrum = herm_eig(&matrix, tol.herm)?;
        let trace = matrix.trace().re;
        if (trace - T::one()).abs() > tol.trace {
            return Err(Error::Validation(format!("trace {trace} differs from 1")));
        }
        if let Some(&min) = spectrum.values.first() {
            if min < -tol.psd {
                return Err(Error::Validation(format!("eigenvalue {min:e} below -{:e}", tol.psd)));
            }
        }
        let cell = OnceLock::new();
        let _ = cell.set(spectrum);
        Ok(Self {
            matrix: matrix.hermitian_part(),
            dims,
            spectrum: cell,
        })
    }

    /// Wrap a matrix known to be a valid state by construction.
    pub(crate) fn from_parts_unchecked(matrix: ComplexMatrix<T>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.rows());
        Self {
            matrix,
            dims,
            spectrum: OnceLock::new(),
        }
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &[Complex<T>], dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, psi.len())?;
        let norm: T = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm <= T::zero() || !norm.is_finite() {
            return Err(Error::Validation("pure state vector has zero norm".into()));
        }
        let scaled: Vec<_> = psi.iter().map(|z| z.unscale(norm.sqrt())).collect();
        Ok(Self::from_parts_unchecked(ComplexMatrix::outer(&scaled), dims))
    }

    /// `|i><i|` on a single system of dimension `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(i, i)] = Complex::new(T::one(), T::zero());
        Self::from_parts_unchecked(m, vec![d])
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        let m = ComplexMatrix::identity(n).scale_real(T::one() / T::from_usize_lossy(n));
        Self::from_parts_unchecked(m, dims)
    }

    /// Diagonal state with the given probabilities on one system.
    pub fn diagonal(probs: &[T]) -> Result<Self> {
        Self::new(ComplexMatrix::diag_real(probs), vec![probs.len()])
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Matrix order.
    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    /// Relabel the subsystem structure without touching the matrix.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, self.dim())?;
        self.dims = dims;
        Ok(self)
    }

    pub fn spectrum(&self) -> &Spectrum<T> {
        self.spectrum.get_or_init(|| herm_eig_unchecked(&self.matrix.hermitian_part()))
    }

    /// Eigenvalues with numerical noise at the bottom of the spectrum mapped to exactly zero.
    pub fn clamped_eigenvalues(&self) -> Vec<T> {
        let values = &self.spectrum().values;
        let floor = support_floor(values);
        values.iter().map(|&l| if l <= floor { T::zero() } else { l.min(T::one()) }).collect()
    }

    /// Spectral power `rho^s` with `0^s = 0` for every `s`, including `s = 0`.
    pub fn power(&self, s: T) -> Result<ComplexMatrix<T>> {
        if !(s >= T::zero() && s <= T::one()) {
            return Err(Error::Domain(format!("matrix power exponent {s} outside [0, 1]")));
        }
        let clamped = self.clamped_eigenvalues();
        let spec = self.spectrum();
        let weights: Vec<T> = clamped.iter().map(|&l| if l > T::zero() { l.powf(s) } else { T::zero() }).collect();
        let table = Spectrum {
            values: weights,
            vectors: spec.vectors.clone(),
        };
        Ok(table.apply(|w| w))
    }

    /// Principal square root.
    pub fn sqrt(&self) -> ComplexMatrix<T> {
        self.power(T::lit(0.5)).expect("exponent in range")
    }

    /// Trace after the state has been formed; equals one up to rounding.
    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    /// `rho (x) sigma` with capacity check.
    pub fn tensor(&self, other: &Self, max_dim: usize) -> Result<Self> {
        let needed = self.dim() * other.dim();
        if needed > max_dim {
            return Err(Error::Capacity {
                what: "tensor product".into(),
                needed,
                cap: max_dim,
            });
        }
        let dims = self.dims.iter().chain(other.dims.iter()).copied().collect();
        Ok(Self::from_parts_unchecked(self.matrix.kron(&other.matrix), dims))
    }

    /// `U rho U^dagger` for a unitary `U`.
    pub fn conjugate_by(&self, u: &ComplexMatrix<T>) -> Result<Self> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary of order {} acting on state of order {}",
                u.rows(),
                self.dim()
            )));
        }
        Ok(Self::from_parts_unchecked(self.matrix.conjugate_by(u), self.dims.clone()))
    }

    /// Reduced state on the subsystems in `keep` (kept in their original order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let n_sys = self.dims.len();
        let mut keep_sorted: Vec<usize> = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        if let Some(&bad) = keep_sorted.iter().find(|&&i| i >= n_sys) {
            return Err(Error::Validation(format!("subsystem index {bad} out of range for {n_sys} systems")));
        }
        if keep_sorted.is_empty() {
            let m = ComplexMatrix::from_fn(1, 1, |_, _| Complex::new(self.trace(), T::zero()));
            return Ok(Self::from_parts_unchecked(m, vec![1]));
        }
        let traced: Vec<usize> = (0..n_sys).filter(|i| !keep_sorted.contains(i)).collect();
        let keep_dims: Vec<usize> = keep_sorted.iter().map(|&i| self.dims[i]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&i| self.dims[i]).collect();
        let dk: usize = keep_dims.iter().product();
        let dt: usize = traced_dims.iter().product();

        // Strides of each subsystem in the full index.
        let mut strides = vec![1usize; n_sys];
        for i in (0..n_sys.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        let offsets = |systems: &[usize], sys_dims: &[usize], count: usize| -> Vec<usize> {
            (0..count)
                .map(|mut idx| {
                    let mut off = 0;
                    for (pos, &sys) in systems.iter().enumerate().rev() {
                        let d = sys_dims[pos];
                        off += (idx % d) * strides[sys];
                        idx /= d;
                    }
                    off
                })
                .collect()
        };
        let keep_off = offsets(&keep_sorted, &keep_dims, dk);
        let trace_off = offsets(&traced, &traced_dims, dt);

        let mut out = ComplexMatrix::zeros(dk, dk);
        for r in 0..dk {
            for c in 0..dk {
                let mut acc = Complex::zero();
                for &t in &trace_off {
                    acc = acc + self.matrix[(keep_off[r] + t, keep_off[c] + t)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(Self::from_parts_unchecked(out, keep_dims))
    }

    /// Convex combination `sum_i w_i rho_i`; weights must be non-negative.
    pub fn mixture(parts: &[(T, &Self)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Validation("empty mixture".into()))?.1;
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        let mut total = T::zero();
        for (w, rho) in parts {
            if rho.dim() != first.dim() {
                return Err(Error::DimensionMismatch("mixture components differ in dimension".into()));
            }
            if *w < T::zero() {
                return Err(Error::Validation(format!("negative mixture weight {w}")));
            }
            acc = &acc + &rho.matrix.scale_real(*w);
            total = total + *w;
        }
        if total <= T::zero() {
            return Err(Error::Validation("mixture weights sum to zero".into()));
        }
        Ok(Self::from_parts_unchecked(acc.scale_real(T::one() / total), first.dims.clone()))
    }

    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        self.dim() == other.dim() && self.matrix.max_abs_diff(&other.matrix) <= tol
    }
}

/// Threshold below which an eigenvalue is treated as exactly zero.
///
/// Jacobi eigenvalues carry absolute error of order `n * eps * |lambda_max|`; anything
/// beneath a small multiple of that is indistinguishable from zero.
pub(crate) fn support_floor<T: Real>(values: &[T]) -> T {
    let scale = values.iter().fold(T::zero(), |m, &l| m.max(l.abs()));
    T::epsilon() * T::lit(16.0) * T::from_usize_lossy(values.len().max(1)) * scale
}

fn check_dims(dims: &[usize], order: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Validation("subsystem dimensions must be positive".into()));
    }
    let prod: usize = dims.iter().product();
    if prod != order {
        return Err(Error::Validation(format!(
            "subsystem dimensions {dims:?} multiply to {prod}, matrix order is {order}"
        )));
    }
    Ok(())
}

/// Kronecker product of two matrices (left factor most significant).
pub fn tensor_product<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    a.kron(b)
}

/// `rho^{(x) k}` with dims concatenated `k` times.
pub fn tensor_power<T: Real>(rho: &DensityMatrix<T>, k: usize, max_dim: usize) -> Result<DensityMatrix<T>> {
    if k == 0 {
        return Err(Error::Domain("tensor power needs k >= 1".into()));
    }
    let needed = rho.dim().checked_pow(k as u32).unwrap_or(usize::MAX);
    if needed > max_dim {
        return Err(Error::Capacity {
            what: format!("tensor power k={k}"),
            needed,
            cap: max_dim,
        });
    }
    let mut out = rho.clone();
    for _ in 1..k {
        out = out.tensor(rho, max_dim)?;
    }
    Ok(out)
}

/// Spectral power `rho^s` (free-function form of [`DensityMatrix::power`]).
pub fn mat_power<T: Real>(rho: &DensityMatrix<T>, s: T) -> Result<ComplexMatrix<T>> {
    rho.power(s)
}

pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, keep: &[usize]) -> Result<DensityMatrix<T>> {
    rho.partial_trace(keep)
}

/// A classical-quantum state `sum_c p_c |c><c| (x) rho_c`.
#[derive(Debug, Clone)]
pub struct CqEnsemble<T> {
    entries: Vec<CqEntry<T>>,
}

#[derive(Debug, Clone)]
pub struct CqEntry<T> {
    pub label: u32,
    pub weight: T,
    pub state: DensityMatrix<T>,
}

impl<T: Real> CqEnsemble<T> {
    pub fn new(entries: Vec<(u32, T, DensityMatrix<T>)>) -> Result<Self> {
        Self::with_tolerance(entries, T::default_tol())
    }

    pub fn with_tolerance(entries: Vec<(u32, T, DensityMatrix<T>)>, tol_trace: T) -> Result<Self> {
        let first = entries.first().ok_or_else(|| Error::Validation("empty ensemble".into()))?;
        let dims = first.2.dims().to_vec();
        let mut total = T::zero();
        for (label, w, st) in &entries {
            if *w < T::zero() || !w.is_finite() {
                return Err(Error::Validation(format!("label {label} has invalid weight {w}")));
            }
            if st.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch(format!(
                    "label {label} has dims {:?}, expected {dims:?}",
                    st.dims()
                )));
            }
            total = total + *w;
        }
        if (total - T::one()).abs() > tol_trace {
            return Err(Error::Validation(format!("ensemble weights sum to {total}")));
        }
        Ok(Self {
            entries: entries
                .into_iter()
                .map(|(label, weight, state)| CqEntry { label, weight, state })
                .collect(),
        })
    }

    pub fn entries(&self) -> &[CqEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn quantum_dims(&self) -> &[usize] {
        self.entries[0].state.dims()
    }

    /// Merge entries sharing a label into one weighted, renormalized state per label.
    pub fn marginal_by_label(&self) -> Result<Self> {
        let mut labels: Vec<u32> = self.entries.iter().map(|e| e.label).collect();
        labels.sort_unstable();
        labels.dedup();
        let mut merged = Vec::with_capacity(labels.len());
        for label in labels {
            let parts: Vec<(T, &DensityMatrix<T>)> = self
                .entries
                .iter()
                .filter(|e| e.label == label)
                .map(|e| (e.weight, &e.state))
                .collect();
            let w: T = parts.iter().map(|p| p.0).sum();
            if w > T::zero() {
                merged.push((label, w, DensityMatrix::mixture(&parts)?));
            }
        }
        Ok(Self {
            entries: merged
                .into_iter()
                .map(|(label, weight, state)| CqEntry { label, weight, state })
                .collect(),
        })
    }

    /// Quantum marginal `sum_c p_c rho_c`.
    pub fn average_state(&self) -> Result<DensityMatrix<T>> {
        let parts: Vec<(T, &DensityMatrix<T>)> = self.entries.iter().map(|e| (e.weight, &e.state)).collect();
        DensityMatrix::mixture(&parts)
    }

    /// Joint state as a block-diagonal matrix with the classical register most significant.
    pub fn joint_matrix(&self) -> ComplexMatrix<T> {
        let d = self.entries[0].state.dim();
        let n = self.entries.len();
        let mut out = ComplexMatrix::zeros(n * d, n * d);
        for (i, e) in self.entries.iter().enumerate() {
            for r in 0..d {
                for c in 0..d {
                    out[(i * d + r, i * d + c)] = e.state.matrix()[(r, c)].scale(e.weight);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bell() -> DensityMatrix<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [h, 0.0, 0.0, h].map(|x| Complex::new(x, 0.0));
        DensityMatrix::pure(&psi, vec![2, 2]).unwrap()
    }

    #[test]
    fn validation_rejects_bad_states() {
        let not_unit = ComplexMatrix::<f64>::diag_real(&[0.5, 0.6]);
        assert!(DensityMatrix::new(not_unit, vec![2]).is_err());
        let negative = ComplexMatrix::<f64>::diag_real(&[1.1, -0.1]);
        assert!(DensityMatrix::new(negative, vec![2]).is_err());
        let slightly_negative = ComplexMatrix::<f64>::diag_real(&[1.0 + 1e-10, -1e-10]);
        assert!(DensityMatrix::new(slightly_negative, vec![2]).is_ok());
        let wrong_dims = ComplexMatrix::<f64>::diag_real(&[0.5, 0.5]);
        assert!(DensityMatrix::new(wrong_dims, vec![3]).is_err());
    }

    #[test]
    fn power_of_maximally_mixed() {
        let rho = DensityMatrix::<f64>::maximally_mixed(vec![2]);
        let p = rho.power(0.5).unwrap();
        let expect = ComplexMatrix::identity(2).scale_real(std::f64::consts::FRAC_1_SQRT_2);
        assert!(p.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn power_of_projector_is_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random::pure_state::<f64, _>(3, &mut rng);
        for s in [0.0, 0.2, 0.5, 1.0] {
            assert!(p.power(s).unwrap().max_abs_diff(p.matrix()) < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn power_of_diagonal() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let p = rho.power(0.4).unwrap();
        assert!((p[(0, 0)].re - 0.3f64.powf(0.4)).abs() < 1e-14);
        assert!((p[(1, 1)].re - 0.7f64.powf(0.4)).abs() < 1e-14);
        assert!(p[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn power_zero_is_support_projector() {
        let rho = DensityMatrix::<f64>::diagonal(&[0.0, 1.0]).unwrap();
        let p = rho.power(0.0).unwrap();
        assert_eq!(p[(0, 0)].re, 0.0);
        assert!((p[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!(rho.power(1.5).is_err());
    }

    #[test]
    fn tensor_with_trivial_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random::density_matrix::<f64, _>(3, &mut rng);
        let one = DensityMatrix::<f64>::maximally_mixed(vec![1]);
        let t = rho.tensor(&one, DEFAULT_MAX_DIM).unwrap();
        assert!(t.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn tensor_power_of_mixed_qubit() {
        let rho = DensityMatrix::<f64>::maximally_mixed(vec![2]);
        let t = tensor_power(&rho, 3, DEFAULT_MAX_DIM).unwrap();
        assert_eq!(t.dims(), &[2, 2, 2]);
        assert!(t.matrix().max_abs_diff(&ComplexMatrix::identity(8).scale_real(0.125)) < 1e-15);
        assert!(matches!(tensor_power(&rho, 14, DEFAULT_MAX_DIM), Err(Error::Capacity { .. })));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let m = bell().partial_trace(&[0]).unwrap();
        assert!(m.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        let m = bell().partial_trace(&[1]).unwrap();
        assert!(m.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn product_state_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random::density_matrix::<f64, _>(2, &mut rng);
        let sigma = random::density_matrix::<f64, _>(3, &mut rng);
        let joint = rho.tensor(&sigma, DEFAULT_MAX_DIM).unwrap();
        assert!(joint.partial_trace(&[0]).unwrap().approx_eq(&rho, 1e-14));
        assert!(joint.partial_trace(&[1]).unwrap().approx_eq(&sigma, 1e-14));
    }

    #[test]
    fn trace_everything_out() {
        let m = bell().partial_trace(&[]).unwrap();
        assert_eq!(m.dim(), 1);
        assert!((m.trace() - 1.0).abs() < 1e-15);
        assert!(bell().partial_trace(&[5]).is_err());
    }

    #[test]
    fn ensemble_validation() {
        let a = DensityMatrix::<f64>::basis(2, 0);
        let b = DensityMatrix::<f64>::basis(3, 0);
        assert!(CqEnsemble::new(vec![(0, 0.5, a.clone()), (1, 0.5, b)]).is_err());
        assert!(CqEnsemble::new(vec![(0, 0.5, a.clone()), (1, 0.6, a.clone())]).is_err());
        assert!(CqEnsemble::new(vec![(0, -0.5, a.clone()), (1, 1.5, a)]).is_err());
    }
}
