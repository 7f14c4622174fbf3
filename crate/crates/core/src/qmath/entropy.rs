//! Entropies in bits.

use super::density::{support_floor, CqEnsemble, DensityMatrix};
use crate::error::{Error, Result};
use crate::scalar::{xlog2x, Real};

/// Von Neumann entropy `-sum lambda log2 lambda`.
pub fn vn_entropy<T: Real>(rho: &DensityMatrix<T>) -> T {
    spectral_entropy(&rho.clamped_eigenvalues())
}

/// Shannon entropy of a list of non-negative numbers (zeros contribute nothing).
pub(crate) fn spectral_entropy<T: Real>(values: &[T]) -> T {
    let h: T = values.iter().map(|&l| -xlog2x(l.max(T::zero()).min(T::one()))).sum();
    h.max(T::zero())
}

/// `h(p) = -p log2 p - (1-p) log2 (1-p)`.
pub fn binary_entropy<T: Real>(p: T) -> Result<T> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::Domain(format!("binary entropy argument {p} outside [0, 1]")));
    }
    Ok(-xlog2x(p) - xlog2x(T::one() - p))
}

/// `H(C|Q)` of a classical-quantum state.
///
/// Evaluated as `sum_c p_c H(rho_c) + H(p) - H(sum_c p_c rho_c)`, which is
/// `H(CQ) - H(Q)` for the block-diagonal joint state.
pub fn cond_entropy_cq<T: Real>(e: &CqEnsemble<T>) -> Result<T> {
    let e = e.marginal_by_label()?;
    let mut h_joint = T::zero();
    for entry in e.entries() {
        h_joint = h_joint - xlog2x(entry.weight) + entry.weight * vn_entropy(&entry.state);
    }
    let h_q = vn_entropy(&e.average_state()?);
    let n_labels = T::from_usize_lossy(e.len());
    Ok((h_joint - h_q).max(T::zero()).min(n_labels.log2()))
}

/// `H(C|Q)` via an explicit eigendecomposition of the joint block-diagonal matrix.
pub fn cond_entropy_cq_joint<T: Real>(e: &CqEnsemble<T>) -> Result<T> {
    let e = e.marginal_by_label()?;
    let joint = super::eigen::herm_eig(&e.joint_matrix(), T::default_tol())?;
    let floor = support_floor(&joint.values);
    let values: Vec<T> = joint.values.iter().map(|&l| if l <= floor { T::zero() } else { l }).collect();
    Ok(spectral_entropy(&values) - vn_entropy(&e.average_state()?))
}
