//! Distinguishability measures between density matrices.
//!
//! The non-logarithmic quantum Chernoff divergence is
//! `Q(rho, sigma) = inf_{0<s<1} Tr(rho^s sigma^{1-s})`. The objective is convex
//! in `s`, so it is minimized by golden-section search on `[0, 1]`, with the
//! endpoints evaluated under the support-projector convention `0^0 = 0`.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::qmath::eigen::herm_eig_unchecked;
use crate::qmath::density::support_floor;
use crate::qmath::{mat_power, DensityMatrix};
use crate::scalar::Real;

/// Default golden-section tolerance on the width of the `s` bracket.
pub const DEFAULT_NQCD_TOL: f64 = 1e-10;

const MAX_GOLDEN_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NqcdResult<T> {
    pub value: T,
    /// Location of the returned minimum.
    pub s_star: T,
    /// Objective evaluations spent.
    pub evaluations: usize,
}

fn check_dims<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states of order {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// `Tr(rho^s sigma^{1-s})` from the two matrix powers.
pub fn s_overlap<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>, s: T) -> Result<T> {
    check_dims(rho, sigma)?;
    let a = mat_power(rho, s)?;
    let b = mat_power(sigma, T::one() - s)?;
    Ok(a.trace_product(&b).re.max(T::zero()))
}

/// The map `s -> Tr(rho^s sigma^{1-s})` in the joint eigenbasis.
///
/// With `rho = sum_i l_i |v_i><v_i|` and `sigma = sum_j m_j |w_j><w_j|` the
/// objective is `sum_ij l_i^s m_j^{1-s} |<v_i|w_j>|^2`, so each evaluation is
/// `O(rank(rho) rank(sigma))` after one pair of eigendecompositions.
#[derive(Debug, Clone)]
pub struct ChernoffObjective<T> {
    rho_values: Vec<T>,
    sigma_values: Vec<T>,
    /// Row-major `|<v_i|w_j>|^2`, restricted to the supports.
    overlaps: Vec<T>,
}

impl<T: Real> ChernoffObjective<T> {
    pub fn new(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<Self> {
        check_dims(rho, sigma)?;
        let n = rho.dim();
        let (lr, ls) = (rho.clamped_eigenvalues(), sigma.clamped_eigenvalues());
        let (vr, vs) = (&rho.spectrum().vectors, &sigma.spectrum().vectors);
        let keep_r: Vec<usize> = (0..n).filter(|&i| lr[i] > T::zero()).collect();
        let keep_s: Vec<usize> = (0..n).filter(|&j| ls[j] > T::zero()).collect();
        let mut overlaps = Vec::with_capacity(keep_r.len() * keep_s.len());
        for &i in &keep_r {
            for &j in &keep_s {
                let mut ip = Complex::zero();
                for k in 0..n {
                    ip = ip + vr[(k, i)].conj() * vs[(k, j)];
                }
                overlaps.push(ip.norm_sqr());
            }
        }
        Ok(Self {
            rho_values: keep_r.iter().map(|&i| lr[i]).collect(),
            sigma_values: keep_s.iter().map(|&j| ls[j]).collect(),
            overlaps,
        })
    }

    pub fn eval(&self, s: T) -> T {
        let t = T::one() - s;
        let ms = self.sigma_values.len();
        let sigma_pow: Vec<T> = self.sigma_values.iter().map(|&m| m.powf(t)).collect();
        let mut acc = T::zero();
        for (i, &l) in self.rho_values.iter().enumerate() {
            let li = l.powf(s);
            let row = &self.overlaps[i * ms..(i + 1) * ms];
            let inner: T = row.iter().zip(&sigma_pow).map(|(&o, &m)| o * m).sum();
            acc = acc + li * inner;
        }
        acc.max(T::zero())
    }

    /// Golden-section minimization over `[0, 1]` to bracket width `tol`.
    pub fn minimize(&self, tol: T) -> NqcdResult<T> {
        let (value, s_star, evaluations) = golden_section(|s| self.eval(s), T::zero(), T::one(), tol);
        NqcdResult {
            value: value.min(T::one()).max(T::zero()),
            s_star,
            evaluations,
        }
    }
}

/// Golden-section search for the minimum of a convex function on `[lo, hi]`.
///
/// Returns `(min value, argmin, evaluations)`; the endpoints are also evaluated
/// and win if they are lower than the interior minimum.
pub(crate) fn golden_section<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T, tol: T) -> (T, T, usize) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evals = 2;
    let mut iters = 0;
    while (b - a) > tol && iters < MAX_GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evals += 1;
        iters += 1;
    }
    let mut best = if fc <= fd { (fc, c) } else { (fd, d) };
    for x in [lo, hi] {
        let fx = f(x);
        evals += 1;
        if fx < best.0 {
            best = (fx, x);
        }
    }
    (best.0, best.1, evals)
}

/// Non-logarithmic quantum Chernoff divergence `Q(rho, sigma)`.
pub fn nqcd<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>, tol: T) -> Result<NqcdResult<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!("golden-section tolerance {tol} must be positive")));
    }
    Ok(ChernoffObjective::new(rho, sigma)?.minimize(tol))
}

/// Trace distance `(1/2) ||rho - sigma||_1`.
pub fn trace_distance<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    check_dims(rho, sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    let norm: T = herm_eig_unchecked(&diff.hermitian_part()).values.iter().map(|l| l.abs()).sum();
    Ok((norm * T::lit(0.5)).min(T::one()).max(T::zero()))
}

/// Uhlmann fidelity `Tr sqrt(sqrt(rho) sigma sqrt(rho))` (not squared).
pub fn fidelity<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    check_dims(rho, sigma)?;
    let root = rho.sqrt();
    let inner = &(&root * sigma.matrix()) * &root;
    let values = herm_eig_unchecked(&inner.hermitian_part()).values;
    // Rounding leaves O(eps) eigenvalues where the product is rank deficient;
    // their square roots would add O(sqrt eps) to F.
    let floor = support_floor(&values);
    let f: T = values.iter().map(|&l| if l <= floor { T::zero() } else { l.sqrt() }).sum();
    Ok(f.min(T::one()).max(T::zero()))
}

/// Optimal success probability for discriminating `rho0` (prior `p0`) from `rho1` (prior `p1`).
pub fn helstrom_guess<T: Real>(p0: T, rho0: &DensityMatrix<T>, p1: T, rho1: &DensityMatrix<T>) -> Result<T> {
    check_dims(rho0, rho1)?;
    if p0 < T::zero() || p1 < T::zero() || (p0 + p1 - T::one()).abs() > T::default_tol() {
        return Err(Error::Validation(format!("priors {p0}, {p1} do not form a distribution")));
    }
    let diff = &rho0.matrix().scale_real(p0) - &rho1.matrix().scale_real(p1);
    let norm: T = herm_eig_unchecked(&diff.hermitian_part()).values.iter().map(|l| l.abs()).sum();
    Ok(((T::one() + norm) * T::lit(0.5)).min(T::one()))
}

/// The three measures between one pair of states, as reported by the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measures<T> {
    pub trace_distance: T,
    pub fidelity: T,
    pub nqcd: NqcdResult<T>,
}

impl<T: Real> Measures<T> {
    pub fn compute(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<Self> {
        Ok(Self {
            trace_distance: trace_distance(rho, sigma)?,
            fidelity: fidelity(rho, sigma)?,
            nqcd: nqcd(rho, sigma, T::lit(DEFAULT_NQCD_TOL).max(T::epsilon().sqrt()))?,
        })
    }

    /// `F^2 <= Q <= F` and `Q >= 1 - d`, each with additive slack.
    pub fn lattice_holds(&self, slack: T) -> bool {
        let (d, f, q) = (self.trace_distance, self.fidelity, self.nqcd.value);
        f * f - slack <= q && q <= f + slack && q >= T::one() - d - slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(p: &[f64]) -> DensityMatrix<f64> {
        DensityMatrix::diagonal(p).unwrap()
    }

    #[test]
    fn s_overlap_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random::density_matrix::<f64, _>(3, &mut rng);
        for s in [0.1, 0.5, 0.9] {
            assert!((s_overlap(&rho, &rho, s).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(s_overlap(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]), 0.5).unwrap().abs() < 1e-15);
        let v = s_overlap(&diag(&[0.1, 0.9]), &diag(&[0.9, 0.1]), 0.5).unwrap();
        assert!((v - 0.6).abs() < 1e-14);
        assert!(s_overlap(&diag(&[0.5, 0.5]), &DensityMatrix::maximally_mixed(vec![3]), 0.5).is_err());
    }

    #[test]
    fn nqcd_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rho = random::density_matrix::<f64, _>(4, &mut rng);
        assert!((nqcd(&rho, &rho, 1e-10).unwrap().value - 1.0).abs() < 1e-12);

        let r = nqcd(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5]), 1e-10).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9, "{r:?}");
        assert!(r.s_star < 1e-6);

        let r = nqcd(&diag(&[0.1, 0.9]), &diag(&[0.9, 0.1]), 1e-10).unwrap();
        assert!((r.value - 0.6).abs() < 1e-12);
        assert!((r.s_star - 0.5).abs() < 1e-6);
        assert!(r.evaluations > 10);
    }

    #[test]
    fn objective_matches_matrix_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 2..5 {
            let rho = random::density_matrix::<f64, _>(n, &mut rng);
            let sigma = random::density_matrix::<f64, _>(n, &mut rng);
            let obj = ChernoffObjective::new(&rho, &sigma).unwrap();
            for s in [0.0, 0.25, 0.5, 0.8, 1.0] {
                let direct = s_overlap(&rho, &sigma, s).unwrap();
                assert!((obj.eval(s) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_distance_examples() {
        assert!((trace_distance(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        assert!(trace_distance(&diag(&[0.3, 0.7]), &diag(&[0.3, 0.7])).unwrap().abs() < 1e-15);
        assert!((trace_distance(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let rho = random::density_matrix::<f64, _>(3, &mut rng);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
        assert!(fidelity(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap().abs() < 1e-15);
        let f = fidelity(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5])).unwrap();
        assert!((f - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn helstrom_examples() {
        let a = diag(&[0.3, 0.7]);
        assert!((helstrom_guess(0.5, &a, 0.5, &a).unwrap() - 0.5).abs() < 1e-15);
        let p = helstrom_guess(0.5, &diag(&[1.0, 0.0]), 0.5, &diag(&[0.0, 1.0])).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!(helstrom_guess(0.5, &a, 0.6, &a).is_err());
    }

    #[test]
    fn single_precision_nqcd() {
        let rho = DensityMatrix::<f32>::diagonal(&[0.1, 0.9]).unwrap();
        let sigma = DensityMatrix::<f32>::diagonal(&[0.9, 0.1]).unwrap();
        let r = nqcd(&rho, &sigma, 1e-5).unwrap();
        assert!((r.value - 0.6).abs() < 1e-5);
    }
}
