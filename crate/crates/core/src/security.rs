//! Key-rate criteria for the repetition-code protocol.
//!
//! Every quantity here refers to an accepted block (`D = 1`). Entropies are in
//! bits; [`g_of_k`] alone uses the natural logarithm.

use std::fmt::Write as _;

use crate::divergence::{fidelity, helstrom_guess, nqcd, trace_distance, DEFAULT_NQCD_TOL};
use crate::error::{Error, Result};
use crate::protocol::{key_marginal, AttackModel};
use crate::qmath::{binary_entropy, cond_entropy_cq, tensor_power, DensityMatrix};
use crate::scalar::Real;

/// Default trace-distance tolerance for treating `rho_ET|01` and `rho_ET|10` as equal.
pub const DEFAULT_TOL_COND: f64 = 1e-7;

/// Largest block size evaluated exactly unless overridden.
pub const DEFAULT_K_CAP: usize = 5;

fn check_eps_k<T: Real>(eps: T, k: usize) -> Result<()> {
    if !(eps >= T::zero() && eps <= T::lit(0.5)) {
        return Err(Error::Domain(format!("QBER {eps} outside [0, 1/2]")));
    }
    if k == 0 {
        return Err(Error::Domain("block size must be at least 1".into()));
    }
    Ok(())
}

/// `delta_k = eps^k / (eps^k + (1-eps)^k)`, the probability that `C != C'`.
pub fn delta_k<T: Real>(eps: T, k: usize) -> Result<T> {
    check_eps_k(eps, k)?;
    // (eps / (1-eps))^k stays in [0, 1] and never overflows.
    let r = (eps / (T::one() - eps)).powi(k.min(i32::MAX as usize) as i32);
    Ok(r / (T::one() + r))
}

/// `H(C|C'; D=1) = h(delta_k)`.
pub fn bob_entropy<T: Real>(eps: T, k: usize) -> Result<T> {
    binary_entropy(delta_k(eps, k)?)
}

/// `H(C|ETM; D=1)` for a block of `k` rounds, evaluated at the all-zero message.
pub fn key_entropy<T: Real>(a: &AttackModel<T>, k: usize) -> Result<T> {
    let e = a.accepted_block_ensemble(&vec![0u8; k])?;
    cond_entropy_cq(&key_marginal(&e)?)
}

/// Devetak-Winter margin `H(C|ETM; D=1) - H(C|C'; D=1)`; positive means a positive key rate.
pub fn exact_dw_margin<T: Real>(a: &AttackModel<T>, k: usize) -> Result<T> {
    Ok(key_entropy(a, k)? - bob_entropy(a.eps(), k)?)
}

/// Eve's optimal probability of guessing `C` wrongly from `ET` on an accepted block.
pub fn eve_helstrom_error<T: Real>(a: &AttackModel<T>, m: &[u8]) -> Result<T> {
    let e = key_marginal(&a.accepted_block_ensemble(m)?)?;
    let entries = e.entries();
    if entries.len() < 2 {
        return Ok(T::zero());
    }
    let (e0, e1) = (&entries[0], &entries[1]);
    Ok(T::one() - helstrom_guess(e0.weight, &e0.state, e1.weight, &e1.state)?)
}

/// Outcome of testing all five conditions on one attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityVerdict<T> {
    pub q_value: T,
    pub f_value: T,
    pub d_value: T,
    pub eps: T,
    pub beta: T,
    /// `Q > beta`: positive key rate for large enough `k`.
    pub thm1_sufficient: bool,
    /// `rho_ET|01` and `rho_ET|10` coincide within the tolerance.
    pub thm2_applicable: bool,
    /// Applicable and `Q <= beta`: no positive key rate for any `k`.
    pub thm2_insecure: bool,
    /// `F^2 > beta`.
    pub f_sufficient: bool,
    /// `F <= beta` (the fidelity form of the insecurity condition, without the equality check).
    pub f_necessary: bool,
    /// `1 - d > beta`.
    pub d_sufficient: bool,
}

impl<T: Real> SecurityVerdict<T> {
    /// Apply the five threshold tests to precomputed `Q`, `F`, `d`.
    pub fn from_measures(q: T, f: T, d: T, eps: T, thm2_applicable: bool) -> Self {
        let beta = eps / (T::one() - eps);
        Self {
            q_value: q,
            f_value: f,
            d_value: d,
            eps,
            beta,
            thm1_sufficient: q > beta,
            thm2_applicable,
            thm2_insecure: thm2_applicable && q <= beta,
            f_sufficient: f * f > beta,
            f_necessary: f <= beta,
            d_sufficient: T::one() - d > beta,
        }
    }

    pub const CSV_HEADER: &'static str =
        "eps,beta,Q,F,d,thm1_sufficient,thm2_applicable,thm2_insecure,f_sufficient,f_necessary,d_sufficient";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_num(self.eps),
            fmt_num(self.beta),
            fmt_num(self.q_value),
            fmt_num(self.f_value),
            fmt_num(self.d_value),
            self.thm1_sufficient,
            self.thm2_applicable,
            self.thm2_insecure,
            self.f_sufficient,
            self.f_necessary,
            self.d_sufficient
        )
    }

    /// One-word summary used in tables.
    pub fn label(&self) -> &'static str {
        if self.thm1_sufficient {
            "secure (Thm 1)"
        } else if self.thm2_insecure {
            "insecure (Thm 2)"
        } else {
            "undecided"
        }
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "QBER eps            {}", fmt_num(self.eps));
        let _ = writeln!(s, "beta = eps/(1-eps)  {}", fmt_num(self.beta));
        let _ = writeln!(s, "Q(rho_00, rho_11)   {}", fmt_num(self.q_value));
        let _ = writeln!(s, "F(rho_00, rho_11)   {}", fmt_num(self.f_value));
        let _ = writeln!(s, "d(rho_00, rho_11)   {}", fmt_num(self.d_value));
        let _ = writeln!(s, "Q > beta            {}", self.thm1_sufficient);
        let _ = writeln!(s, "rho_01 = rho_10     {}", self.thm2_applicable);
        let _ = writeln!(s, "Q <= beta (applic.) {}", self.thm2_insecure);
        let _ = writeln!(s, "F^2 > beta          {}", self.f_sufficient);
        let _ = writeln!(s, "F <= beta           {}", self.f_necessary);
        let _ = writeln!(s, "1 - d > beta        {}", self.d_sufficient);
        let _ = write!(s, "verdict             {}", self.label());
        s
    }
}

pub(crate) fn fmt_num<T: Real>(x: T) -> String {
    format!("{:.12e}", x.as_f64())
}

/// Compute `Q`, `F`, `d` between `rho_ET|00` and `rho_ET|11` and test every condition.
pub fn evaluate_conditions<T: Real>(a: &AttackModel<T>, tol_cond: T) -> Result<SecurityVerdict<T>> {
    let (r00, r11) = (a.state(0, 0), a.state(1, 1));
    let q = nqcd(r00, r11, T::lit(DEFAULT_NQCD_TOL).max(T::epsilon().sqrt()))?.value;
    let f = fidelity(r00, r11)?;
    let d = trace_distance(r00, r11)?;
    let applicable = trace_distance(a.state(0, 1), a.state(1, 0))? <= tol_cond;
    Ok(SecurityVerdict::from_measures(q, f, d, a.eps(), applicable))
}

/// `Pr(C != C''|D=1) <= (delta_k + (1-delta_k) Q^k) / 2` for Eve's guess `C''`.
pub fn eve_guess_bound<T: Real>(q_value: T, eps: T, k: usize) -> Result<T> {
    if !(q_value >= T::zero() && q_value <= T::one()) {
        return Err(Error::Domain(format!("overlap {q_value} outside [0, 1]")));
    }
    let d = delta_k(eps, k)?;
    Ok((d + (T::one() - d) * q_value.powi(k as i32)) * T::lit(0.5))
}

/// The bound against `delta_k` and `Q` against `beta`; the two comparisons are equivalent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessBoundCheck<T> {
    pub bound: T,
    pub delta: T,
    pub bound_le_delta: bool,
    pub q_le_beta: bool,
}

pub fn guess_bound_check<T: Real>(q_value: T, eps: T, k: usize) -> Result<GuessBoundCheck<T>> {
    let bound = eve_guess_bound(q_value, eps, k)?;
    let delta = delta_k(eps, k)?;
    Ok(GuessBoundCheck {
        bound,
        delta,
        bound_le_delta: bound <= delta,
        q_le_beta: q_value <= eps / (T::one() - eps),
    })
}

/// `g(k) = (1/k) ln[(1 - d(rho0^k, rho1^k)) / 2] - ln Q(rho0, rho1)`.
pub fn g_of_k<T: Real>(rho0: &DensityMatrix<T>, rho1: &DensityMatrix<T>, k: usize, max_dim: usize) -> Result<T> {
    if k == 0 {
        return Err(Error::Domain("block size must be at least 1".into()));
    }
    let q = nqcd(rho0, rho1, T::lit(DEFAULT_NQCD_TOL).max(T::epsilon().sqrt()))?.value;
    let dk = trace_distance(&tensor_power(rho0, k, max_dim)?, &tensor_power(rho1, k, max_dim)?)?;
    let gap = T::one() - dk;
    let tiny = T::epsilon() * T::lit(64.0);
    if gap <= tiny {
        return Err(Error::Divergence(format!("trace distance of {k}-fold powers is 1, ln 0 is undefined")));
    }
    if q <= tiny {
        return Err(Error::Divergence("overlap Q is 0, ln Q is undefined".into()));
    }
    Ok((gap * T::lit(0.5)).ln() / T::from_usize_lossy(k) - q.ln())
}

/// `h_tilde - delta_k - (1 + delta_k) h(delta_k / (1 + delta_k))`.
pub fn continuity_lower_bound<T: Real>(h_tilde: T, eps: T, k: usize) -> Result<T> {
    if !(h_tilde >= T::zero() && h_tilde <= T::one()) {
        return Err(Error::Domain(format!("entropy {h_tilde} outside [0, 1]")));
    }
    let d = delta_k(eps, k)?;
    Ok(h_tilde - d - (T::one() + d) * binary_entropy(d / (T::one() + d))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::DensityMatrix;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn delta_values() {
        for eps in [0.0, 0.1, 0.3, 0.5] {
            assert!((delta_k::<f64>(eps, 1).unwrap() - eps).abs() < 1e-15);
        }
        for k in [1, 5, 40] {
            assert!((delta_k::<f64>(0.5, k).unwrap() - 0.5).abs() < 1e-15);
        }
        let expect = 0.001f64 / (0.001 + 0.729);
        assert!((delta_k::<f64>(0.1, 3).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.001_369_863).abs() < 1e-9);
        assert!(delta_k(0.2, 5000).unwrap() >= 0.0);
        assert!(delta_k(0.7, 2).is_err());
        assert!(delta_k(0.1, 0).is_err());
    }

    #[test]
    fn bob_entropy_values() {
        assert_eq!(bob_entropy(0.0, 3).unwrap(), 0.0);
        assert!((bob_entropy::<f64>(0.5, 3).unwrap() - 1.0).abs() < 1e-15);
        let d = delta_k(0.1f64, 3).unwrap();
        let h = -d * d.log2() - (1.0 - d) * (1.0 - d).log2();
        assert!((bob_entropy(0.1, 3).unwrap() - h).abs() < 1e-15);
        assert!((h - 0.015_004_738_487_466).abs() < 1e-12);
    }

    #[test]
    fn verdict_arithmetic() {
        let v = SecurityVerdict::from_measures(0.5, 0.8, 0.3, 0.2, false);
        assert!(v.thm1_sufficient && !v.thm2_insecure);
        let v = SecurityVerdict::from_measures(0.5, 0.8, 0.3, 0.4, true);
        assert!(v.thm2_insecure && !v.thm1_sufficient);
        assert_eq!(v.label(), "insecure (Thm 2)");
        assert_eq!(v.csv_row().split(',').count(), SecurityVerdict::<f64>::CSV_HEADER.split(',').count());
    }

    #[test]
    fn guess_bound_endpoints() {
        for (eps, k) in [(0.1f64, 1), (0.3, 4)] {
            assert!((eve_guess_bound(1.0, eps, k).unwrap() - 0.5).abs() < 1e-15);
            let d: f64 = delta_k(eps, k).unwrap();
            assert!((eve_guess_bound(0.0, eps, k).unwrap() - d / 2.0).abs() < 1e-15);
        }
        for q in [0.1, 0.2, 0.25, 0.3, 0.5] {
            for k in 1..5 {
                let c = guess_bound_check::<f64>(q, 0.2, k).unwrap();
                if (q - 0.25f64).abs() > 1e-9 {
                    assert_eq!(c.bound_le_delta, c.q_le_beta);
                }
            }
        }
    }

    #[test]
    fn g_of_k_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random::density_matrix::<f64, _>(2, &mut rng);
        for k in 1..4 {
            let g = g_of_k(&rho, &rho, k, 1 << 13).unwrap();
            assert!((g + std::f64::consts::LN_2 / k as f64).abs() < 1e-9);
        }
        let (a, b) = (DensityMatrix::<f64>::basis(2, 0), DensityMatrix::<f64>::basis(2, 1));
        assert!(matches!(g_of_k(&a, &b, 2, 1 << 13), Err(Error::Divergence(_))));
    }

    #[test]
    fn continuity_bound() {
        assert_eq!(continuity_lower_bound(0.7, 0.0, 3).unwrap(), 0.7);
        let d = delta_k(0.1f64, 3).unwrap();
        let x = d / (1.0 + d);
        let corr = (1.0 + d) * (-x * x.log2() - (1.0 - x) * (1.0 - x).log2());
        assert!((continuity_lower_bound::<f64>(0.9, 0.1, 3).unwrap() - (0.9 - d - corr)).abs() < 1e-15);
        assert!(continuity_lower_bound(1.5, 0.1, 3).is_err());
    }

    #[test]
    fn decoupled_eve_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random::density_matrix::<f64, _>(2, &mut rng);
        let a = AttackModel::from_conditional_states(0.1, &[s.clone(), s.clone(), s.clone(), s]).unwrap();
        for k in 1..4 {
            let expect = 1.0 - bob_entropy(0.1, k).unwrap();
            assert!((exact_dw_margin(&a, k).unwrap() - expect).abs() < 1e-9);
        }
    }
}
