//! Device-independent bounds on Eve's guessing probability from a moment-matrix
//! relaxation.
//!
//! Generators are the outcome-0 projectors `A_x`, `B_y` and one binary
//! projector `E` for Eve. The objective
//! `<A_0 B_0 E> + <(1-A_0)(1-B_0)(1-E)>` expands to
//! `1 - <A_0> - <B_0> - <E> + <A_0 B_0> + <A_0 E> + <B_0 E>`; the cubic terms
//! cancel, so every moment it needs already sits in the level-1 matrix.

pub mod moments;
pub mod sdp;

pub use moments::{words_up_to, Gen, Monomial, MomentProblem, MAX_LEVEL, MAX_ORDER};
pub use sdp::{SdpProblem, SdpResult, SdpStatus, SparseSym, DEFAULT_SDP_TOL, MAX_ITERATIONS};

use crate::error::{Error, Result};
use crate::qmath::ComplexMatrix;
use crate::scalar::Real;
use crate::scenarios::{find_threshold, Behavior, BoundSource, Condition, ScenarioId, Threshold};

const ALICE: usize = 0;
const BOB: usize = 1;
const EVE: usize = 2;

/// Outcome of a moment-problem solve.
#[derive(Debug, Clone)]
pub struct SdpSolution<T> {
    /// Upper bound on the maximum: the minimization-side objective plus constants.
    pub optimum: T,
    /// Value of the moment assignment found (a lower estimate of the maximum).
    pub moment_value: T,
    pub duality_gap: T,
    pub iterations: usize,
    pub status: SdpStatus,
    /// Value of every moment class at the returned point.
    pub moments: Vec<T>,
}

impl<T: Real> MomentProblem<T> {
    /// Standard-form data: `Gamma = F_0 + sum_i y_i F_i` becomes `S = C - sum_i y_i A_i`
    /// with `C = F_0`, `A_i = -F_i`, `b` the objective on free moments. Also
    /// returns the free classes and the objective constant.
    pub fn to_standard_form(&self) -> (SdpProblem<T>, Vec<usize>, T) {
        let n = self.order();
        let free = self.free_classes();
        let mut var_of = vec![usize::MAX; self.classes().len()];
        for (i, &k) in free.iter().enumerate() {
            var_of[k] = i;
        }
        let mut c = vec![T::zero(); n * n];
        let mut a: Vec<SparseSym<T>> = vec![SparseSym::default(); free.len()];
        for i in 0..n {
            for j in i..n {
                let k = self.entry_class(i, j);
                match self.pins()[k] {
                    Some(v) => {
                        c[i * n + j] = v;
                        c[j * n + i] = v;
                    }
                    None => a[var_of[k]].entries.push((i, j, -T::one())),
                }
            }
        }
        let (terms, constant) = self.objective();
        let mut b = vec![T::zero(); free.len()];
        let mut c0 = constant;
        for &(k, coeff) in terms {
            match self.pins()[k] {
                Some(v) => c0 = c0 + coeff * v,
                None => b[var_of[k]] = b[var_of[k]] + coeff,
            }
        }
        (SdpProblem { n, c, a, b }, free, c0)
    }
}

/// Maximize the objective of a moment problem.
pub fn solve_sdp<T: Real>(p: &MomentProblem<T>, sdp_tol: T) -> Result<SdpSolution<T>> {
    let (std_form, free, c0) = p.to_standard_form();
    let r = sdp::solve(&std_form, sdp_tol)?;
    let mut moments: Vec<T> = p.pins().iter().map(|v| v.unwrap_or(T::zero())).collect();
    for (i, &k) in free.iter().enumerate() {
        moments[k] = r.y[i];
    }
    Ok(SdpSolution {
        optimum: r.primal_objective + c0,
        moment_value: r.dual_objective + c0,
        duality_gap: r.relative_gap,
        iterations: r.iterations,
        status: r.status,
        moments,
    })
}

/// Guessing-probability relaxation for a behavior at hierarchy `level`.
pub fn build_guessing_sdp<T: Real>(b: &Behavior<T>, level: usize) -> Result<MomentProblem<T>> {
    build_guessing_sdp_with(b, level, &[])
}

/// As [`build_guessing_sdp`] with additional basis words.
pub fn build_guessing_sdp_with<T: Real>(b: &Behavior<T>, level: usize, extra_words: &[Monomial]) -> Result<MomentProblem<T>> {
    let mut p = MomentProblem::new(&['A', 'B', 'E'], &[b.m_a(), b.m_b(), 1], level, extra_words)?;
    let classes: Vec<Monomial> = p.classes().to_vec();
    for m in &classes {
        let (a, bb, e) = (m.party_part(ALICE as u8), m.party_part(BOB as u8), m.party_part(EVE as u8));
        if !e.is_empty() || a.len() > 1 || bb.len() > 1 {
            continue;
        }
        let value = match (a.first(), bb.first()) {
            (None, None) => T::one(),
            (Some(x), None) => b.alice_zero(x.index as usize),
            (None, Some(y)) => b.bob_zero(y.index as usize),
            (Some(x), Some(y)) => b.prob(0, 0, x.index as usize, y.index as usize),
        };
        p.pin(m, value)?;
    }
    let (a0, b0, e) = (Gen::new(ALICE, 0), Gen::new(BOB, 0), Gen::new(EVE, 0));
    let one = T::one();
    p.set_objective(
        &[
            (Monomial::from_gen(a0), -one),
            (Monomial::from_gen(b0), -one),
            (Monomial::from_gen(e), -one),
            (Monomial::new([a0, b0]), one),
            (Monomial::new([a0, e]), one),
            (Monomial::new([b0, e]), one),
        ],
        one,
    )?;
    Ok(p)
}

/// CHSH in projector form, `sum_xy (-1)^(xy) (4<A_x B_y> - 2<A_x> - 2<B_y> + 1)`, with nothing pinned but `<1>`.
pub fn chsh_problem<T: Real>(level: usize) -> Result<MomentProblem<T>> {
    let mut p = MomentProblem::new(&['A', 'B'], &[2, 2], level, &[])?;
    let mut terms = Vec::new();
    let mut constant = T::zero();
    for x in 0..2 {
        for y in 0..2 {
            let s = if x * y == 1 { -T::one() } else { T::one() };
            let (a, b) = (Gen::new(ALICE, x), Gen::new(BOB, y));
            terms.push((Monomial::new([a, b]), s * T::lit(4.0)));
            terms.push((Monomial::from_gen(a), -s * T::lit(2.0)));
            terms.push((Monomial::from_gen(b), -s * T::lit(2.0)));
            constant = constant + s;
        }
    }
    p.set_objective(&terms, constant)?;
    Ok(p)
}

/// Moment values `Re Tr(rho w)` of every class for explicit operators.
///
/// `ops[party][index]` acts on the full space of `rho`.
pub fn explicit_moments<T: Real>(p: &MomentProblem<T>, ops: &[Vec<ComplexMatrix<T>>], rho: &ComplexMatrix<T>) -> Result<Vec<T>> {
    let dim = rho.rows();
    p.classes()
        .iter()
        .map(|m| {
            let mut w = ComplexMatrix::identity(dim);
            for g in m.word() {
                let op = ops
                    .get(g.party as usize)
                    .and_then(|v| v.get(g.index as usize))
                    .ok_or_else(|| Error::Validation(format!("no operator for generator in {m}")))?;
                w = &w * op;
            }
            Ok(rho.trace_product(&w).re)
        })
        .collect()
}

/// Upper bound on `d(rho_ET|00, rho_ET|11) = 2 P_g - 1` from the behavior alone.
///
/// `P_g` is the optimum divided by `Pr(a = b | 00) = 1 - eps`.
pub fn di_trace_distance_bound<T: Real>(b: &Behavior<T>, level: usize) -> Result<T> {
    Ok(di_guessing_bound(b, level)?.1)
}

/// Mixing weights with the uniform behavior tried when a solve does not converge.
///
/// Extremal behaviors (noiseless correlations) leave the moment matrix no
/// interior, and the interior-point iterates then stall. The relaxation's
/// optimum `O` is concave in the behavior (feasible moment vectors mix) and at
/// least `1/4` at the uniform behavior `u` (Eve always outputs 0), so
/// `O(p) <= (O((1-t) p + t u) - t/4) / (1-t)` stays a valid upper bound.
pub const MIXING_RETRIES: [f64; 3] = [1e-4, 1e-3, 1e-2];

/// Upper bound on the guessing objective for a behavior, via mixing if needed.
pub fn guessing_objective_bound<T: Real>(b: &Behavior<T>, level: usize) -> Result<T> {
    let tol = T::lit(DEFAULT_SDP_TOL).max(T::epsilon().sqrt());
    let sol = solve_sdp(&build_guessing_sdp(b, level)?, tol)?;
    match sol.status {
        SdpStatus::Optimal => return Ok(sol.optimum),
        SdpStatus::Infeasible => {
            return Err(Error::Validation("behavior admits no quantum realization at this level".into()))
        }
        SdpStatus::MaxIter => {}
    }
    for t in MIXING_RETRIES.map(T::lit) {
        let mixed = b.mixed_with_uniform(t)?;
        let sol = solve_sdp(&build_guessing_sdp(&mixed, level)?, tol)?;
        if sol.status == SdpStatus::Optimal {
            return Ok((sol.optimum - t * T::lit(0.25)) / (T::one() - t));
        }
    }
    Err(Error::Validation(format!("moment relaxation at level {level} did not converge")))
}

/// `(P_g bound, trace-distance bound)`.
pub fn di_guessing_bound<T: Real>(b: &Behavior<T>, level: usize) -> Result<(T, T)> {
    let pg = (guessing_objective_bound(b, level)? / (T::one() - b.qber())).min(T::one());
    let d = (T::lit(2.0) * pg - T::one()).min(T::one()).max(T::zero());
    Ok((pg, d))
}

/// Device-independent noise threshold of `Q > eps/(1-eps)` via `Q >= 1 - d`.
pub fn di_threshold<T: Real>(id: ScenarioId, level: usize, tol_q: T) -> Result<Threshold<T>> {
    find_threshold(Condition::SuffQ, id, BoundSource::DiSdp { level }, tol_q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::honest_behavior;

    #[test]
    fn trivial_objective() {
        let mut p = MomentProblem::<f64>::new(&['A', 'B'], &[1, 1], 1, &[]).unwrap();
        p.set_objective(&[(Monomial::identity(), 1.0)], 0.0).unwrap();
        let s = solve_sdp(&p, 1e-8).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.optimum - 1.0).abs() < 1e-7);
    }

    #[test]
    fn tsirelson_level_one() {
        let p = chsh_problem::<f64>(1).unwrap();
        let s = solve_sdp(&p, 1e-9).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.optimum - 2.0 * 2f64.sqrt()).abs() < 1e-5, "{}", s.optimum);
    }

    #[test]
    fn pinned_key_correlation() {
        let b = honest_behavior::<f64>(ScenarioId::Case1, 0.1).unwrap();
        let p = build_guessing_sdp(&b, 1).unwrap();
        assert_eq!(p.order(), 6);
        let k = p.class_of(&Monomial::new([Gen::new(0, 0), Gen::new(1, 0)])).unwrap();
        assert!((p.pins()[k].unwrap() - (1.0 - b.qber()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_behavior_gives_no_constraint() {
        let b = honest_behavior::<f64>(ScenarioId::Case1, 0.5).unwrap();
        let d = di_trace_distance_bound(&b, 1).unwrap();
        assert!((d - 1.0).abs() < 1e-6);
    }

    #[test]
    fn extremal_behavior_uses_mixing() {
        // Noiseless case-3 correlations stall the direct solve at level 2.
        let b = honest_behavior::<f64>(ScenarioId::Case3, 0.0).unwrap();
        let direct = solve_sdp(&build_guessing_sdp(&b, 2).unwrap(), DEFAULT_SDP_TOL).unwrap();
        assert_eq!(direct.status, SdpStatus::MaxIter);
        let (pg, d) = di_guessing_bound(&b, 2).unwrap();
        assert!(pg >= 0.5 && pg < 0.52, "{pg}");
        assert!(d < 0.04);
    }

    #[test]
    fn pr_box_is_infeasible() {
        let mut p = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                let want = x * y;
                for a in 0..2usize {
                    for bb in 0..2usize {
                        p.push(if (a ^ bb) == want { 0.5 } else { 0.0 });
                    }
                }
            }
        }
        let b = Behavior::<f64>::new(2, 2, p).unwrap();
        let prob = build_guessing_sdp(&b, 1).unwrap();
        assert_eq!(solve_sdp(&prob, 1e-8).unwrap().status, SdpStatus::Infeasible);
    }
}
