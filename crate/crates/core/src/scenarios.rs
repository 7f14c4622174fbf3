//! Depolarized Bell-state scenarios, their honest behaviors, the explicit
//! isotropic attack, and noise-threshold searches.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;

use crate::dibound;
use crate::divergence::{fidelity, nqcd, trace_distance, DEFAULT_NQCD_TOL};
use crate::error::{Error, Result};
use crate::protocol::AttackModel;
use crate::qmath::{consts, ComplexMatrix, DensityMatrix};
use crate::scalar::Real;

/// Table `Pr(ab|xy)` for binary outcomes, stored symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior<T> {
    m_a: usize,
    m_b: usize,
    /// Index `4 (x m_b + y) + 2a + b`.
    p: Vec<T>,
}

impl<T: Real> Behavior<T> {
    /// Validate a table that is already symmetrized.
    pub fn new(m_a: usize, m_b: usize, p: Vec<T>) -> Result<Self> {
        let b = Self::check_table(m_a, m_b, p)?;
        let tol = T::default_tol();
        for xy in 0..m_a * m_b {
            let c = &b.p[4 * xy..4 * xy + 4];
            if (c[0] - c[3]).abs() > tol || (c[1] - c[2]).abs() > tol {
                return Err(Error::Validation(format!(
                    "behavior is not symmetrized at setting {xy}; build it with Behavior::symmetrized"
                )));
            }
        }
        Ok(b)
    }

    /// Validate a raw table and apply the public bit-flip symmetrization `Pr(ab) -> (Pr(ab) + Pr(a'b'))/2`.
    pub fn symmetrized(m_a: usize, m_b: usize, p: Vec<T>) -> Result<Self> {
        let mut b = Self::check_table(m_a, m_b, p)?;
        let half = T::lit(0.5);
        for c in b.p.chunks_mut(4) {
            let (same, diff) = ((c[0] + c[3]) * half, (c[1] + c[2]) * half);
            c.copy_from_slice(&[same, diff, diff, same]);
        }
        Ok(b)
    }

    /// `(1 - t) p + t u` with `u` the uniform behavior.
    pub fn mixed_with_uniform(&self, t: T) -> Result<Self> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::Domain(format!("mixing weight {t} outside [0, 1]")));
        }
        let quarter = T::lit(0.25);
        let p = self.p.iter().map(|&v| (T::one() - t) * v + t * quarter).collect();
        Ok(Self {
            m_a: self.m_a,
            m_b: self.m_b,
            p,
        })
    }

    fn check_table(m_a: usize, m_b: usize, p: Vec<T>) -> Result<Self> {
        if m_a == 0 || m_b == 0 {
            return Err(Error::Validation("input counts must be positive".into()));
        }
        if p.len() != 4 * m_a * m_b {
            return Err(Error::Validation(format!("expected {} probabilities, got {}", 4 * m_a * m_b, p.len())));
        }
        let tol = T::default_tol();
        if p.iter().any(|&v| !(v >= -tol && v <= T::one() + tol)) {
            return Err(Error::Validation("probabilities must lie in [0, 1]".into()));
        }
        let b = Self { m_a, m_b, p };
        for x in 0..m_a {
            for y in 0..m_b {
                let s: T = (0..4).map(|i| b.p[4 * (x * m_b + y) + i]).sum();
                if (s - T::one()).abs() > tol {
                    return Err(Error::Validation(format!("setting ({x},{y}) sums to {s}")));
                }
            }
        }
        for x in 0..m_a {
            let first = b.marginal_a(0, x, 0);
            if (1..m_b).any(|y| (b.marginal_a(0, x, y) - first).abs() > tol) {
                return Err(Error::Validation(format!("Alice's marginal for input {x} depends on Bob's input")));
            }
        }
        for y in 0..m_b {
            let first = b.marginal_b(0, 0, y);
            if (1..m_a).any(|x| (b.marginal_b(0, x, y) - first).abs() > tol) {
                return Err(Error::Validation(format!("Bob's marginal for input {y} depends on Alice's input")));
            }
        }
        Ok(b)
    }

    pub fn m_a(&self) -> usize {
        self.m_a
    }

    pub fn m_b(&self) -> usize {
        self.m_b
    }

    pub fn table(&self) -> &[T] {
        &self.p
    }

    /// `Pr(ab|xy)`.
    pub fn prob(&self, a: usize, b: usize, x: usize, y: usize) -> T {
        self.p[4 * (x * self.m_b + y) + 2 * a + b]
    }

    fn marginal_a(&self, a: usize, x: usize, y: usize) -> T {
        self.prob(a, 0, x, y) + self.prob(a, 1, x, y)
    }

    fn marginal_b(&self, b: usize, x: usize, y: usize) -> T {
        self.prob(0, b, x, y) + self.prob(1, b, x, y)
    }

    /// `Pr(a=0|x)`.
    pub fn alice_zero(&self, x: usize) -> T {
        self.marginal_a(0, x, 0)
    }

    /// `Pr(b=0|y)`.
    pub fn bob_zero(&self, y: usize) -> T {
        self.marginal_b(0, 0, y)
    }

    /// QBER of the key pair `(x, y) = (0, 0)`.
    pub fn qber(&self) -> T {
        self.prob(0, 1, 0, 0) + self.prob(1, 0, 0, 0)
    }

    /// Correlator `<A_x B_y> = sum_ab (-1)^(a+b) Pr(ab|xy)`.
    pub fn correlator(&self, x: usize, y: usize) -> T {
        self.prob(0, 0, x, y) + self.prob(1, 1, x, y) - self.prob(0, 1, x, y) - self.prob(1, 0, x, y)
    }
}

/// One of the three measurement scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    /// Two CHSH-optimal settings per side.
    Case1,
    /// CHSH settings plus a key setting for Bob matching Alice's `Z`.
    Case2,
    /// Four settings per side, identical for Alice and Bob.
    Case3,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 3] = [ScenarioId::Case1, ScenarioId::Case2, ScenarioId::Case3];

    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Self::Case1),
            2 => Ok(Self::Case2),
            3 => Ok(Self::Case3),
            _ => Err(Error::Validation(format!("unknown scenario case {n}; expected 1, 2 or 3"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Self::Case1 => 1,
            Self::Case2 => 2,
            Self::Case3 => 3,
        }
    }

    /// `(M_A, M_B)`.
    pub fn settings(self) -> (usize, usize) {
        match self {
            Self::Case1 => (2, 2),
            Self::Case2 => (2, 3),
            Self::Case3 => (4, 4),
        }
    }
}

/// `cos(theta) Z + sin(theta) X`.
pub fn xz_observable<T: Real>(theta: T) -> ComplexMatrix<T> {
    &consts::pauli_z::<T>().scale_real(theta.cos()) + &consts::pauli_x::<T>().scale_real(theta.sin())
}

/// Alice's and Bob's `+-1` observables for a scenario.
pub fn case_measurements<T: Real>(id: ScenarioId) -> (Vec<ComplexMatrix<T>>, Vec<ComplexMatrix<T>>) {
    let q = T::FRAC_PI_4();
    match id {
        ScenarioId::Case1 => case1_measurements(q, T::lit(3.0) * q),
        ScenarioId::Case2 => {
            let a = vec![xz_observable(T::zero()), xz_observable(T::lit(2.0) * q)];
            let b = vec![xz_observable(T::zero()), xz_observable(q), xz_observable(T::lit(3.0) * q)];
            (a, b)
        }
        ScenarioId::Case3 => {
            let a: Vec<_> = (0..4).map(|j| xz_observable(T::from_usize_lossy(j) * q)).collect();
            (a.clone(), a)
        }
    }
}

/// Case-1 observables with Bob's two angles in the `XZ` plane; `(pi/4, 3pi/4)` is the CHSH choice.
pub fn case1_measurements<T: Real>(theta_b0: T, theta_b1: T) -> (Vec<ComplexMatrix<T>>, Vec<ComplexMatrix<T>>) {
    let a = vec![xz_observable(T::zero()), xz_observable(T::FRAC_PI_2())];
    let b = vec![xz_observable(theta_b0), xz_observable(theta_b1)];
    (a, b)
}

/// `|Phi+> = (|00> + |11>)/sqrt 2` followed by `|Phi->`, `|Psi+>`, `|Psi->`.
pub fn bell_basis<T: Real>() -> [Vec<Complex<T>>; 4] {
    let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let z = Complex::new(T::zero(), T::zero());
    [vec![h, z, z, h], vec![h, z, z, -h], vec![z, h, h, z], vec![z, h, -h, z]]
}

/// Bell-diagonal weights of the depolarized state: `1 - 3q/2` on `Phi+`, `q/2` elsewhere.
pub fn depolarized_weights<T: Real>(q: T) -> [T; 4] {
    let o = q * T::lit(0.5);
    [T::one() - T::lit(3.0) * o, o, o, o]
}

/// `(I + (-1)^a O) / 2`.
fn outcome_projector<T: Real>(o: &ComplexMatrix<T>, a: usize) -> ComplexMatrix<T> {
    let sign = if a == 0 { T::one() } else { -T::one() };
    (&ComplexMatrix::identity(2) + &o.scale_real(sign)).scale_real(T::lit(0.5))
}

fn check_q<T: Real>(q: T) -> Result<()> {
    if !(q >= T::zero() && q <= T::lit(0.5)) {
        return Err(Error::Domain(format!("noise parameter q = {q} outside [0, 1/2]")));
    }
    Ok(())
}

/// Born-rule behavior of observables on `|Phi+>` mixed as `(1-2q) Pr + q/2`.
pub fn behavior_from_observables<T: Real>(
    alice: &[ComplexMatrix<T>],
    bob: &[ComplexMatrix<T>],
    q: T,
) -> Result<Behavior<T>> {
    check_q(q)?;
    let phi = &bell_basis::<T>()[0];
    let mix = T::one() - T::lit(2.0) * q;
    let flat = q * T::lit(0.5);
    let mut p = Vec::with_capacity(4 * alice.len() * bob.len());
    for ax in alice {
        for by in bob {
            for a in 0..2 {
                for b in 0..2 {
                    let proj = outcome_projector(ax, a).kron(&outcome_projector(by, b));
                    let target = expectation(&proj, phi);
                    p.push((mix * target + flat).max(T::zero()));
                }
            }
        }
    }
    Behavior::symmetrized(alice.len(), bob.len(), p)
}

fn expectation<T: Real>(op: &ComplexMatrix<T>, v: &[Complex<T>]) -> T {
    let mut acc = Complex::new(T::zero(), T::zero());
    for r in 0..v.len() {
        for c in 0..v.len() {
            acc = acc + v[r].conj() * op[(r, c)] * v[c];
        }
    }
    acc.re
}

/// Honest depolarized behavior of a scenario.
pub fn honest_behavior<T: Real>(id: ScenarioId, q: T) -> Result<Behavior<T>> {
    let (a, b) = case_measurements::<T>(id);
    behavior_from_observables(&a, &b, q)
}

/// Eve holds the purification `sum_i sqrt(l_i) |Bell_i>|i>_E` of the depolarized
/// state; her conditional states follow from projecting `A_0 (x) B_0`.
///
/// A zero-probability outcome pair is assigned Eve's marginal state.
pub fn isotropic_attack<T: Real>(id: ScenarioId, q: T) -> Result<AttackModel<T>> {
    let (a, b) = case_measurements::<T>(id);
    isotropic_attack_from_observables(&a[0], &b[0], q)?.with_origin(honest_behavior(id, q)?)
}

/// The isotropic attack for an explicit key pair `(A_0, B_0)`.
pub fn isotropic_attack_from_observables<T: Real>(
    a0: &ComplexMatrix<T>,
    b0: &ComplexMatrix<T>,
    q: T,
) -> Result<AttackModel<T>> {
    check_q(q)?;
    let bells = bell_basis::<T>();
    let lambda = depolarized_weights(q);
    let marginal = DensityMatrix::diagonal(&lambda)?;
    let zero = Complex::new(T::zero(), T::zero());
    let mut sigma = Vec::with_capacity(4);
    let mut probs = [T::zero(); 4];
    for a in 0..2 {
        for b in 0..2 {
            // <ab| on AB spans the rank-one outcome projector.
            let (ea, fb) = (leading_vector(&outcome_projector(a0, a)), leading_vector(&outcome_projector(b0, b)));
            let bra: Vec<Complex<T>> = (0..4).map(|i| ea[i / 2] * fb[i % 2]).collect();
            let phi: Vec<Complex<T>> = (0..4)
                .map(|i| {
                    let ip = bra.iter().zip(&bells[i]).fold(zero, |acc, (x, y)| acc + x.conj() * *y);
                    ip.scale(lambda[i].sqrt())
                })
                .collect();
            let p: T = phi.iter().map(|z| z.norm_sqr()).sum();
            probs[2 * a + b] = p;
            if p > T::epsilon() * T::lit(16.0) {
                sigma.push(DensityMatrix::pure(&phi, vec![4])?);
            } else {
                sigma.push(marginal.clone());
            }
        }
    }
    let eps = (probs[1] + probs[2]).min(T::lit(0.5)).max(T::zero());
    let sigma: [DensityMatrix<T>; 4] = sigma.try_into().expect("four outcome pairs");
    AttackModel::from_conditional_states(eps, &sigma)
}

/// Unit vector spanning a rank-one qubit projector.
fn leading_vector<T: Real>(p: &ComplexMatrix<T>) -> [Complex<T>; 2] {
    let c = if p[(0, 0)].re >= p[(1, 1)].re { 0 } else { 1 };
    let (u, v) = (p[(0, c)], p[(1, c)]);
    let n = (u.norm_sqr() + v.norm_sqr()).sqrt();
    [u.unscale(n), v.unscale(n)]
}

/// Which security condition a threshold search tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    SuffQ,
    NeccQ,
    SuffF,
    NeccF,
    SuffD,
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "suffQ" => Ok(Self::SuffQ),
            "neccQ" => Ok(Self::NeccQ),
            "suffF" => Ok(Self::SuffF),
            "neccF" => Ok(Self::NeccF),
            "suffD" => Ok(Self::SuffD),
            _ => Err(Error::Validation(format!(
                "unknown condition {s:?}; expected suffQ, neccQ, suffF, neccF or suffD"
            ))),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SuffQ => "suffQ",
            Self::NeccQ => "neccQ",
            Self::SuffF => "suffF",
            Self::NeccF => "neccF",
            Self::SuffD => "suffD",
        })
    }
}

/// Where the distinguishability values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSource {
    /// Exact `Q`, `F`, `d` of the isotropic attack.
    ExactAttack,
    /// `d` bounded device-independently at the given hierarchy level; `Q, F >= 1 - d`.
    DiSdp { level: usize },
}

/// Signed margin of a condition at noise `q`: positive where the key-rate
/// inequality (`Q > beta`, `F^2 > beta`, `1 - d > beta`) holds. The two
/// insecurity conditions use the same quantity with the opposite reading, so
/// their threshold is where insecurity starts.
pub fn condition_margin<T: Real>(condition: Condition, id: ScenarioId, source: BoundSource, q: T) -> Result<T> {
    match source {
        BoundSource::ExactAttack => {
            let a = isotropic_attack(id, q)?;
            let beta = a.beta();
            let (r0, r1) = (a.state(0, 0), a.state(1, 1));
            let tol = T::lit(DEFAULT_NQCD_TOL).max(T::epsilon().sqrt());
            Ok(match condition {
                Condition::SuffQ | Condition::NeccQ => nqcd(r0, r1, tol)?.value - beta,
                Condition::SuffF => fidelity(r0, r1)?.powi(2) - beta,
                Condition::NeccF => fidelity(r0, r1)? - beta,
                Condition::SuffD => T::one() - trace_distance(r0, r1)? - beta,
            })
        }
        BoundSource::DiSdp { level } => {
            let b = honest_behavior(id, q)?;
            let beta = b.qber() / (T::one() - b.qber());
            let lower = T::one() - dibound::di_trace_distance_bound(&b, level)?;
            match condition {
                Condition::SuffQ | Condition::SuffD => Ok(lower - beta),
                Condition::SuffF => Ok(lower * lower - beta),
                Condition::NeccQ | Condition::NeccF => Err(Error::Unsupported(
                    "an upper bound on the trace distance cannot certify an insecurity condition".into(),
                )),
            }
        }
    }
}

/// Result of a bisection search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold<T> {
    /// Midpoint of the final bracket.
    pub q_star: T,
    /// Largest probed `q` with positive margin.
    pub lo: T,
    /// Smallest probed `q` above `lo` with non-positive margin.
    pub hi: T,
    pub evaluations: usize,
}

/// Number of points in the pre-scan grid over `[0, 1/2]`.
pub const PRESCAN_POINTS: usize = 21;

/// Default bisection width.
pub const DEFAULT_TOL_Q: f64 = 1e-4;

/// Bisect a margin function on `[0, 1/2]` after checking for a single sign change on a grid.
pub fn bisect_threshold<T: Real>(margin: impl Fn(T) -> Result<T> + Sync, tol_q: T) -> Result<Threshold<T>> {
    if !(tol_q > T::zero()) {
        return Err(Error::Domain("bisection tolerance must be positive".into()));
    }
    let half = T::lit(0.5);
    let step = half / T::from_usize_lossy(PRESCAN_POINTS - 1);
    let grid: Vec<T> = (0..PRESCAN_POINTS).map(|i| T::from_usize_lossy(i) * step).collect();
    let values: Vec<T> = grid.par_iter().map(|&q| margin(q)).collect::<Result<_>>()?;
    let holds: Vec<bool> = values.iter().map(|&v| v > T::zero()).collect();
    let changes: Vec<usize> = (1..holds.len()).filter(|&i| holds[i] != holds[i - 1]).collect();
    if changes.is_empty() {
        return Err(Error::NoThreshold(format!(
            "condition {} everywhere on [0, 1/2]",
            if holds[0] { "holds" } else { "fails" }
        )));
    }
    if changes.len() > 1 || !holds[0] {
        return Err(Error::NoThreshold(format!(
            "margin is not a single positive-to-negative crossing on the {PRESCAN_POINTS}-point grid"
        )));
    }
    let i = changes[0];
    let (mut lo, mut hi) = (grid[i - 1], grid[i]);
    let mut evaluations = PRESCAN_POINTS;
    while hi - lo > tol_q {
        let mid = (lo + hi) * half;
        evaluations += 1;
        if margin(mid)? > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Threshold {
        q_star: (lo + hi) * half,
        lo,
        hi,
        evaluations,
    })
}

/// Noise threshold of `condition` for scenario `id`.
pub fn find_threshold<T: Real>(
    condition: Condition,
    id: ScenarioId,
    source: BoundSource,
    tol_q: T,
) -> Result<Threshold<T>> {
    bisect_threshold(|q| condition_margin(condition, id, source, q), tol_q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::herm_eig;

    #[test]
    fn observables_are_involutions() {
        for id in ScenarioId::ALL {
            let (a, b) = case_measurements::<f64>(id);
            assert_eq!((a.len(), b.len()), id.settings());
            for o in a.iter().chain(&b) {
                let s = herm_eig(o, 1e-12).unwrap();
                assert!((s.values[0] + 1.0).abs() < 1e-12 && (s.values[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chsh_value_case1() {
        let b = honest_behavior::<f64>(ScenarioId::Case1, 0.0).unwrap();
        // With B_1 = (X - Z)/sqrt 2 the negative sign falls on (0, 1).
        let chsh = b.correlator(0, 0) - b.correlator(0, 1) + b.correlator(1, 0) + b.correlator(1, 1);
        assert!((chsh - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn qber_values() {
        let b = honest_behavior::<f64>(ScenarioId::Case2, 0.0).unwrap();
        assert!(b.qber().abs() < 1e-15);
        assert!((b.correlator(0, 0) - 1.0).abs() < 1e-12);
        for q in [0.05, 0.2, 0.5] {
            let b = honest_behavior::<f64>(ScenarioId::Case2, q).unwrap();
            assert!((b.qber() - q).abs() < 1e-12);
        }
        let b = honest_behavior::<f64>(ScenarioId::Case1, 0.0).unwrap();
        let s = (std::f64::consts::PI / 8.0).sin().powi(2);
        assert!((b.qber() - s).abs() < 1e-12);
    }

    #[test]
    fn uniform_at_half() {
        for id in ScenarioId::ALL {
            let b = honest_behavior::<f64>(id, 0.5).unwrap();
            assert!(b.table().iter().all(|&p| (p - 0.25).abs() < 1e-12));
            let b = honest_behavior::<f64>(id, 0.17).unwrap();
            for x in 0..b.m_a() {
                assert!((b.alice_zero(x) - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn asymmetric_table_is_rejected() {
        let p = vec![0.5, 0.0, 0.0, 0.5, 0.4, 0.1, 0.0, 0.5];
        assert!(Behavior::<f64>::new(1, 2, p.clone()).is_err());
        let p = vec![0.6, 0.0, 0.0, 0.4];
        assert!(matches!(Behavior::<f64>::new(1, 1, p.clone()), Err(Error::Validation(_))));
        let b = Behavior::<f64>::symmetrized(1, 1, p).unwrap();
        assert_eq!(b.table(), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn isotropic_attack_consistency() {
        for id in ScenarioId::ALL {
            for i in 0..=10 {
                let q = i as f64 * 0.05;
                let a = isotropic_attack(id, q).unwrap();
                assert!((a.eps() - honest_behavior(id, q).unwrap().qber()).abs() < 1e-12);
                assert_eq!(a.et_dim(), 8);
            }
        }
        let a = isotropic_attack::<f64>(ScenarioId::Case1, 0.0).unwrap();
        let q = nqcd(a.state(0, 0), a.state(1, 1), 1e-10).unwrap().value;
        assert!((q - 1.0).abs() < 1e-9);
    }

    #[test]
    fn condition_parsing() {
        for c in ["suffQ", "neccQ", "suffF", "neccF", "suffD"] {
            assert_eq!(c.parse::<Condition>().unwrap().to_string(), c);
        }
        assert!("foo".parse::<Condition>().is_err());
    }

    #[test]
    fn bisection_on_linear_margin() {
        let t = bisect_threshold(|q: f64| Ok(0.123 - q), 1e-6).unwrap();
        assert!((t.q_star - 0.123).abs() < 1e-6);
        assert!(matches!(bisect_threshold(|_q: f64| Ok(1.0), 1e-4), Err(Error::NoThreshold(_))));
        assert!(matches!(
            bisect_threshold(|q: f64| Ok((q * 40.0).sin()), 1e-4),
            Err(Error::NoThreshold(_))
        ));
    }
}
