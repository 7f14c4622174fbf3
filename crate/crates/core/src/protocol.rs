//! Protocol states of the repetition-code advantage-distillation scheme and a
//! Monte-Carlo simulator of its classical part.
//!
//! Conventions: a single-round conditional state `rho_ET|ab` lives on
//! `E (x) T` with `E` most significant, and the four states are stored in the
//! order `00, 01, 10, 11` (index `2a + b`). A `k`-round block state is the
//! ordered tensor product over rounds, round 1 most significant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qmath::{consts, CqEnsemble, DensityMatrix, DEFAULT_MAX_DIM};
use crate::qmath::ComplexMatrix;
use crate::scalar::Real;
use crate::scenarios::Behavior;

/// Symmetrized single-round states `rho_ET|ab = (sigma_E|ab (x) |0><0| + sigma_E|(1-a)(1-b) (x) |1><1|) / 2`.
pub fn symmetrize<T: Real>(sigma: &[DensityMatrix<T>; 4]) -> Result<[DensityMatrix<T>; 4]> {
    let dims = sigma[0].dims().to_vec();
    if sigma.iter().any(|s| s.dims() != dims.as_slice()) {
        return Err(Error::DimensionMismatch("conditional states must share subsystem dimensions".into()));
    }
    let half = T::lit(0.5);
    let p0 = consts::basis_projector::<T>(2, 0).scale_real(half);
    let p1 = consts::basis_projector::<T>(2, 1).scale_real(half);
    let mut et_dims = dims;
    et_dims.push(2);
    let build = |ab: usize| {
        let m = &sigma[ab].matrix().kron(&p0) + &sigma[3 - ab].matrix().kron(&p1);
        DensityMatrix::from_parts_unchecked(m, et_dims.clone())
    };
    Ok([build(0), build(1), build(2), build(3)])
}

/// QBER `Pr(01|00) + Pr(10|00)` of a symmetrized behavior.
pub fn qber<T: Real>(b: &Behavior<T>) -> T {
    b.qber()
}

/// Eve's four symmetrized single-round states together with the QBER.
#[derive(Debug, Clone)]
pub struct AttackModel<T> {
    eps: T,
    states: [DensityMatrix<T>; 4],
    origin: Option<Behavior<T>>,
    max_dim: usize,
}

impl<T: Real> AttackModel<T> {
    /// From already symmetrized states `rho_ET|ab` whose last subsystem is the qubit `T`.
    pub fn new(eps: T, states: [DensityMatrix<T>; 4]) -> Result<Self> {
        if !(eps >= T::zero() && eps <= T::lit(0.5)) {
            return Err(Error::Domain(format!("QBER {eps} outside [0, 1/2]")));
        }
        let dims = states[0].dims();
        if states.iter().any(|s| s.dims() != dims) {
            return Err(Error::DimensionMismatch("attack states must share subsystem dimensions".into()));
        }
        if dims.len() < 2 || *dims.last().unwrap() != 2 {
            return Err(Error::Validation(format!(
                "attack states need an E (x) T factorization with a qubit T register, got dims {dims:?}"
            )));
        }
        Ok(Self {
            eps,
            states,
            origin: None,
            max_dim: DEFAULT_MAX_DIM,
        })
    }

    /// From unsymmetrized conditional states `sigma_E|ab`.
    pub fn from_conditional_states(eps: T, sigma: &[DensityMatrix<T>; 4]) -> Result<Self> {
        Self::new(eps, symmetrize(sigma)?)
    }

    /// Attach the behavior the attack reproduces; its QBER must match.
    pub fn with_origin(mut self, origin: Behavior<T>) -> Result<Self> {
        let e = origin.qber();
        if (e - self.eps).abs() > T::default_tol() * T::lit(10.0) {
            return Err(Error::Validation(format!("attack QBER {} disagrees with behavior QBER {e}", self.eps)));
        }
        self.origin = Some(origin);
        Ok(self)
    }

    pub fn with_max_dim(mut self, max_dim: usize) -> Self {
        self.max_dim = max_dim;
        self
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn states(&self) -> &[DensityMatrix<T>; 4] {
        &self.states
    }

    /// `rho_ET|ab`.
    pub fn state(&self, a: u8, b: u8) -> &DensityMatrix<T> {
        &self.states[usize::from(2 * (a & 1) + (b & 1))]
    }

    pub fn origin(&self) -> Option<&Behavior<T>> {
        self.origin.as_ref()
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Dimension of Eve's register without `T`.
    pub fn e_dim(&self) -> usize {
        self.states[0].dim() / 2
    }

    pub fn et_dim(&self) -> usize {
        self.states[0].dim()
    }

    /// `epsilon / (1 - epsilon)`.
    pub fn beta(&self) -> T {
        self.eps / (T::one() - self.eps)
    }

    fn check_block(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::Domain("block size must be at least 1".into()));
        }
        let needed = checked_pow(self.et_dim(), k);
        match needed {
            Some(n) if n <= self.max_dim => Ok(()),
            _ => Err(Error::Capacity {
                what: format!("block state of {k} rounds"),
                needed: needed.unwrap_or(usize::MAX),
                cap: self.max_dim,
            }),
        }
    }

    /// `rho_ET|ab` for bit strings `a`, `b`: the tensor product of per-round states.
    pub fn block_state(&self, a: &[u8], b: &[u8]) -> Result<DensityMatrix<T>> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch("bit strings differ in length".into()));
        }
        check_bits(a)?;
        check_bits(b)?;
        self.check_block(a.len())?;
        let mut m = self.state(a[0], b[0]).matrix().clone();
        for i in 1..a.len() {
            m = m.kron(self.state(a[i], b[i]).matrix());
        }
        let single = self.states[0].dims();
        let dims = (0..a.len()).flat_map(|_| single.iter().copied()).collect();
        Ok(DensityMatrix::from_parts_unchecked(m, dims))
    }

    /// `(|0><0| (x) rho_ET|mm + |1><1| (x) rho_ET|m'm') / 2` with `m'` the complement of `m`.
    pub fn block_tilde(&self, m: &[u8]) -> Result<BlockState<T>> {
        check_bits(m)?;
        let mb = complement(m);
        let ensemble = CqEnsemble::new(vec![
            (0, T::lit(0.5), self.block_state(m, m)?),
            (1, T::lit(0.5), self.block_state(&mb, &mb)?),
        ])?;
        Ok(BlockState {
            k: m.len(),
            message: Some(m.to_vec()),
            ensemble,
        })
    }

    /// `(|0><0| (x) rho_ET|00^(x)k + |1><1| (x) rho_ET|11^(x)k) / 2`.
    pub fn block_bar(&self, k: usize) -> Result<BlockState<T>> {
        self.check_block(k)?;
        let zeros = vec![0u8; k];
        let ones = vec![1u8; k];
        let ensemble = CqEnsemble::new(vec![
            (0, T::lit(0.5), self.block_state(&zeros, &zeros)?),
            (1, T::lit(0.5), self.block_state(&ones, &ones)?),
        ])?;
        Ok(BlockState {
            k,
            message: None,
            ensemble,
        })
    }

    /// Eve's state over `(C, C')` for an accepted block with public message `m`.
    ///
    /// Labels are `2C + C'`. Alice's string is `m ^ C` and Bob's `m ^ C'`, so
    /// the four branches hold `rho_mm`, `rho_mm'`, `rho_m'm`, `rho_m'm'` with
    /// weights `(1-delta)/2, delta/2, delta/2, (1-delta)/2`.
    pub fn accepted_block_ensemble(&self, m: &[u8]) -> Result<CqEnsemble<T>> {
        check_bits(m)?;
        let k = m.len();
        self.check_block(k)?;
        let delta = crate::security::delta_k(self.eps, k)?;
        let half = T::lit(0.5);
        let mb = complement(m);
        let mut entries = Vec::with_capacity(4);
        for (c, cp) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
            let a = if c == 0 { m } else { mb.as_slice() };
            let b = if cp == 0 { m } else { mb.as_slice() };
            let w = if c == cp { half * (T::one() - delta) } else { half * delta };
            entries.push((u32::from(2 * c + cp), w, self.block_state(a, b)?));
        }
        CqEnsemble::new(entries)
    }
}

/// Collapse a `(C, C')` ensemble to the key bit `C` alone.
pub fn key_marginal<T: Real>(e: &CqEnsemble<T>) -> Result<CqEnsemble<T>> {
    let entries = e
        .entries()
        .iter()
        .map(|x| (x.label >> 1, x.weight, x.state.clone()))
        .collect();
    CqEnsemble::new(entries)?.marginal_by_label()
}

/// `(id_E (x) X)^{m_1} (x) ... (x) (id_E (x) X)^{m_k}`.
pub fn flip_unitary<T: Real>(m: &[u8], d_e: usize, max_dim: usize) -> Result<ComplexMatrix<T>> {
    check_bits(m)?;
    if d_e == 0 || m.is_empty() {
        return Err(Error::Domain("flip unitary needs d_E >= 1 and a nonempty message".into()));
    }
    let needed = checked_pow(2 * d_e, m.len());
    match needed {
        Some(n) if n <= max_dim => {}
        _ => {
            return Err(Error::Capacity {
                what: "flip unitary".into(),
                needed: needed.unwrap_or(usize::MAX),
                cap: max_dim,
            })
        }
    }
    let id = ComplexMatrix::<T>::identity(2 * d_e);
    let flip = ComplexMatrix::<T>::identity(d_e).kron(&consts::pauli_x());
    let factor = |bit: u8| if bit == 1 { &flip } else { &id };
    let mut u = factor(m[0]).clone();
    for &bit in &m[1..] {
        u = u.kron(factor(bit));
    }
    Ok(u)
}

/// A two-label block state over the key bit `C`.
#[derive(Debug, Clone)]
pub struct BlockState<T> {
    pub k: usize,
    /// Public message, or `None` for the all-equal construction.
    pub message: Option<Vec<u8>>,
    pub ensemble: CqEnsemble<T>,
}

fn check_bits(m: &[u8]) -> Result<()> {
    if m.is_empty() {
        return Err(Error::Domain("bit string must be nonempty".into()));
    }
    if m.iter().any(|&b| b > 1) {
        return Err(Error::Validation("bit strings may only contain 0 and 1".into()));
    }
    Ok(())
}

fn complement(m: &[u8]) -> Vec<u8> {
    m.iter().map(|&b| 1 - b).collect()
}

fn checked_pow(base: usize, k: usize) -> Option<usize> {
    u32::try_from(k).ok().and_then(|k| base.checked_pow(k))
}

/// Every bit string of length `k`, in counting order.
pub fn all_messages(k: usize) -> Vec<Vec<u8>> {
    (0..1usize << k)
        .map(|n| (0..k).map(|i| ((n >> (k - 1 - i)) & 1) as u8).collect())
        .collect()
}

/// Block acceptance rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Accept when Bob's string differs from the message by a constant string.
    Standard,
    /// Additionally require Alice's and Bob's raw strings to be constant.
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimStats {
    pub blocks_run: u64,
    pub blocks_accepted: u64,
    pub accept_rate: f64,
    pub mismatch_rate_given_accept: f64,
    pub seed: u64,
}

impl SimStats {
    /// Binomial standard error of the accept rate around `p`.
    pub fn accept_se(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.blocks_run as f64).sqrt()
    }

    /// Binomial standard error of the mismatch rate around `p`.
    pub fn mismatch_se(&self, p: f64) -> f64 {
        if self.blocks_accepted == 0 {
            return f64::INFINITY;
        }
        (p * (1.0 - p) / self.blocks_accepted as f64).sqrt()
    }
}

/// Draw `n_blocks` blocks of `k` symmetrized rounds and apply the accept rule.
///
/// Per round Alice's bit is uniform and Bob's equals it flipped with
/// probability `eps`. Alice draws a uniform `C` and announces `M = A ^ C`;
/// Bob sets `C'` from `B ^ M` when that string is constant. The generator is
/// ChaCha8 seeded from `seed`, so results are reproducible on every platform.
pub fn simulate_blocks(eps: f64, k: usize, n_blocks: u64, variant: Variant, seed: u64) -> Result<SimStats> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::Domain(format!("QBER {eps} outside [0, 1/2]")));
    }
    if k == 0 || n_blocks == 0 {
        return Err(Error::Domain("block size and block count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alice = vec![false; k];
    let mut bob = vec![false; k];
    let (mut accepted, mut mismatched) = (0u64, 0u64);
    for _ in 0..n_blocks {
        for i in 0..k {
            alice[i] = rng.gen();
            bob[i] = alice[i] ^ (rng.gen::<f64>() < eps);
        }
        let c: bool = rng.gen();
        // B ^ M = B ^ A ^ C, constant iff the error pattern is.
        let first = bob[0] ^ alice[0] ^ c;
        let constant_diff = (1..k).all(|i| (bob[i] ^ alice[i] ^ c) == first);
        let accept = match variant {
            Variant::Standard => constant_diff,
            Variant::Modified => constant_diff && is_constant(&alice) && is_constant(&bob),
        };
        if accept {
            accepted += 1;
            if first != c {
                mismatched += 1;
            }
        }
    }
    Ok(SimStats {
        blocks_run: n_blocks,
        blocks_accepted: accepted,
        accept_rate: accepted as f64 / n_blocks as f64,
        mismatch_rate_given_accept: if accepted == 0 { 0.0 } else { mismatched as f64 / accepted as f64 },
        seed,
    })
}

fn is_constant(bits: &[bool]) -> bool {
    bits.iter().all(|&b| b == bits[0])
}

/// Expected accept rate for a variant.
pub fn expected_accept_rate(eps: f64, k: usize, variant: Variant) -> f64 {
    let k = k as i32;
    let base = eps.powi(k) + (1.0 - eps).powi(k);
    match variant {
        Variant::Standard => base,
        Variant::Modified => 2f64.powi(1 - k) * base,
    }
}
