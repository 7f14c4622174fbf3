//! Quantum Chernoff divergence security analysis for repetition-code
//! advantage distillation in QKD and device-independent QKD.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod dibound;
pub mod divergence;
pub mod error;
pub mod io;
pub mod protocol;
pub mod qmath;
pub mod random;
pub mod scalar;
pub mod scenarios;
pub mod security;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ComplexMatrix = qmath::ComplexMatrix<f64>;
pub type DensityMatrix = qmath::DensityMatrix<f64>;
pub type CqEnsemble = qmath::CqEnsemble<f64>;
pub type Tolerances = qmath::Tolerances<f64>;
pub type NqcdResult = divergence::NqcdResult<f64>;
pub type Measures = divergence::Measures<f64>;
pub type AttackModel = protocol::AttackModel<f64>;
pub type BlockState = protocol::BlockState<f64>;
pub type Behavior = scenarios::Behavior<f64>;
pub type Threshold = scenarios::Threshold<f64>;
pub type SecurityVerdict = security::SecurityVerdict<f64>;
pub type MomentProblem = dibound::MomentProblem<f64>;
pub type SdpSolution = dibound::SdpSolution<f64>;
