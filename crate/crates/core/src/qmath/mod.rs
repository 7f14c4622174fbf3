//! Dense complex Hermitian linear algebra and entropy primitives.

pub mod density;
pub mod eigen;
pub mod entropy;
pub mod matrix;

pub use density::{
    mat_power, partial_trace, tensor_power, tensor_product, CqEnsemble, CqEntry, DensityMatrix, Tolerances,
    DEFAULT_MAX_DIM,
};
pub use eigen::{herm_eig, Spectrum};
pub use entropy::{binary_entropy, cond_entropy_cq, cond_entropy_cq_joint, vn_entropy};
pub use matrix::{consts, ComplexMatrix};
