//! Dense complex linear algebra used by the model and analysis modules.

pub mod eigen;
pub mod expm;
pub mod fit;
pub mod krylov;
pub mod lu;
pub mod matrix;
pub mod svd;

pub use eigen::{eigvals, multiset_distance, sort_complex, Spectrum};
pub use expm::expm;
pub use fit::{fit_loglog_slope, linear_fit, logspace};
pub use krylov::{krylov_basis, krylov_dim};
pub use lu::{det, sigma_min_estimate};
pub use matrix::{vec_dot, vec_norm, CMatrix};
pub use svd::{numerical_rank, singular_values};
