//! Separable Gaussian-sum expansions of radial kernels and their canonical
//! tensor projections, plus exponential sums for `1/x`.

mod cell;
mod expsum;
mod reciprocal;
mod tensor;

pub use cell::{cell_integral, cube_average_inverse_r};
pub use expsum::{make_expsum, ExpSum, KernelKind, Substitution};
pub use reciprocal::{reciprocal_expsum, ReciprocalExpSum, TERM_CAP};
pub use tensor::{newton_kernel_tensor, KernelTensor};
