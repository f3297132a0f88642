//! Dense, canonical and Tucker representations of third-order tensors.

mod canonical;
mod dense;
mod tucker;

pub use canonical::{
    add, convolve, convolve_with_kernel, frobenius_norm, hadamard, relative_error, scalar_product,
    CanonicalTensor3,
};
pub use dense::{DenseTensor3, DENSE_LIMIT};
pub use tucker::{canonical_tucker_product, tucker_scalar_product, TuckerTensor3};
