//! Dense tensors and the numeric kernels the rest of the crate builds on.

mod activation;
pub(crate) mod conv;
pub mod dlt;
pub(crate) mod linalg;
mod rotate;
mod tensor;

pub use activation::{relu, sigmoid, softmax};
pub(crate) use activation::softmax_slice;
pub use conv::{conv2d, maxpool2d, maxpool2d_backward, maxpool2d_ceil, Padding, PoolMask};
pub use linalg::{matmul, ridge_solve, ridge_solve64, Cholesky, Mat64};
pub use rotate::rotate_image;
pub use tensor::Tensor;
