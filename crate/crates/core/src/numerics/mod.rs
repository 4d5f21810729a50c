//! Deterministic tensor math and reverse-mode differentiation for the four
//! fixed network architectures: convolution, pooling, dense, relu/tanh,
//! upsampling, Huber and cross-entropy losses, Adam, and a finite-difference
//! gradient checker.

pub mod adam;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod param;
pub mod reference;
pub mod tensor;

pub use adam::AdamState;
pub use gradcheck::{grad_check, Differentiable, GradCheckReport};
pub use layers::{Conv2d, Dense, MaxPool2d, Relu, TanhAct, Upsample2x};
pub use loss::{huber_grad, huber_loss, pixel_accuracy, softmax_cross_entropy, softmax_cross_entropy_grad};
pub use param::Param;
pub use tensor::Tensor;
