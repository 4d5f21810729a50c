//! Trainable parameter wrapper with a freeze flag.

use super::tensor::Tensor;

/// A named-by-owner parameter tensor. Frozen parameters still receive
/// gradients during backward (layers beneath them need the flow), but the
/// optimizer never applies an update to them.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Tensor,
    pub frozen: bool,
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        Param {
            value,
            frozen: false,
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}
