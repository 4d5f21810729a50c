//! Row-major f32 tensor with an optional gradient buffer.

use crate::rng::Rng;

/// N-dimensional array of f32 values in row-major order.
///
/// The gradient buffer, when allocated, always has the same length as the
/// data. Shape validity (`product(shape) == data.len()`) is checked at
/// construction and preserved by every operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
    grad: Option<Vec<f32>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Self {
        assert!(
            shape.iter().all(|&d| d > 0),
            "tensor dimensions must be positive, got {:?}",
            shape
        );
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {:?} does not match data length {}",
            shape,
            data.len()
        );
        Tensor {
            shape,
            data,
            grad: None,
        }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor::new(shape, vec![0.0; len])
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Self {
        let len = shape.iter().product();
        Tensor::new(shape, vec![value; len])
    }

    pub fn scalar(value: f32) -> Self {
        Tensor::new(vec![1], vec![value])
    }

    /// Uniform init in [-limit, limit].
    pub fn uniform(shape: Vec<usize>, limit: f32, rng: &mut Rng) -> Self {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.range_f32(-limit, limit)).collect();
        Tensor::new(shape, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn grad(&self) -> Option<&[f32]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated (zeroed) on first use.
    pub fn grad_mut(&mut self) -> &mut [f32] {
        if self.grad.is_none() {
            self.grad = Some(vec![0.0; self.data.len()]);
        }
        self.grad.as_mut().unwrap()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    /// Reinterpret as a different shape with the same element count.
    pub fn reshaped(mut self, shape: Vec<usize>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            self.data.len(),
            "cannot reshape {:?} into {:?}",
            self.shape,
            shape
        );
        self.shape = shape;
        self
    }

    pub fn assert_finite(&self, context: &str) {
        for (i, v) in self.data.iter().enumerate() {
            assert!(v.is_finite(), "{}: non-finite value {} at index {}", context, v, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[should_panic(expected = "does not match data length")]
    fn shape_mismatch_is_rejected() {
        Tensor::new(vec![2, 3], vec![0.0; 5]);
    }

    #[test]
    #[should_panic(expected = "must be positive")]
    fn zero_dimension_is_rejected() {
        Tensor::new(vec![2, 0], vec![]);
    }

    #[test]
    fn grad_matches_data_length() {
        let mut t = Tensor::zeros(vec![3, 4]);
        assert!(t.grad().is_none());
        t.grad_mut()[0] = 1.0;
        assert_eq!(t.grad().unwrap().len(), t.len());
    }

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::new(vec![2, 3], vec![1., 2., 3., 4., 5., 6.]).reshaped(vec![6]);
        assert_eq!(t.shape(), &[6]);
        assert_eq!(t.data()[4], 5.0);
    }
}
