//! Huber regression loss and per-pixel softmax cross-entropy.

use super::tensor::Tensor;

/// Huber loss: quadratic within `delta` of the target, linear beyond.
pub fn huber_loss(pred: f32, target: f32, delta: f32) -> f32 {
    assert!(delta > 0.0, "huber delta must be positive");
    let e = pred - target;
    if e.abs() <= delta {
        0.5 * e * e
    } else {
        delta * (e.abs() - 0.5 * delta)
    }
}

/// d(huber)/d(pred) = error clamped to [-delta, delta].
pub fn huber_grad(pred: f32, target: f32, delta: f32) -> f32 {
    assert!(delta > 0.0, "huber delta must be positive");
    (pred - target).clamp(-delta, delta)
}

/// Mean per-pixel negative log softmax probability of the true class.
///
/// `logits` is [K, H, W], `labels` holds one class id in [0, K) per pixel.
/// Numerically stabilized by max-subtraction; the reduction runs in f64 so
/// finite-difference checks of callers stay clean.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[u8]) -> f32 {
    let shape = logits.shape();
    assert_eq!(shape.len(), 3, "softmax_cross_entropy expects [K, H, W]");
    let (k, h, w) = (shape[0], shape[1], shape[2]);
    let n = h * w;
    assert_eq!(labels.len(), n, "label image size mismatch");
    let data = logits.data();
    let mut total = 0.0f64;
    for p in 0..n {
        let label = labels[p] as usize;
        assert!(label < k, "label {} out of range for {} classes", label, k);
        let mut max = f32::NEG_INFINITY;
        for c in 0..k {
            max = max.max(data[c * n + p]);
        }
        let mut sum_exp = 0.0f64;
        for c in 0..k {
            sum_exp += ((data[c * n + p] - max) as f64).exp();
        }
        total += sum_exp.ln() - (data[label * n + p] - max) as f64;
    }
    (total / n as f64) as f32
}

/// Gradient of [`softmax_cross_entropy`] with respect to the logits:
/// (softmax - onehot) / (H * W).
pub fn softmax_cross_entropy_grad(logits: &Tensor, labels: &[u8]) -> Tensor {
    let shape = logits.shape();
    let (k, h, w) = (shape[0], shape[1], shape[2]);
    let n = h * w;
    assert_eq!(labels.len(), n, "label image size mismatch");
    let data = logits.data();
    let mut grad = vec![0.0f32; k * n];
    let scale = 1.0 / n as f32;
    for p in 0..n {
        let label = labels[p] as usize;
        let mut max = f32::NEG_INFINITY;
        for c in 0..k {
            max = max.max(data[c * n + p]);
        }
        let mut sum_exp = 0.0f32;
        for c in 0..k {
            sum_exp += (data[c * n + p] - max).exp();
        }
        for c in 0..k {
            let softmax = (data[c * n + p] - max).exp() / sum_exp;
            let onehot = if c == label { 1.0 } else { 0.0 };
            grad[c * n + p] = (softmax - onehot) * scale;
        }
    }
    Tensor::new(vec![k, h, w], grad)
}

/// Per-pixel accuracy of argmax(logits) against the label image.
pub fn pixel_accuracy(logits: &Tensor, labels: &[u8]) -> f32 {
    let shape = logits.shape();
    let (k, h, w) = (shape[0], shape[1], shape[2]);
    let n = h * w;
    assert_eq!(labels.len(), n);
    let data = logits.data();
    let mut correct = 0usize;
    for p in 0..n {
        let mut best = 0usize;
        let mut best_v = data[p];
        for c in 1..k {
            if data[c * n + p] > best_v {
                best_v = data[c * n + p];
                best = c;
            }
        }
        if best == labels[p] as usize {
            correct += 1;
        }
    }
    correct as f32 / n as f32
}
