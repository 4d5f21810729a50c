//! Layer primitives: convolution, max-pooling, dense, activations, and
//! nearest-neighbor upsampling.
//!
//! Each layer owns its parameters and a forward cache. `forward` records
//! whatever `backward` needs; calling `backward` without a recorded forward
//! pass is a contract violation and panics. Parameter gradients accumulate
//! into the `Param` tensors until the optimizer consumes them, so batches
//! are summed naturally.

use super::param::Param;
use super::tensor::Tensor;
use crate::rng::Rng;

fn glorot_limit(fan_in: usize, fan_out: usize) -> f32 {
    (6.0 / (fan_in + fan_out) as f32).sqrt()
}

/// Dot product with eight independent accumulator lanes so the reduction
/// vectorizes; a plain `acc += a*b` loop compiles to a scalar chain.
fn dot_f32(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f32; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let a8 = &a[i * 8..i * 8 + 8];
        let b8 = &b[i * 8..i * 8 + 8];
        for l in 0..8 {
            lanes[l] += a8[l] * b8[l];
        }
    }
    let mut acc = 0.0f32;
    for i in chunks * 8..a.len() {
        acc += a[i] * b[i];
    }
    acc + lanes.iter().sum::<f32>()
}

/// 2-D convolution over [C, H, W] inputs.
///
/// General shapes go through im2col + GEMM. The 3x3/stride-1/pad-1 case
/// (the decoder stack, where im2col traffic at full resolution dominates)
/// uses a direct shifted-row path instead.
#[derive(Clone)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    /// [out_channels, in_channels, kernel, kernel]
    pub weights: Param,
    /// [out_channels]
    pub bias: Param,
    cols: Vec<f32>,
    cached_input: Vec<f32>,
    cached_input_hw: Option<(usize, usize)>,
}

impl Conv2d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut Rng,
    ) -> Self {
        assert!(in_channels > 0 && out_channels > 0 && kernel > 0 && stride > 0);
        let fan_in = in_channels * kernel * kernel;
        let fan_out = out_channels * kernel * kernel;
        let limit = glorot_limit(fan_in, fan_out);
        Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            weights: Param::new(Tensor::uniform(
                vec![out_channels, in_channels, kernel, kernel],
                limit,
                rng,
            )),
            // Small nonzero bias init: with all-zero biases, dead relu
            // regions produce preactivations sitting exactly on the relu
            // boundary, which poisons finite-difference checks.
            bias: Param::new(Tensor::uniform(vec![out_channels], 0.01, rng)),
            cols: Vec::new(),
            cached_input: Vec::new(),
            cached_input_hw: None,
        }
    }

    fn direct3(&self) -> bool {
        self.kernel == 3 && self.stride == 1 && self.padding == 1
    }

    /// Valid output ranges for a 3x3/s1/p1 kernel offset.
    fn tap_range(k: usize, len: usize) -> (usize, usize) {
        let lo = if k == 0 { 1 } else { 0 };
        let hi = if k == 2 { len - 1 } else { len };
        (lo, hi)
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        assert!(
            h + 2 * self.padding >= self.kernel && w + 2 * self.padding >= self.kernel,
            "conv2d input {}x{} smaller than kernel {}",
            h,
            w,
            self.kernel
        );
        (
            (h + 2 * self.padding - self.kernel) / self.stride + 1,
            (w + 2 * self.padding - self.kernel) / self.stride + 1,
        )
    }

    fn fill_cols(&mut self, x: &Tensor, h: usize, w: usize, oh: usize, ow: usize) {
        let k = self.kernel;
        let n = oh * ow;
        self.cols.clear();
        self.cols.resize(self.in_channels * k * k * n, 0.0);
        let data = x.data();
        for ci in 0..self.in_channels {
            let plane = &data[ci * h * w..(ci + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = ((ci * k + ky) * k + kx) * n;
                    for oy in 0..oh {
                        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                        let dst = &mut self.cols[row + oy * ow..row + (oy + 1) * ow];
                        if iy < 0 || iy >= h as isize {
                            dst.iter_mut().for_each(|v| *v = 0.0);
                            continue;
                        }
                        let src_row = &plane[iy as usize * w..(iy as usize + 1) * w];
                        for (ox, out) in dst.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - self.padding as isize;
                            *out = if ix >= 0 && ix < w as isize {
                                src_row[ix as usize]
                            } else {
                                0.0
                            };
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Tensor {
        let shape = x.shape();
        assert_eq!(shape.len(), 3, "conv2d expects [C, H, W], got {:?}", shape);
        assert_eq!(
            shape[0], self.in_channels,
            "conv2d channel mismatch: input has {}, layer expects {}",
            shape[0], self.in_channels
        );
        let (h, w) = (shape[1], shape[2]);
        if self.direct3() {
            return self.forward_direct3(x, h, w);
        }
        let (oh, ow) = self.output_hw(h, w);
        let (m, kk, n) = (self.out_channels, self.in_channels * self.kernel * self.kernel, oh * ow);

        self.fill_cols(x, h, w, oh, ow);
        self.cached_input_hw = Some((h, w));

        let mut out = vec![0.0f32; m * n];
        for (co, chunk) in out.chunks_exact_mut(n).enumerate() {
            chunk.iter_mut().for_each(|v| *v = self.bias.value.data()[co]);
        }
        unsafe {
            matrixmultiply::sgemm(
                m,
                kk,
                n,
                1.0,
                self.weights.value.data().as_ptr(),
                kk as isize,
                1,
                self.cols.as_ptr(),
                n as isize,
                1,
                1.0,
                out.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        Tensor::new(vec![m, oh, ow], out)
    }

    fn forward_direct3(&mut self, x: &Tensor, h: usize, w: usize) -> Tensor {
        assert!(h >= 2 && w >= 2, "direct 3x3 conv needs at least 2x2 input");
        let (ci, co) = (self.in_channels, self.out_channels);
        let xd = x.data();
        let wd = self.weights.value.data();
        let bias = self.bias.value.data();
        let mut out = vec![0.0f32; co * h * w];
        for o in 0..co {
            let out_plane = &mut out[o * h * w..(o + 1) * h * w];
            out_plane.iter_mut().for_each(|v| *v = bias[o]);
            for c in 0..ci {
                let x_plane = &xd[c * h * w..(c + 1) * h * w];
                let w_base = ((o * ci + c) * 3) * 3;
                for ky in 0..3 {
                    let (oy_lo, oy_hi) = Self::tap_range(ky, h);
                    for kx in 0..3 {
                        let weight = wd[w_base + ky * 3 + kx];
                        let (ox_lo, ox_hi) = Self::tap_range(kx, w);
                        for oy in oy_lo..oy_hi {
                            let iy = oy + ky - 1;
                            let src = &x_plane[iy * w + ox_lo + kx - 1..iy * w + ox_hi + kx - 1];
                            let dst = &mut out_plane[oy * w + ox_lo..oy * w + ox_hi];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += weight * s;
                            }
                        }
                    }
                }
            }
        }
        self.cached_input.clear();
        self.cached_input.extend_from_slice(xd);
        self.cached_input_hw = Some((h, w));
        Tensor::new(vec![co, h, w], out)
    }

    /// Like [`Conv2d::backward`] but skips the input-gradient computation.
    /// For a network's first convolution the input gradient is discarded,
    /// and producing it costs a full GEMM plus scatter.
    pub fn backward_no_input_grad(&mut self, dy: &Tensor) {
        let (h, w) = self
            .cached_input_hw
            .take()
            .expect("conv2d backward called without a recorded forward pass");
        if self.direct3() {
            self.accumulate_direct3_param_grads(dy, h, w);
            return;
        }
        let (oh, ow) = self.output_hw(h, w);
        assert_eq!(dy.shape(), &[self.out_channels, oh, ow], "conv2d upstream gradient shape");
        let (m, kk, n) = (self.out_channels, self.in_channels * self.kernel * self.kernel, oh * ow);
        unsafe {
            matrixmultiply::sgemm(
                m,
                n,
                kk,
                1.0,
                dy.data().as_ptr(),
                n as isize,
                1,
                self.cols.as_ptr(),
                1,
                n as isize,
                1.0,
                self.weights.value.grad_mut().as_mut_ptr(),
                kk as isize,
                1,
            );
        }
        let db = self.bias.value.grad_mut();
        for (co, dbv) in db.iter_mut().enumerate().take(m) {
            let mut acc = 0.0f32;
            for v in &dy.data()[co * n..(co + 1) * n] {
                acc += v;
            }
            *dbv += acc;
        }
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, dy: &Tensor) -> Tensor {
        let (h, w) = self
            .cached_input_hw
            .take()
            .expect("conv2d backward called without a recorded forward pass");
        if self.direct3() {
            return self.backward_direct3(dy, h, w);
        }
        let (oh, ow) = self.output_hw(h, w);
        assert_eq!(dy.shape(), &[self.out_channels, oh, ow], "conv2d upstream gradient shape");
        let (m, kk, n) = (self.out_channels, self.in_channels * self.kernel * self.kernel, oh * ow);

        // dW[m, kk] += dy[m, n] * cols[kk, n]^T
        unsafe {
            matrixmultiply::sgemm(
                m,
                n,
                kk,
                1.0,
                dy.data().as_ptr(),
                n as isize,
                1,
                self.cols.as_ptr(),
                1,
                n as isize,
                1.0,
                self.weights.value.grad_mut().as_mut_ptr(),
                kk as isize,
                1,
            );
        }
        {
            let db = self.bias.value.grad_mut();
            for (co, dbv) in db.iter_mut().enumerate().take(m) {
                let mut acc = 0.0f32;
                for v in &dy.data()[co * n..(co + 1) * n] {
                    acc += v;
                }
                *dbv += acc;
            }
        }

        // dcols[kk, n] = W[m, kk]^T * dy[m, n], reusing the cols buffer.
        let mut dcols = vec![0.0f32; kk * n];
        unsafe {
            matrixmultiply::sgemm(
                kk,
                m,
                n,
                1.0,
                self.weights.value.data().as_ptr(),
                1,
                kk as isize,
                dy.data().as_ptr(),
                n as isize,
                1,
                0.0,
                dcols.as_mut_ptr(),
                n as isize,
                1,
            );
        }

        // col2im scatter-add.
        let k = self.kernel;
        let mut dx = Tensor::zeros(vec![self.in_channels, h, w]);
        let dxd = dx.data_mut();
        for ci in 0..self.in_channels {
            let plane = &mut dxd[ci * h * w..(ci + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = ((ci * k + ky) * k + kx) * n;
                    for oy in 0..oh {
                        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let src = &dcols[row + oy * ow..row + (oy + 1) * ow];
                        for (ox, g) in src.iter().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - self.padding as isize;
                            if ix >= 0 && ix < w as isize {
                                plane[iy as usize * w + ix as usize] += g;
                            }
                        }
                    }
                }
            }
        }
        dx
    }

    fn accumulate_direct3_param_grads(&mut self, dy: &Tensor, h: usize, w: usize) {
        let (ci, co) = (self.in_channels, self.out_channels);
        assert_eq!(dy.shape(), &[co, h, w], "conv2d upstream gradient shape");
        assert_eq!(self.cached_input.len(), ci * h * w);
        let dyd = dy.data();
        {
            let db = self.bias.value.grad_mut();
            for o in 0..co {
                let mut acc = 0.0f32;
                for v in &dyd[o * h * w..(o + 1) * h * w] {
                    acc += v;
                }
                db[o] += acc;
            }
        }
        {
            let dw = self.weights.value.grad_mut();
            for o in 0..co {
                let dy_plane = &dyd[o * h * w..(o + 1) * h * w];
                for c in 0..ci {
                    let x_plane = &self.cached_input[c * h * w..(c + 1) * h * w];
                    let w_base = ((o * ci + c) * 3) * 3;
                    for ky in 0..3 {
                        let (oy_lo, oy_hi) = Self::tap_range(ky, h);
                        for kx in 0..3 {
                            let (ox_lo, ox_hi) = Self::tap_range(kx, w);
                            let mut acc = 0.0f32;
                            for oy in oy_lo..oy_hi {
                                let iy = oy + ky - 1;
                                let g = &dy_plane[oy * w + ox_lo..oy * w + ox_hi];
                                let x = &x_plane[iy * w + ox_lo + kx - 1..iy * w + ox_hi + kx - 1];
                                acc += dot_f32(g, x);
                            }
                            dw[w_base + ky * 3 + kx] += acc;
                        }
                    }
                }
            }
        }
    }

    fn backward_direct3(&mut self, dy: &Tensor, h: usize, w: usize) -> Tensor {
        let (ci, co) = (self.in_channels, self.out_channels);
        self.accumulate_direct3_param_grads(dy, h, w);
        let dyd = dy.data();
        let wd = self.weights.value.data();
        let mut dx = Tensor::zeros(vec![ci, h, w]);
        let dxd = dx.data_mut();
        for o in 0..co {
            let dy_plane = &dyd[o * h * w..(o + 1) * h * w];
            for c in 0..ci {
                let dx_plane = &mut dxd[c * h * w..(c + 1) * h * w];
                let w_base = ((o * ci + c) * 3) * 3;
                for ky in 0..3 {
                    let (oy_lo, oy_hi) = Self::tap_range(ky, h);
                    for kx in 0..3 {
                        let weight = wd[w_base + ky * 3 + kx];
                        let (ox_lo, ox_hi) = Self::tap_range(kx, w);
                        for oy in oy_lo..oy_hi {
                            let iy = oy + ky - 1;
                            let src = &dy_plane[oy * w + ox_lo..oy * w + ox_hi];
                            let dst =
                                &mut dx_plane[iy * w + ox_lo + kx - 1..iy * w + ox_hi + kx - 1];
                            for (d, g) in dst.iter_mut().zip(src) {
                                *d += weight * g;
                            }
                        }
                    }
                }
            }
        }
        dx
    }
}

/// 2x2 max-pooling with stride 2; odd trailing rows/columns are dropped.
#[derive(Clone)]
pub struct MaxPool2d {
    argmax: Vec<u32>,
    cached_shape: Option<(usize, usize, usize)>,
}

impl MaxPool2d {
    pub fn new() -> Self {
        MaxPool2d {
            argmax: Vec::new(),
            cached_shape: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Tensor {
        let shape = x.shape();
        assert_eq!(shape.len(), 3, "maxpool2d expects [C, H, W]");
        let (c, h, w) = (shape[0], shape[1], shape[2]);
        assert!(h >= 2 && w >= 2, "maxpool2d needs at least 2x2 input, got {}x{}", h, w);
        let (oh, ow) = (h / 2, w / 2);
        let data = x.data();
        let mut out = vec![0.0f32; c * oh * ow];
        self.argmax.clear();
        self.argmax.resize(c * oh * ow, 0);
        for ci in 0..c {
            let plane = &data[ci * h * w..(ci + 1) * h * w];
            for oy in 0..oh {
                for ox in 0..ow {
                    let base = (oy * 2) * w + ox * 2;
                    let idx = [base, base + 1, base + w, base + w + 1];
                    let mut best = idx[0];
                    let mut best_v = plane[idx[0]];
                    for &i in &idx[1..] {
                        if plane[i] > best_v {
                            best_v = plane[i];
                            best = i;
                        }
                    }
                    let o = (ci * oh + oy) * ow + ox;
                    out[o] = best_v;
                    self.argmax[o] = (ci * h * w + best) as u32;
                }
            }
        }
        self.cached_shape = Some((c, h, w));
        Tensor::new(vec![c, oh, ow], out)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Tensor {
        let (c, h, w) = self
            .cached_shape
            .take()
            .expect("maxpool2d backward called without a recorded forward pass");
        assert_eq!(dy.shape(), &[c, h / 2, w / 2], "maxpool2d upstream gradient shape");
        let mut dx = Tensor::zeros(vec![c, h, w]);
        let dxd = dx.data_mut();
        for (g, &src) in dy.data().iter().zip(self.argmax.iter()) {
            dxd[src as usize] += g;
        }
        dx
    }
}

impl Default for MaxPool2d {
    fn default() -> Self {
        Self::new()
    }
}

/// Fully connected layer over 1-D inputs.
#[derive(Clone)]
pub struct Dense {
    pub in_features: usize,
    pub out_features: usize,
    /// [out_features, in_features]
    pub weights: Param,
    /// [out_features]
    pub bias: Param,
    cached_input: Option<Vec<f32>>,
}

impl Dense {
    pub fn new(in_features: usize, out_features: usize, rng: &mut Rng) -> Self {
        assert!(in_features > 0 && out_features > 0);
        let limit = glorot_limit(in_features, out_features);
        Dense {
            in_features,
            out_features,
            weights: Param::new(Tensor::uniform(vec![out_features, in_features], limit, rng)),
            bias: Param::new(Tensor::uniform(vec![out_features], 0.01, rng)),
            cached_input: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Tensor {
        assert_eq!(
            x.len(),
            self.in_features,
            "dense input length {} does not match in_features {}",
            x.len(),
            self.in_features
        );
        let xd = x.data();
        let w = self.weights.value.data();
        let b = self.bias.value.data();
        let mut out = vec![0.0f32; self.out_features];
        for (o, out_v) in out.iter_mut().enumerate() {
            let row = &w[o * self.in_features..(o + 1) * self.in_features];
            *out_v = dot_f32(row, xd) + b[o];
        }
        self.cached_input = Some(xd.to_vec());
        Tensor::new(vec![self.out_features], out)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Tensor {
        let x = self
            .cached_input
            .take()
            .expect("dense backward called without a recorded forward pass");
        assert_eq!(dy.len(), self.out_features, "dense upstream gradient length");
        let dyd = dy.data();
        {
            let dw = self.weights.value.grad_mut();
            for (o, &g) in dyd.iter().enumerate() {
                let row = &mut dw[o * self.in_features..(o + 1) * self.in_features];
                for (dwv, xv) in row.iter_mut().zip(x.iter()) {
                    *dwv += g * xv;
                }
            }
        }
        {
            let db = self.bias.value.grad_mut();
            for (dbv, &g) in db.iter_mut().zip(dyd.iter()) {
                *dbv += g;
            }
        }
        let w = self.weights.value.data();
        let mut dx = vec![0.0f32; self.in_features];
        for (o, &g) in dyd.iter().enumerate() {
            let row = &w[o * self.in_features..(o + 1) * self.in_features];
            for (dxv, wv) in dx.iter_mut().zip(row.iter()) {
                *dxv += g * wv;
            }
        }
        Tensor::new(vec![self.in_features], dx)
    }
}

/// Elementwise max(0, x).
#[derive(Clone)]
pub struct Relu {
    /// One bit per element: 1 where the input was positive.
    mask: Vec<u64>,
    cached_len: Option<usize>,
}

impl Relu {
    pub fn new() -> Self {
        Relu {
            mask: Vec::new(),
            cached_len: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Tensor {
        let src = x.data();
        self.mask.clear();
        self.mask.resize(src.len().div_ceil(64), 0);
        let mut data = vec![0.0f32; src.len()];
        for (i, (&v, out)) in src.iter().zip(data.iter_mut()).enumerate() {
            if v > 0.0 {
                *out = v;
                self.mask[i / 64] |= 1 << (i % 64);
            }
        }
        self.cached_len = Some(src.len());
        Tensor::new(x.shape().to_vec(), data)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Tensor {
        let len = self
            .cached_len
            .take()
            .expect("relu backward called without a recorded forward pass");
        assert_eq!(dy.len(), len, "relu upstream gradient length");
        let mut data = vec![0.0f32; len];
        for (i, (&g, out)) in dy.data().iter().zip(data.iter_mut()).enumerate() {
            if self.mask[i / 64] & (1 << (i % 64)) != 0 {
                *out = g;
            }
        }
        Tensor::new(dy.shape().to_vec(), data)
    }
}

impl Default for Relu {
    fn default() -> Self {
        Self::new()
    }
}

/// Elementwise hyperbolic tangent; outputs lie strictly inside (-1, 1).
/// f32 tanh rounds to exactly +/-1 once saturated, so outputs are clamped
/// to the largest float below 1 to keep the open-interval contract.
#[derive(Clone)]
pub struct TanhAct {
    cached_output: Option<Vec<f32>>,
}

const TANH_BOUND: f32 = 1.0 - f32::EPSILON / 2.0;

impl TanhAct {
    pub fn new() -> Self {
        TanhAct { cached_output: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Tensor {
        let data: Vec<f32> = x
            .data()
            .iter()
            .map(|&v| v.tanh().clamp(-TANH_BOUND, TANH_BOUND))
            .collect();
        self.cached_output = Some(data.clone());
        Tensor::new(x.shape().to_vec(), data)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Tensor {
        let y = self
            .cached_output
            .take()
            .expect("tanh backward called without a recorded forward pass");
        let data: Vec<f32> = dy
            .data()
            .iter()
            .zip(y.iter())
            .map(|(&g, &v)| g * (1.0 - v * v))
            .collect();
        Tensor::new(dy.shape().to_vec(), data)
    }
}

impl Default for TanhAct {
    fn default() -> Self {
        Self::new()
    }
}

/// Nearest-neighbor 2x upsampling over [C, H, W].
#[derive(Clone)]
pub struct Upsample2x {
    cached_shape: Option<(usize, usize, usize)>,
}

impl Upsample2x {
    pub fn new() -> Self {
        Upsample2x { cached_shape: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Tensor {
        let shape = x.shape();
        assert_eq!(shape.len(), 3, "upsample2x expects [C, H, W]");
        let (c, h, w) = (shape[0], shape[1], shape[2]);
        let data = x.data();
        let mut out = vec![0.0f32; c * 4 * h * w];
        let (oh, ow) = (h * 2, w * 2);
        for ci in 0..c {
            let plane = &data[ci * h * w..(ci + 1) * h * w];
            let oplane = &mut out[ci * oh * ow..(ci + 1) * oh * ow];
            for y in 0..h {
                for x_ in 0..w {
                    let v = plane[y * w + x_];
                    let base = (y * 2) * ow + x_ * 2;
                    oplane[base] = v;
                    oplane[base + 1] = v;
                    oplane[base + ow] = v;
                    oplane[base + ow + 1] = v;
                }
            }
        }
        self.cached_shape = Some((c, h, w));
        Tensor::new(vec![c, oh, ow], out)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Tensor {
        let (c, h, w) = self
            .cached_shape
            .take()
            .expect("upsample2x backward called without a recorded forward pass");
        assert_eq!(dy.shape(), &[c, h * 2, w * 2], "upsample2x upstream gradient shape");
        let dyd = dy.data();
        let mut dx = Tensor::zeros(vec![c, h, w]);
        let dxd = dx.data_mut();
        let ow = w * 2;
        for ci in 0..c {
            let oplane = &dyd[ci * 4 * h * w..(ci + 1) * 4 * h * w];
            let plane = &mut dxd[ci * h * w..(ci + 1) * h * w];
            for y in 0..h {
                for x_ in 0..w {
                    let base = (y * 2) * ow + x_ * 2;
                    plane[y * w + x_] =
                        oplane[base] + oplane[base + 1] + oplane[base + ow] + oplane[base + ow + 1];
                }
            }
        }
        dx
    }
}

impl Default for Upsample2x {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> Rng {
        Rng::new(42)
    }

    #[test]
    fn conv_output_shape_from_128() {
        let mut conv = Conv2d::new(1, 5, 5, 2, 0, &mut rng());
        let y = conv.forward(&Tensor::zeros(vec![1, 128, 128]));
        assert_eq!(y.shape(), &[5, 62, 62]);
    }

    #[test]
    fn conv_output_shape_from_7() {
        let mut conv = Conv2d::new(5, 5, 5, 2, 0, &mut rng());
        let y = conv.forward(&Tensor::zeros(vec![5, 7, 7]));
        assert_eq!(y.shape(), &[5, 2, 2]);
    }

    #[test]
    fn conv_zero_weights_give_zero_output() {
        let mut conv = Conv2d::new(2, 3, 5, 2, 0, &mut rng());
        conv.weights.value.data_mut().iter_mut().for_each(|v| *v = 0.0);
        conv.bias.value.data_mut().iter_mut().for_each(|v| *v = 0.0);
        let mut r = rng();
        let x = Tensor::uniform(vec![2, 16, 16], 1.0, &mut r);
        let y = conv.forward(&x);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    #[should_panic(expected = "channel mismatch")]
    fn conv_channel_mismatch_panics() {
        let mut conv = Conv2d::new(3, 5, 5, 2, 0, &mut rng());
        conv.forward(&Tensor::zeros(vec![1, 16, 16]));
    }

    #[test]
    fn conv_matches_naive_reference() {
        // Independent direct-sum convolution oracle.
        let mut r = rng();
        let (ci, co, k, s, p, h, w) = (3, 4, 3, 1, 1, 8, 9);
        let mut conv = Conv2d::new(ci, co, k, s, p, &mut r);
        let x = Tensor::uniform(vec![ci, h, w], 1.0, &mut r);
        let y = conv.forward(&x);
        let (oh, ow) = conv.output_hw(h, w);
        for o in 0..co {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = conv.bias.value.data()[o] as f64;
                    for c in 0..ci {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * s + ky) as isize - p as isize;
                                let ix = (ox * s + kx) as isize - p as isize;
                                if iy >= 0 && iy < h as isize && ix >= 0 && ix < w as isize {
                                    let wv = conv.weights.value.data()
                                        [((o * ci + c) * k + ky) * k + kx];
                                    let xv = x.data()[(c * h + iy as usize) * w + ix as usize];
                                    acc += (wv * xv) as f64;
                                }
                            }
                        }
                    }
                    let got = y.data()[(o * oh + oy) * ow + ox] as f64;
                    assert!((got - acc).abs() < 1e-4, "({},{},{}) {} vs {}", o, oy, ox, got, acc);
                }
            }
        }
    }

    #[test]
    fn maxpool_takes_window_max() {
        let mut pool = MaxPool2d::new();
        let x = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let y = pool.forward(&x);
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.data(), &[4.0]);
    }

    #[test]
    fn maxpool_halves_62() {
        let mut pool = MaxPool2d::new();
        let y = pool.forward(&Tensor::zeros(vec![5, 62, 62]));
        assert_eq!(y.shape(), &[5, 31, 31]);
    }

    #[test]
    fn maxpool_constant_stays_constant() {
        let mut pool = MaxPool2d::new();
        let y = pool.forward(&Tensor::filled(vec![2, 6, 6], 0.7));
        assert!(y.data().iter().all(|&v| v == 0.7));
    }

    #[test]
    #[should_panic(expected = "at least 2x2")]
    fn maxpool_rejects_tiny_input() {
        MaxPool2d::new().forward(&Tensor::zeros(vec![1, 1, 4]));
    }

    #[test]
    fn maxpool_drops_odd_trailing() {
        let mut pool = MaxPool2d::new();
        let y = pool.forward(&Tensor::zeros(vec![1, 7, 7]));
        assert_eq!(y.shape(), &[1, 3, 3]);
    }

    #[test]
    fn dense_identity_passthrough() {
        let mut d = Dense::new(3, 3, &mut rng());
        d.weights.value.data_mut().copy_from_slice(&[
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0,
        ]);
        d.bias.value.data_mut().iter_mut().for_each(|v| *v = 0.0);
        let x = Tensor::new(vec![3], vec![0.3, -0.2, 0.9]);
        assert_eq!(d.forward(&x).data(), x.data());
    }

    #[test]
    fn dense_bias_passthrough() {
        let mut d = Dense::new(2, 1, &mut rng());
        d.weights.value.data_mut().iter_mut().for_each(|v| *v = 0.0);
        d.bias.value.data_mut()[0] = 0.5;
        let y = d.forward(&Tensor::new(vec![2], vec![7.0, -3.0]));
        assert_eq!(y.data(), &[0.5]);
    }

    #[test]
    fn dense_matches_naive_matvec() {
        let mut r = rng();
        let mut d = Dense::new(17, 9, &mut r);
        let x = Tensor::uniform(vec![17], 1.0, &mut r);
        let y = d.forward(&x);
        for o in 0..9 {
            let mut acc = d.bias.value.data()[o];
            for i in 0..17 {
                acc += d.weights.value.data()[o * 17 + i] * x.data()[i];
            }
            assert!((y.data()[o] - acc).abs() < 1e-6);
        }
    }

    #[test]
    #[should_panic(expected = "does not match in_features")]
    fn dense_length_mismatch_panics() {
        Dense::new(4, 2, &mut rng()).forward(&Tensor::zeros(vec![5]));
    }

    #[test]
    fn relu_clamps_negatives() {
        let y = Relu::new().forward(&Tensor::new(vec![3], vec![-1.0, 0.0, 2.0]));
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn tanh_is_odd_and_saturates_finite() {
        let mut t = TanhAct::new();
        assert_eq!(t.forward(&Tensor::scalar(0.0)).data(), &[0.0]);
        let y = t.forward(&Tensor::scalar(1000.0));
        assert!(y.data()[0].is_finite());
        assert!(y.data()[0] <= 1.0 && y.data()[0] > 0.999);
    }

    #[test]
    fn upsample_round_trips_shape() {
        let mut up = Upsample2x::new();
        let x = Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let y = up.forward(&x);
        assert_eq!(y.shape(), &[1, 4, 4]);
        assert_eq!(y.data()[0], 1.0);
        assert_eq!(y.data()[1], 1.0);
        assert_eq!(y.data()[2], 2.0);
        assert_eq!(y.data()[5], 1.0);
        assert_eq!(y.data()[8], 3.0);
        let dx = up.backward(&Tensor::filled(vec![1, 4, 4], 1.0));
        assert!(dx.data().iter().all(|&v| v == 4.0));
    }

    #[test]
    #[should_panic(expected = "without a recorded forward pass")]
    fn backward_without_forward_panics() {
        let mut d = Dense::new(2, 2, &mut rng());
        d.backward(&Tensor::zeros(vec![2]));
    }
}
