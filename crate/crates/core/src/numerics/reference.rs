//! f64 reference forward implementations.
//!
//! These reimplement each layer's math directly from its definition, in
//! double precision, reading the engine's f32 parameters. They are the
//! independent evaluation path for gradient checking: central differences
//! computed on these functions are accurate to ~1e-12, so any disagreement
//! with the engine's analytic gradients is a wrong gradient rather than
//! f32 evaluation noise. Nothing in the training or inference path calls
//! into this module.

#[allow(clippy::too_many_arguments)]
pub fn conv2d(
    x: &[f64],
    w: &[f32],
    b: &[f32],
    ci: usize,
    co: usize,
    h: usize,
    wd: usize,
    k: usize,
    s: usize,
    p: usize,
) -> (Vec<f64>, usize, usize) {
    let oh = (h + 2 * p - k) / s + 1;
    let ow = (wd + 2 * p - k) / s + 1;
    let mut out = vec![0.0f64; co * oh * ow];
    for o in 0..co {
        let out_plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
        out_plane.iter_mut().for_each(|v| *v = b[o] as f64);
        for c in 0..ci {
            let x_plane = &x[c * h * wd..(c + 1) * h * wd];
            for ky in 0..k {
                for kx in 0..k {
                    let weight = w[((o * ci + c) * k + ky) * k + kx] as f64;
                    // Output-column range with in-bounds input columns.
                    let ox_lo = if p > kx { (p - kx).div_ceil(s) } else { 0 };
                    let ox_hi_excl = {
                        let limit = wd + p - kx; // ix < wd  <=>  ox*s < limit
                        (limit.div_ceil(s)).min(ow)
                    };
                    if ox_lo >= ox_hi_excl {
                        continue;
                    }
                    for oy in 0..oh {
                        let iy = (oy * s + ky) as isize - p as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let x_row = &x_plane[iy as usize * wd..(iy as usize + 1) * wd];
                        let out_row = &mut out_plane[oy * ow..(oy + 1) * ow];
                        let base = ox_lo * s + kx - p;
                        if s == 1 {
                            let src = &x_row[base..base + (ox_hi_excl - ox_lo)];
                            for (dst, xv) in out_row[ox_lo..ox_hi_excl].iter_mut().zip(src) {
                                *dst += weight * xv;
                            }
                        } else {
                            for (i, dst) in out_row[ox_lo..ox_hi_excl].iter_mut().enumerate() {
                                *dst += weight * x_row[base + i * s];
                            }
                        }
                    }
                }
            }
        }
    }
    (out, oh, ow)
}

pub fn maxpool2d(x: &[f64], c: usize, h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0f64; c * oh * ow];
    for ci in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let base = ci * h * w + (oy * 2) * w + ox * 2;
                out[(ci * oh + oy) * ow + ox] =
                    x[base].max(x[base + 1]).max(x[base + w]).max(x[base + w + 1]);
            }
        }
    }
    (out, oh, ow)
}

pub fn upsample2x(x: &[f64], c: usize, h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h * 2, w * 2);
    let mut out = vec![0.0f64; c * oh * ow];
    for ci in 0..c {
        for y in 0..oh {
            for x_ in 0..ow {
                out[(ci * oh + y) * ow + x_] = x[(ci * h + y / 2) * w + x_ / 2];
            }
        }
    }
    (out, oh, ow)
}

pub fn dense(x: &[f64], w: &[f32], b: &[f32], n_in: usize, n_out: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; n_out];
    for (o, slot) in out.iter_mut().enumerate() {
        let mut acc = b[o] as f64;
        for i in 0..n_in {
            acc += w[o * n_in + i] as f64 * x[i];
        }
        *slot = acc;
    }
    out
}

pub fn relu(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Decision-boundary diagnostics for one evaluation.
///
/// `margin` is the distance to the nearest relu sign flip, live pool tie,
/// or Huber branch switch; near zero, the f32 engine may legitimately read
/// the boundary the other way than this f64 path. `signature` hashes every
/// decision bit (relu signs, pool argmax picks, huber branch): two
/// evaluations with different signatures straddle at least one kink, so a
/// finite difference across them is not a derivative estimate.
#[derive(Debug, Clone, Copy)]
pub struct KinkMargin {
    pub margin: f64,
    pub signature: u64,
}

impl KinkMargin {
    pub fn fresh() -> Self {
        KinkMargin {
            margin: f64::INFINITY,
            signature: 0xcbf2_9ce4_8422_2325,
        }
    }

    pub fn note(&mut self, distance: f64) {
        if distance < self.margin {
            self.margin = distance;
        }
    }

    pub fn decision(&mut self, bits: u64) {
        self.signature = (self.signature ^ bits).wrapping_mul(0x0000_0100_0000_01b3);
    }
}

pub fn relu_tracked(x: &mut [f64], margin: &mut KinkMargin) {
    for v in x.iter_mut() {
        margin.note(v.abs());
        margin.decision((*v > 0.0) as u64);
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Max-pool that also records the win margin of each window's argmax.
/// Windows whose maximum is zero are dead relu regions: the output is
/// constant there regardless of which entry "wins", so they carry no kink.
pub fn maxpool2d_tracked(
    x: &[f64],
    c: usize,
    h: usize,
    w: usize,
    margin: &mut KinkMargin,
) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0f64; c * oh * ow];
    for ci in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let base = ci * h * w + (oy * 2) * w + ox * 2;
                let vals = [x[base], x[base + 1], x[base + w], x[base + w + 1]];
                let mut best = vals[0];
                let mut best_idx = 0u64;
                let mut second = f64::MIN;
                for (k, &v) in vals.iter().enumerate().skip(1) {
                    if v > best {
                        second = best;
                        best = v;
                        best_idx = k as u64;
                    } else if v > second {
                        second = v;
                    }
                }
                if best > 0.0 {
                    margin.note(best - second);
                    margin.decision(best_idx);
                }
                out[(ci * oh + oy) * ow + ox] = best;
            }
        }
    }
    (out, oh, ow)
}

pub fn tanh(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.tanh();
    }
}

pub fn huber(pred: f64, target: f64, delta: f64) -> f64 {
    let e = pred - target;
    if e.abs() <= delta {
        0.5 * e * e
    } else {
        delta * (e.abs() - 0.5 * delta)
    }
}

pub fn huber_tracked(pred: f64, target: f64, delta: f64, margin: &mut KinkMargin) -> f64 {
    let e = pred - target;
    margin.note((e.abs() - delta).abs());
    margin.decision((e.abs() <= delta) as u64);
    huber(pred, target, delta)
}

pub fn softmax_cross_entropy(logits: &[f64], labels: &[u8], k: usize) -> f64 {
    let n = labels.len();
    let mut total = 0.0f64;
    for p in 0..n {
        let mut max = f64::MIN;
        for c in 0..k {
            max = max.max(logits[c * n + p]);
        }
        let mut z = 0.0f64;
        for c in 0..k {
            z += (logits[c * n + p] - max).exp();
        }
        total += z.ln() - (logits[labels[p] as usize * n + p] - max);
    }
    total / n as f64
}
