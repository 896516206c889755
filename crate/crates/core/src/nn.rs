//! Minimal layer kernels with explicit backward passes.
//!
//! Parameters live in one flat `f32` buffer; layers only record offsets into
//! it. Gradients use a buffer of the same length, which keeps the optimizer
//! and the checkpoint format trivial.

use std::ops::{Add, Mul};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;

pub const LEAKY_SLOPE: f32 = 0.2;

/// Allocates contiguous parameter ranges while a network is being built.
#[derive(Debug, Default)]
pub struct ParamAllocator {
    len: usize,
}

impl ParamAllocator {
    pub fn take(&mut self, n: usize) -> usize {
        let off = self.len;
        self.len += n;
        off
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Same-padded 2-D convolution with a 1×1 or 3×3 kernel and stride 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv2d {
    pub cin: usize,
    pub cout: usize,
    pub kernel: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl Conv2d {
    pub fn new(alloc: &mut ParamAllocator, cin: usize, cout: usize, kernel: usize) -> Self {
        assert!(kernel == 1 || kernel == 3, "only 1x1 and 3x3 kernels");
        let weight_offset = alloc.take(cout * cin * kernel * kernel);
        let bias_offset = alloc.take(cout);
        Self {
            cin,
            cout,
            kernel,
            weight_offset,
            bias_offset,
        }
    }

    pub fn weight_len(&self) -> usize {
        self.cout * self.cin * self.kernel * self.kernel
    }

    pub fn weights<'a>(&self, params: &'a [f32]) -> &'a [f32] {
        &params[self.weight_offset..self.weight_offset + self.weight_len()]
    }

    pub fn bias<'a>(&self, params: &'a [f32]) -> &'a [f32] {
        &params[self.bias_offset..self.bias_offset + self.cout]
    }

    /// He-uniform weights for a leaky-ReLU successor; zero bias.
    pub fn init_he<R: Rng>(&self, params: &mut [f32], rng: &mut R) {
        let fan_in = (self.cin * self.kernel * self.kernel) as f32;
        let bound = (6.0 / (fan_in * (1.0 + LEAKY_SLOPE * LEAKY_SLOPE))).sqrt();
        for w in &mut params[self.weight_offset..self.weight_offset + self.weight_len()] {
            *w = rng.gen_range(-bound..bound);
        }
        params[self.bias_offset..self.bias_offset + self.cout].fill(0.0);
    }

    pub fn init_zero(&self, params: &mut [f32]) {
        params[self.weight_offset..self.weight_offset + self.weight_len()].fill(0.0);
        params[self.bias_offset..self.bias_offset + self.cout].fill(0.0);
    }

    pub fn forward(&self, params: &[f32], input: &Tensor) -> Tensor {
        assert_eq!(input.channels, self.cin, "conv input channels");
        let (h, w) = (input.height, input.width);
        let weights = self.weights(params);
        let bias = self.bias(params);
        let mut out = Tensor::zeros(self.cout, h, w);
        let kk = self.kernel * self.kernel;
        for co in 0..self.cout {
            let plane = out.plane_mut(co);
            plane.fill(bias[co]);
            for ci in 0..self.cin {
                let wk = &weights[(co * self.cin + ci) * kk..(co * self.cin + ci + 1) * kk];
                if self.kernel == 1 {
                    axpy(plane, input.plane(ci), wk[0]);
                } else {
                    let k: &[f32; 9] = wk.try_into().unwrap();
                    conv3x3_accumulate(plane, input.plane(ci), k, h, w);
                }
            }
        }
        out
    }

    /// Accumulates parameter gradients into `grads` and returns the input
    /// gradient when `want_input_grad` is set.
    pub fn backward(
        &self,
        params: &[f32],
        input: &Tensor,
        grad_out: &Tensor,
        grads: &mut [f32],
        want_input_grad: bool,
    ) -> Option<Tensor> {
        let (h, w) = (input.height, input.width);
        let kk = self.kernel * self.kernel;
        for co in 0..self.cout {
            let g = grad_out.plane(co);
            grads[self.bias_offset + co] += g.iter().sum::<f32>();
            for ci in 0..self.cin {
                let base = self.weight_offset + (co * self.cin + ci) * kk;
                if self.kernel == 1 {
                    grads[base] += dot(g, input.plane(ci));
                } else {
                    let acc = conv3x3_weight_grad(g, input.plane(ci), h, w);
                    for (dst, v) in grads[base..base + 9].iter_mut().zip(acc) {
                        *dst += v;
                    }
                }
            }
        }
        if !want_input_grad {
            return None;
        }
        let weights = self.weights(params);
        let mut gin = Tensor::zeros(self.cin, h, w);
        for ci in 0..self.cin {
            let plane = gin.plane_mut(ci);
            for co in 0..self.cout {
                let wk = &weights[(co * self.cin + ci) * kk..(co * self.cin + ci + 1) * kk];
                if self.kernel == 1 {
                    axpy(plane, grad_out.plane(co), wk[0]);
                } else {
                    let mut flipped = [0.0f32; 9];
                    for (i, v) in wk.iter().enumerate() {
                        flipped[8 - i] = *v;
                    }
                    conv3x3_accumulate(plane, grad_out.plane(co), &flipped, h, w);
                }
            }
        }
        Some(gin)
    }
}

#[inline]
fn axpy(dst: &mut [f32], src: &[f32], a: f32) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    // Four lanes keep the reduction vectorizable without fast-math.
    let mut acc = [0.0f32; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * i + l] * b[4 * i + l];
        }
    }
    let mut s = acc[0] + acc[1] + acc[2] + acc[3];
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// `out += k ⋆ inp` (cross-correlation, zero padding), both `h × w` planes.
fn conv3x3_accumulate(out: &mut [f32], inp: &[f32], k: &[f32; 9], h: usize, w: usize) {
    if w == 1 {
        for y in 0..h {
            let mut acc = 0.0;
            for ky in 0..3 {
                let yy = y as isize + ky as isize - 1;
                if yy >= 0 && (yy as usize) < h {
                    acc += k[ky * 3 + 1] * inp[yy as usize];
                }
            }
            out[y] += acc;
        }
        return;
    }
    // Rows outside the image read from a zero row so every output row takes
    // one fused nine-tap pass.
    let zero = vec![0.0f32; w];
    for y in 0..h {
        let orow = &mut out[y * w..(y + 1) * w];
        let row = |yy: isize| -> &[f32] {
            if yy < 0 || yy as usize >= h {
                &zero
            } else {
                &inp[yy as usize * w..(yy as usize + 1) * w]
            }
        };
        let (r0, r1, r2) = (row(y as isize - 1), row(y as isize), row(y as isize + 1));
        let inner = &mut orow[1..w - 1];
        let n = inner.len();
        let (a0, a1, a2) = (&r0[0..n], &r0[1..n + 1], &r0[2..n + 2]);
        let (b0, b1, b2) = (&r1[0..n], &r1[1..n + 1], &r1[2..n + 2]);
        let (c0, c1, c2) = (&r2[0..n], &r2[1..n + 1], &r2[2..n + 2]);
        for i in 0..n {
            inner[i] += k[0] * a0[i]
                + k[1] * a1[i]
                + k[2] * a2[i]
                + k[3] * b0[i]
                + k[4] * b1[i]
                + k[5] * b2[i]
                + k[6] * c0[i]
                + k[7] * c1[i]
                + k[8] * c2[i];
        }
        for (ky, r) in [r0, r1, r2].iter().enumerate() {
            orow[0] += k[ky * 3 + 1] * r[0] + k[ky * 3 + 2] * r[1];
            orow[w - 1] += k[ky * 3] * r[w - 2] + k[ky * 3 + 1] * r[w - 1];
        }
    }
}

/// Gradient of `Σ g · (k ⋆ inp)` with respect to the nine taps of `k`.
fn conv3x3_weight_grad(g: &[f32], inp: &[f32], h: usize, w: usize) -> [f32; 9] {
    const L: usize = 8;
    let mut acc = [0.0f32; 9];
    if w < 3 {
        return conv3x3_weight_grad_naive(g, inp, h, w);
    }
    let mut lanes = [[0.0f32; L]; 9];
    for y in 0..h {
        let grow = &g[y * w..(y + 1) * w];
        for ky in 0..3 {
            let yy = y as isize + ky as isize - 1;
            if yy < 0 || yy as usize >= h {
                continue;
            }
            let irow = &inp[yy as usize * w..(yy as usize + 1) * w];
            let gi = &grow[1..w - 1];
            let (l, m, r) = (&irow[0..w - 2], &irow[1..w - 1], &irow[2..w]);
            let n = gi.len() / L * L;
            let [t0, t1, t2] = &mut lanes[ky * 3..ky * 3 + 3] else {
                unreachable!()
            };
            for i in (0..n).step_by(L) {
                for k in 0..L {
                    let gv = gi[i + k];
                    t0[k] += gv * l[i + k];
                    t1[k] += gv * m[i + k];
                    t2[k] += gv * r[i + k];
                }
            }
            let b = ky * 3;
            for i in n..gi.len() {
                acc[b] += gi[i] * l[i];
                acc[b + 1] += gi[i] * m[i];
                acc[b + 2] += gi[i] * r[i];
            }
            acc[b + 1] += grow[0] * irow[0] + grow[w - 1] * irow[w - 1];
            acc[b + 2] += grow[0] * irow[1];
            acc[b] += grow[w - 1] * irow[w - 2];
        }
    }
    for (a, lane) in acc.iter_mut().zip(&lanes) {
        *a += lane.iter().sum::<f32>();
    }
    acc
}

fn conv3x3_weight_grad_naive(g: &[f32], inp: &[f32], h: usize, w: usize) -> [f32; 9] {
    let mut acc = [0.0f32; 9];
    for y in 0..h {
        for x in 0..w {
            for ky in 0..3 {
                for kx in 0..3 {
                    let yy = y as isize + ky as isize - 1;
                    let xx = x as isize + kx as isize - 1;
                    if yy >= 0 && xx >= 0 && (yy as usize) < h && (xx as usize) < w {
                        acc[ky * 3 + kx] += g[y * w + x] * inp[yy as usize * w + xx as usize];
                    }
                }
            }
        }
    }
    acc
}

pub fn leaky_relu(t: &Tensor) -> Tensor {
    let mut out = t.clone();
    for v in &mut out.data {
        if *v < 0.0 {
            *v *= LEAKY_SLOPE;
        }
    }
    out
}

/// Backward through a leaky ReLU given its *output* (same sign as the input).
pub fn leaky_relu_backward(output: &Tensor, grad: &mut Tensor) {
    for (g, o) in grad.data.iter_mut().zip(&output.data) {
        if *o < 0.0 {
            *g *= LEAKY_SLOPE;
        }
    }
}

/// 2×2 average pooling; spatial dims must be even.
pub fn avg_pool2(t: &Tensor) -> Tensor {
    let (h2, w2) = (t.height / 2, t.width / 2);
    let mut out = Tensor::zeros(t.channels, h2, w2);
    for c in 0..t.channels {
        let src = t.plane(c);
        let dst = out.plane_mut(c);
        for y in 0..h2 {
            for x in 0..w2 {
                let i = 2 * y * t.width + 2 * x;
                dst[y * w2 + x] =
                    0.25 * (src[i] + src[i + 1] + src[i + t.width] + src[i + t.width + 1]);
            }
        }
    }
    out
}

pub fn avg_pool2_backward(grad: &Tensor, height: usize, width: usize) -> Tensor {
    let mut out = Tensor::zeros(grad.channels, height, width);
    let w2 = grad.width;
    for c in 0..grad.channels {
        let src = grad.plane(c);
        let dst = out.plane_mut(c);
        for y in 0..height {
            for x in 0..width {
                dst[y * width + x] = 0.25 * src[(y / 2) * w2 + x / 2];
            }
        }
    }
    out
}

pub fn upsample2(t: &Tensor) -> Tensor {
    let (h, w) = (t.height * 2, t.width * 2);
    let mut out = Tensor::zeros(t.channels, h, w);
    for c in 0..t.channels {
        let src = t.plane(c);
        let dst = out.plane_mut(c);
        for y in 0..h {
            let srow = &src[(y / 2) * t.width..(y / 2 + 1) * t.width];
            let drow = &mut dst[y * w..(y + 1) * w];
            for (x, d) in drow.iter_mut().enumerate() {
                *d = srow[x / 2];
            }
        }
    }
    out
}

pub fn upsample2_backward(grad: &Tensor) -> Tensor {
    let (h2, w2) = (grad.height / 2, grad.width / 2);
    let mut out = Tensor::zeros(grad.channels, h2, w2);
    for c in 0..grad.channels {
        let src = grad.plane(c);
        let dst = out.plane_mut(c);
        for y in 0..grad.height {
            for x in 0..grad.width {
                dst[(y / 2) * w2 + x / 2] += src[y * grad.width + x];
            }
        }
    }
    out
}

/// `(1 + s·γ)·F + s·β` for one element.
pub fn film<T>(f: T, gamma: T, beta: T, strength: T) -> T
where
    T: Copy + From<f32> + Add<Output = T> + Mul<Output = T>,
{
    (T::from(1.0) + strength * gamma) * f + strength * beta
}

/// Feature-wise affine modulation: `(1 + s·γ) ⊙ F + s·β`.
pub fn film_modulate(features: &Tensor, gamma: &Tensor, beta: &Tensor, strength: f32) -> Tensor {
    let mut out = features.clone();
    for ((o, g), b) in out.data.iter_mut().zip(&gamma.data).zip(&beta.data) {
        *o = film(*o, *g, *b, strength);
    }
    out
}

/// Returns `(dF, dγ, dβ)`.
pub fn film_backward(
    features: &Tensor,
    gamma: &Tensor,
    grad: &Tensor,
    strength: f32,
) -> (Tensor, Tensor, Tensor) {
    let mut df = grad.clone();
    let mut dg = grad.clone();
    let mut db = grad.clone();
    for i in 0..grad.data.len() {
        let g = grad.data[i];
        df.data[i] = g * (1.0 + strength * gamma.data[i]);
        dg.data[i] = g * strength * features.data[i];
        db.data[i] = g * strength;
    }
    (df, dg, db)
}

/// Adam with bias correction, no weight decay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    step: u64,
    m: Vec<f32>,
    v: Vec<f32>,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f32) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [f32], grads: &[f32]) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= self.learning_rate * mh / (vh.sqrt() + self.eps);
        }
    }
}
