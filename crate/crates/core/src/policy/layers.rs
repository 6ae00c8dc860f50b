//! Differentiable building blocks over a flat parameter vector.
//!
//! Layers hold offsets into the parameter vector; forward passes read
//! parameters from `p`, backward passes accumulate into a gradient vector `g`
//! with the same layout. Input gradients are accumulated (`+=`) as well.

use super::kernels::{axpy, dot, sigmoid};
use super::layout::ParamLayout;

/// `y = W x + b` with `W` stored as `[out, in]`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: usize,
    pub b: Option<usize>,
    pub n_in: usize,
    pub n_out: usize,
}

impl Linear {
    pub fn new(layout: &mut ParamLayout, name: &str, n_in: usize, n_out: usize, bias: bool) -> Self {
        let w = layout.add(format!("{name}.weight"), &[n_out, n_in]);
        let b = bias.then(|| layout.add(format!("{name}.bias"), &[n_out]));
        Self { w, b, n_in, n_out }
    }

    pub fn weight<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.w..self.w + self.n_in * self.n_out]
    }

    pub fn forward(&self, p: &[f64], x: &[f64], y: &mut [f64]) {
        let w = self.weight(p);
        for (o, yo) in y.iter_mut().enumerate().take(self.n_out) {
            let bias = self.b.map_or(0.0, |b| p[b + o]);
            *yo = bias + dot(&w[o * self.n_in..(o + 1) * self.n_in], x);
        }
    }

    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], dy: &[f64], mut dx: Option<&mut [f64]>) {
        for (o, &d) in dy.iter().enumerate().take(self.n_out) {
            if d == 0.0 {
                continue;
            }
            let row = self.w + o * self.n_in;
            axpy(d, x, &mut g[row..row + self.n_in]);
            if let Some(b) = self.b {
                g[b + o] += d;
            }
            if let Some(dx) = dx.as_deref_mut() {
                axpy(d, &p[row..row + self.n_in], dx);
            }
        }
    }
}

/// 1-D convolution over `[channels, length]` activations.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub w: usize,
    pub b: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub l_in: usize,
    pub l_out: usize,
}

impl Conv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        l_in: usize,
    ) -> Option<Self> {
        let padded = l_in + 2 * pad;
        if padded < kernel {
            return None;
        }
        let l_out = (padded - kernel) / stride + 1;
        let w = layout.add(format!("{name}.weight"), &[c_out, c_in, kernel]);
        let b = layout.add(format!("{name}.bias"), &[c_out]);
        Some(Self { w, b, c_in, c_out, kernel, stride, pad, l_in, l_out })
    }

    pub fn out_len(&self) -> usize {
        self.c_out * self.l_out
    }

    fn source(&self, j: usize, k: usize) -> Option<usize> {
        let pos = (j * self.stride + k) as isize - self.pad as isize;
        (pos >= 0 && (pos as usize) < self.l_in).then_some(pos as usize)
    }

    pub fn forward(&self, p: &[f64], x: &[f64], y: &mut [f64]) {
        for o in 0..self.c_out {
            let bias = p[self.b + o];
            for j in 0..self.l_out {
                let mut acc = bias;
                for c in 0..self.c_in {
                    let wrow = self.w + (o * self.c_in + c) * self.kernel;
                    for k in 0..self.kernel {
                        if let Some(pos) = self.source(j, k) {
                            acc += p[wrow + k] * x[c * self.l_in + pos];
                        }
                    }
                }
                y[o * self.l_out + j] = acc;
            }
        }
    }

    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], dy: &[f64], mut dx: Option<&mut [f64]>) {
        for o in 0..self.c_out {
            for j in 0..self.l_out {
                let d = dy[o * self.l_out + j];
                if d == 0.0 {
                    continue;
                }
                g[self.b + o] += d;
                for c in 0..self.c_in {
                    let wrow = self.w + (o * self.c_in + c) * self.kernel;
                    for k in 0..self.kernel {
                        if let Some(pos) = self.source(j, k) {
                            g[wrow + k] += d * x[c * self.l_in + pos];
                            if let Some(dx) = dx.as_deref_mut() {
                                dx[c * self.l_in + pos] += d * p[wrow + k];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Group normalization over `[channels, length]` with per-channel affine.
/// Uses no batch statistics, only each sample's own groups.
#[derive(Debug, Clone)]
pub struct GroupNorm {
    pub gamma: usize,
    pub beta: usize,
    pub channels: usize,
    pub groups: usize,
    pub len: usize,
    pub eps: f64,
}

impl GroupNorm {
    pub fn new(layout: &mut ParamLayout, name: &str, channels: usize, groups: usize, len: usize) -> Self {
        assert!(groups > 0 && channels.is_multiple_of(groups), "channels must divide into groups");
        let gamma = layout.add(format!("{name}.gamma"), &[channels]);
        let beta = layout.add(format!("{name}.beta"), &[channels]);
        Self { gamma, beta, channels, groups, len, eps: 1e-5 }
    }

    /// Writes the normalized-but-unscaled values to `xhat` and the inverse
    /// standard deviation per group to `inv_std`.
    #[allow(clippy::needless_range_loop)]
    pub fn forward(&self, p: &[f64], x: &[f64], xhat: &mut [f64], inv_std: &mut [f64], y: &mut [f64]) {
        let per_group = self.channels / self.groups * self.len;
        for gi in 0..self.groups {
            let span = gi * per_group..(gi + 1) * per_group;
            let xs = &x[span.clone()];
            let mean = xs.iter().sum::<f64>() / per_group as f64;
            let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / per_group as f64;
            let inv = 1.0 / (var + self.eps).sqrt();
            inv_std[gi] = inv;
            for i in span {
                xhat[i] = (x[i] - mean) * inv;
                let c = i / self.len;
                y[i] = p[self.gamma + c] * xhat[i] + p[self.beta + c];
            }
        }
    }

    #[allow(clippy::needless_range_loop)]
    pub fn backward(&self, p: &[f64], g: &mut [f64], xhat: &[f64], inv_std: &[f64], dy: &[f64], dx: &mut [f64]) {
        let per_group = self.channels / self.groups * self.len;
        let m = per_group as f64;
        for gi in 0..self.groups {
            let span = gi * per_group..(gi + 1) * per_group;
            let mut sum_d = 0.0;
            let mut sum_dx = 0.0;
            for i in span.clone() {
                let c = i / self.len;
                g[self.gamma + c] += dy[i] * xhat[i];
                g[self.beta + c] += dy[i];
                let dxhat = dy[i] * p[self.gamma + c];
                sum_d += dxhat;
                sum_dx += dxhat * xhat[i];
            }
            let inv = inv_std[gi];
            for i in span {
                let c = i / self.len;
                let dxhat = dy[i] * p[self.gamma + c];
                dx[i] += inv / m * (m * dxhat - sum_d - xhat[i] * sum_dx);
            }
        }
    }
}

/// Non-overlapping average pooling with window 2 along the length axis.
pub fn avg_pool2(x: &[f64], channels: usize, l_in: usize, y: &mut [f64]) {
    let l_out = l_in / 2;
    for c in 0..channels {
        for j in 0..l_out {
            y[c * l_out + j] = 0.5 * (x[c * l_in + 2 * j] + x[c * l_in + 2 * j + 1]);
        }
    }
}

/// Gated recurrent unit cell (reset, update, new gate order).
#[derive(Debug, Clone)]
pub struct GruCell {
    pub w_ih: usize,
    pub w_hh: usize,
    pub b_ih: usize,
    pub b_hh: usize,
    pub n_in: usize,
    pub hidden: usize,
}

/// Per-step activations kept for the backward pass. All slices have length
/// `hidden`.
pub struct GruCache<'a> {
    pub h_in: &'a [f64],
    pub r: &'a [f64],
    pub z: &'a [f64],
    pub n: &'a [f64],
    pub gh_n: &'a [f64],
}

impl GruCell {
    pub fn new(layout: &mut ParamLayout, name: &str, n_in: usize, hidden: usize) -> Self {
        let w_ih = layout.add(format!("{name}.weight_ih"), &[3 * hidden, n_in]);
        let w_hh = layout.add(format!("{name}.weight_hh"), &[3 * hidden, hidden]);
        let b_ih = layout.add(format!("{name}.bias_ih"), &[3 * hidden]);
        let b_hh = layout.add(format!("{name}.bias_hh"), &[3 * hidden]);
        Self { w_ih, w_hh, b_ih, b_hh, n_in, hidden }
    }

    /// `gates` is scratch of length `6 * hidden`. Outputs go to `r`, `z`, `n`,
    /// `gh_n` (the hidden-side pre-activation of the new gate) and `h_out`.
    #[allow(clippy::too_many_arguments)]
    pub fn forward(
        &self,
        p: &[f64],
        x: &[f64],
        h: &[f64],
        gates: &mut [f64],
        r: &mut [f64],
        z: &mut [f64],
        n: &mut [f64],
        gh_n: &mut [f64],
        h_out: &mut [f64],
    ) {
        let hs = self.hidden;
        let (gi, gh) = gates.split_at_mut(3 * hs);
        for row in 0..3 * hs {
            let wi = self.w_ih + row * self.n_in;
            let wh = self.w_hh + row * hs;
            gi[row] = p[self.b_ih + row] + dot(&p[wi..wi + self.n_in], x);
            gh[row] = p[self.b_hh + row] + dot(&p[wh..wh + hs], h);
        }
        for k in 0..hs {
            r[k] = sigmoid(gi[k] + gh[k]);
            z[k] = sigmoid(gi[hs + k] + gh[hs + k]);
            gh_n[k] = gh[2 * hs + k];
            n[k] = (gi[2 * hs + k] + r[k] * gh_n[k]).tanh();
            h_out[k] = (1.0 - z[k]) * n[k] + z[k] * h[k];
        }
    }

    /// Accumulates parameter gradients; adds the input gradient to `dx` and
    /// writes the gradient with respect to `h_in` into `dh_in`. `scratch` has
    /// length `6 * hidden`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        p: &[f64],
        g: &mut [f64],
        x: &[f64],
        cache: &GruCache<'_>,
        dh_out: &[f64],
        scratch: &mut [f64],
        dx: &mut [f64],
        dh_in: &mut [f64],
    ) {
        let hs = self.hidden;
        let (dgi, dgh) = scratch.split_at_mut(3 * hs);
        for k in 0..hs {
            let (r, z, n) = (cache.r[k], cache.z[k], cache.n[k]);
            let d = dh_out[k];
            let dn = d * (1.0 - z);
            let dz = d * (cache.h_in[k] - n);
            dh_in[k] = d * z;
            let dn_pre = dn * (1.0 - n * n);
            let dr = dn_pre * cache.gh_n[k];
            let dr_pre = dr * r * (1.0 - r);
            let dz_pre = dz * z * (1.0 - z);
            dgi[k] = dr_pre;
            dgh[k] = dr_pre;
            dgi[hs + k] = dz_pre;
            dgh[hs + k] = dz_pre;
            dgi[2 * hs + k] = dn_pre;
            dgh[2 * hs + k] = dn_pre * r;
        }
        for row in 0..3 * hs {
            let wi = self.w_ih + row * self.n_in;
            let wh = self.w_hh + row * hs;
            let (a, b) = (dgi[row], dgh[row]);
            g[self.b_ih + row] += a;
            g[self.b_hh + row] += b;
            if a != 0.0 {
                axpy(a, x, &mut g[wi..wi + self.n_in]);
                axpy(a, &p[wi..wi + self.n_in], dx);
            }
            if b != 0.0 {
                axpy(b, cache.h_in, &mut g[wh..wh + hs]);
                axpy(b, &p[wh..wh + hs], dh_in);
            }
        }
    }
}
