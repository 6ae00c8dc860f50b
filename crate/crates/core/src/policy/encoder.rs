//! Visual encoders over the depth ray vector.
//!
//! Every encoder maps `n_rays` normalized depths to `hidden` features with a
//! final ReLU, so encoder kinds are interchangeable inside the policy.
//!
//! Toy-scale shapes (`n_rays = 32` shown):
//!
//! * `mlp`: 32 -> hidden -> hidden.
//! * `simple_cnn`: three strided convolutions over the ray vector as a 1x32
//!   image, 1->8 channels (kernel 5, stride 2, length 14), 8->16 (kernel 3,
//!   stride 2, length 6), 16->16 (kernel 3, stride 1, length 4), then
//!   flatten and a linear layer.
//! * `residual_gn`: 2x average pool (length 16), a 3-wide stem convolution to
//!   8 channels, two basic residual blocks with group normalization (2 groups)
//!   in place of batch normalization, and a final unpadded 3-wide convolution
//!   (length 14) that is flattened instead of globally pooled, then a linear
//!   layer.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::kernels::{relu_backward, relu_in_place};
use super::layers::{avg_pool2, Conv1d, GroupNorm, Linear};
use super::layout::ParamLayout;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Mlp,
    SimpleCnn,
    ResidualGn,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 3] = [EncoderKind::Mlp, EncoderKind::SimpleCnn, EncoderKind::ResidualGn];

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Mlp => "mlp",
            EncoderKind::SimpleCnn => "simple_cnn",
            EncoderKind::ResidualGn => "residual_gn",
        }
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(EncoderKind::Mlp),
            "simple_cnn" => Ok(EncoderKind::SimpleCnn),
            "residual_gn" => Ok(EncoderKind::ResidualGn),
            other => Err(Error::Config(format!("unknown encoder kind {other:?}"))),
        }
    }
}

const RES_CHANNELS: usize = 8;
const RES_GROUPS: usize = 2;

#[derive(Debug, Clone)]
struct Slots(usize);

impl Slots {
    fn take(&mut self, n: usize) -> Range<usize> {
        let r = self.0..self.0 + n;
        self.0 += n;
        r
    }
}

/// `(read, write)` views of one buffer where `read` lies entirely before
/// `write`.
fn fwd<'a>(buf: &'a mut [f64], read: &Range<usize>, write: &Range<usize>) -> (&'a [f64], &'a mut [f64]) {
    debug_assert!(read.end <= write.start);
    let (a, b) = buf.split_at_mut(write.start);
    (&a[read.clone()], &mut b[..write.len()])
}

/// `(later, earlier)` mutable views for propagating gradients backwards.
fn bwd<'a>(buf: &'a mut [f64], later: &Range<usize>, earlier: &Range<usize>) -> (&'a mut [f64], &'a mut [f64]) {
    debug_assert!(earlier.end <= later.start);
    let (a, b) = buf.split_at_mut(later.start);
    (&mut b[..later.len()], &mut a[earlier.clone()])
}

#[derive(Debug, Clone)]
struct GnSlots {
    pre: Range<usize>,
    xhat: Range<usize>,
    inv: Range<usize>,
    out: Range<usize>,
}

impl GnSlots {
    fn new(slots: &mut Slots, size: usize, groups: usize) -> Self {
        Self {
            pre: slots.take(size),
            xhat: slots.take(size),
            inv: slots.take(groups),
            out: slots.take(size),
        }
    }

    fn forward(&self, gn: &GroupNorm, p: &[f64], cache: &mut [f64]) {
        let (pre, rest) = cache.split_at_mut(self.xhat.start);
        let x = &pre[self.pre.clone()];
        let (xhat, rest) = rest.split_at_mut(self.inv.start - self.xhat.start);
        let (inv, rest) = rest.split_at_mut(self.out.start - self.inv.start);
        gn.forward(p, x, xhat, inv, &mut rest[..self.out.len()]);
    }

    /// Reads the output gradient from `grads[out]`, writes `grads[pre]`.
    fn backward(&self, gn: &GroupNorm, p: &[f64], g: &mut [f64], cache: &[f64], grads: &mut [f64]) {
        let (dy, dx) = bwd(grads, &self.out, &self.pre);
        dx.fill(0.0);
        gn.backward(p, g, &cache[self.xhat.clone()], &cache[self.inv.clone()], dy, dx);
    }
}

#[derive(Debug, Clone)]
struct ResBlock {
    conv_a: Conv1d,
    gn_a: GroupNorm,
    conv_b: Conv1d,
    gn_b: GroupNorm,
    a: GnSlots,
    b: GnSlots,
    out: Range<usize>,
}

#[derive(Debug, Clone)]
enum Body {
    Mlp {
        fc1: Linear,
        fc2: Linear,
        h1: Range<usize>,
        h2: Range<usize>,
    },
    SimpleCnn {
        convs: [Conv1d; 3],
        acts: [Range<usize>; 3],
        fc: Linear,
        out: Range<usize>,
    },
    ResidualGn {
        pooled: Range<usize>,
        stem: Conv1d,
        stem_gn: GroupNorm,
        stem_slots: GnSlots,
        blocks: Vec<ResBlock>,
        last: Conv1d,
        last_out: Range<usize>,
        fc: Linear,
        out: Range<usize>,
    },
}

/// Encoder architecture. Activations for one observation live in a cache
/// slice of length [`Encoder::cache_len`].
#[derive(Debug, Clone)]
pub struct Encoder {
    kind: EncoderKind,
    n_in: usize,
    out_dim: usize,
    cache_len: usize,
    body: Body,
}

impl Encoder {
    pub fn build(kind: EncoderKind, n_rays: usize, hidden: usize, layout: &mut ParamLayout) -> Result<Self> {
        if n_rays == 0 || hidden == 0 {
            return Err(Error::Config("encoder dimensions must be positive".into()));
        }
        let mut slots = Slots(0);
        let too_small =
            |what: &str| Error::Config(format!("{what} encoder needs more than {n_rays} rays"));
        let body = match kind {
            EncoderKind::Mlp => {
                let fc1 = Linear::new(layout, "encoder.fc1", n_rays, hidden, true);
                let fc2 = Linear::new(layout, "encoder.fc2", hidden, hidden, true);
                Body::Mlp { h1: slots.take(hidden), h2: slots.take(hidden), fc1, fc2 }
            }
            EncoderKind::SimpleCnn => {
                let c1 = Conv1d::new(layout, "encoder.conv1", 1, 8, 5, 2, 0, n_rays)
                    .ok_or_else(|| too_small("simple_cnn"))?;
                let c2 = Conv1d::new(layout, "encoder.conv2", 8, 16, 3, 2, 0, c1.l_out)
                    .ok_or_else(|| too_small("simple_cnn"))?;
                let c3 = Conv1d::new(layout, "encoder.conv3", 16, 16, 3, 1, 0, c2.l_out)
                    .ok_or_else(|| too_small("simple_cnn"))?;
                let fc = Linear::new(layout, "encoder.fc", c3.out_len(), hidden, true);
                let acts = [slots.take(c1.out_len()), slots.take(c2.out_len()), slots.take(c3.out_len())];
                Body::SimpleCnn { convs: [c1, c2, c3], acts, fc, out: slots.take(hidden) }
            }
            EncoderKind::ResidualGn => {
                if n_rays < 6 {
                    return Err(too_small("residual_gn"));
                }
                let len = n_rays / 2;
                let pooled = slots.take(len);
                let stem = Conv1d::new(layout, "encoder.stem", 1, RES_CHANNELS, 3, 1, 1, len)
                    .ok_or_else(|| too_small("residual_gn"))?;
                let stem_gn = GroupNorm::new(layout, "encoder.stem_gn", RES_CHANNELS, RES_GROUPS, len);
                let size = RES_CHANNELS * len;
                let stem_slots = GnSlots::new(&mut slots, size, RES_GROUPS);
                let mut blocks = Vec::new();
                for i in 0..2 {
                    let conv_a = Conv1d::new(layout, &format!("encoder.block{i}.conv_a"), RES_CHANNELS, RES_CHANNELS, 3, 1, 1, len)
                        .ok_or_else(|| too_small("residual_gn"))?;
                    let gn_a = GroupNorm::new(layout, &format!("encoder.block{i}.gn_a"), RES_CHANNELS, RES_GROUPS, len);
                    let conv_b = Conv1d::new(layout, &format!("encoder.block{i}.conv_b"), RES_CHANNELS, RES_CHANNELS, 3, 1, 1, len)
                        .ok_or_else(|| too_small("residual_gn"))?;
                    let gn_b = GroupNorm::new(layout, &format!("encoder.block{i}.gn_b"), RES_CHANNELS, RES_GROUPS, len);
                    let a = GnSlots::new(&mut slots, size, RES_GROUPS);
                    let b = GnSlots::new(&mut slots, size, RES_GROUPS);
                    let out = slots.take(size);
                    blocks.push(ResBlock { conv_a, gn_a, conv_b, gn_b, a, b, out });
                }
                let last = Conv1d::new(layout, "encoder.last", RES_CHANNELS, RES_CHANNELS, 3, 1, 0, len)
                    .ok_or_else(|| too_small("residual_gn"))?;
                let last_out = slots.take(last.out_len());
                let fc = Linear::new(layout, "encoder.fc", last.out_len(), hidden, true);
                Body::ResidualGn {
                    pooled,
                    stem,
                    stem_gn,
                    stem_slots,
                    blocks,
                    last,
                    last_out,
                    fc,
                    out: slots.take(hidden),
                }
            }
        };
        Ok(Self { kind, n_in: n_rays, out_dim: hidden, cache_len: slots.0, body })
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn cache_len(&self) -> usize {
        self.cache_len
    }

    pub fn output<'a>(&self, cache: &'a [f64]) -> &'a [f64] {
        let r = match &self.body {
            Body::Mlp { h2, .. } => h2,
            Body::SimpleCnn { out, .. } | Body::ResidualGn { out, .. } => out,
        };
        &cache[r.clone()]
    }

    pub fn forward(&self, p: &[f64], x: &[f64], cache: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_in);
        match &self.body {
            Body::Mlp { fc1, fc2, h1, h2 } => {
                fc1.forward(p, x, &mut cache[h1.clone()]);
                relu_in_place(&mut cache[h1.clone()]);
                let (a, b) = fwd(cache, h1, h2);
                fc2.forward(p, a, b);
                relu_in_place(b);
            }
            Body::SimpleCnn { convs, acts, fc, out } => {
                convs[0].forward(p, x, &mut cache[acts[0].clone()]);
                relu_in_place(&mut cache[acts[0].clone()]);
                for i in 1..3 {
                    let (a, b) = fwd(cache, &acts[i - 1], &acts[i]);
                    convs[i].forward(p, a, b);
                    relu_in_place(b);
                }
                let (a, b) = fwd(cache, &acts[2], out);
                fc.forward(p, a, b);
                relu_in_place(b);
            }
            Body::ResidualGn { pooled, stem, stem_gn, stem_slots, blocks, last, last_out, fc, out } => {
                avg_pool2(x, 1, self.n_in, &mut cache[pooled.clone()]);
                let (a, b) = fwd(cache, pooled, &stem_slots.pre);
                stem.forward(p, a, b);
                stem_slots.forward(stem_gn, p, cache);
                relu_in_place(&mut cache[stem_slots.out.clone()]);
                let mut input = stem_slots.out.clone();
                for blk in blocks {
                    let (a, b) = fwd(cache, &input, &blk.a.pre);
                    blk.conv_a.forward(p, a, b);
                    blk.a.forward(&blk.gn_a, p, cache);
                    relu_in_place(&mut cache[blk.a.out.clone()]);
                    let (a, b) = fwd(cache, &blk.a.out, &blk.b.pre);
                    blk.conv_b.forward(p, a, b);
                    blk.b.forward(&blk.gn_b, p, cache);
                    let (skip, o) = fwd(cache, &input, &blk.out);
                    o.copy_from_slice(skip);
                    let (gn_out, o) = fwd(cache, &blk.b.out, &blk.out);
                    for (oi, gi) in o.iter_mut().zip(gn_out) {
                        *oi += gi;
                    }
                    relu_in_place(o);
                    input = blk.out.clone();
                }
                let (a, b) = fwd(cache, &input, last_out);
                last.forward(p, a, b);
                relu_in_place(b);
                let (a, b) = fwd(cache, last_out, out);
                fc.forward(p, a, b);
                relu_in_place(b);
            }
        }
    }

    /// Accumulates parameter gradients given the gradient of the encoder
    /// output. `grads` is scratch of length [`Encoder::cache_len`].
    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], cache: &[f64], d_out: &[f64], grads: &mut [f64]) {
        match &self.body {
            Body::Mlp { fc1, fc2, h1, h2 } => {
                let (d2, d1) = bwd(grads, h2, h1);
                d2.copy_from_slice(d_out);
                relu_backward(&cache[h2.clone()], d2);
                d1.fill(0.0);
                fc2.backward(p, g, &cache[h1.clone()], d2, Some(d1));
                relu_backward(&cache[h1.clone()], d1);
                fc1.backward(p, g, x, d1, None);
            }
            Body::SimpleCnn { convs, acts, fc, out } => {
                let (d_o, d3) = bwd(grads, out, &acts[2]);
                d_o.copy_from_slice(d_out);
                relu_backward(&cache[out.clone()], d_o);
                d3.fill(0.0);
                fc.backward(p, g, &cache[acts[2].clone()], d_o, Some(d3));
                relu_backward(&cache[acts[2].clone()], d3);
                for i in (1..3).rev() {
                    let (dy, dx) = bwd(grads, &acts[i], &acts[i - 1]);
                    dx.fill(0.0);
                    convs[i].backward(p, g, &cache[acts[i - 1].clone()], dy, Some(dx));
                    relu_backward(&cache[acts[i - 1].clone()], dx);
                }
                convs[0].backward(p, g, x, &grads[acts[0].clone()], None);
            }
            Body::ResidualGn { pooled, stem, stem_gn, stem_slots, blocks, last, last_out, fc, out } => {
                let (d_o, d_last) = bwd(grads, out, last_out);
                d_o.copy_from_slice(d_out);
                relu_backward(&cache[out.clone()], d_o);
                d_last.fill(0.0);
                fc.backward(p, g, &cache[last_out.clone()], d_o, Some(d_last));
                relu_backward(&cache[last_out.clone()], d_last);
                let mut input = blocks.last().map_or(stem_slots.out.clone(), |b| b.out.clone());
                {
                    let (dy, dx) = bwd(grads, last_out, &input);
                    dx.fill(0.0);
                    last.backward(p, g, &cache[input.clone()], dy, Some(dx));
                }
                for (i, blk) in blocks.iter().enumerate().rev() {
                    let prev = if i == 0 { stem_slots.out.clone() } else { blocks[i - 1].out.clone() };
                    debug_assert_eq!(input, blk.out);
                    // Output of the block after its ReLU.
                    relu_backward(&cache[blk.out.clone()], &mut grads[blk.out.clone()]);
                    {
                        let (d_sum, d_gn) = bwd(grads, &blk.out, &blk.b.out);
                        d_gn.copy_from_slice(d_sum);
                    }
                    blk.b.backward(&blk.gn_b, p, g, cache, grads);
                    {
                        let (dy, dx) = bwd(grads, &blk.b.pre, &blk.a.out);
                        dx.fill(0.0);
                        blk.conv_b.backward(p, g, &cache[blk.a.out.clone()], dy, Some(dx));
                    }
                    relu_backward(&cache[blk.a.out.clone()], &mut grads[blk.a.out.clone()]);
                    blk.a.backward(&blk.gn_a, p, g, cache, grads);
                    {
                        let (dy, dx) = bwd(grads, &blk.a.pre, &prev);
                        dx.fill(0.0);
                        blk.conv_a.backward(p, g, &cache[prev.clone()], dy, Some(dx));
                    }
                    {
                        let (d_sum, d_prev) = bwd(grads, &blk.out, &prev);
                        for (dp, ds) in d_prev.iter_mut().zip(d_sum.iter()) {
                            *dp += ds;
                        }
                    }
                    input = prev;
                }
                relu_backward(&cache[stem_slots.out.clone()], &mut grads[stem_slots.out.clone()]);
                stem_slots.backward(stem_gn, p, g, cache, grads);
                stem.backward(p, g, &cache[pooled.clone()], &grads[stem_slots.pre.clone()], None);
            }
        }
    }

    pub fn param_count(&self, layout: &ParamLayout) -> usize {
        layout
            .tensors()
            .iter()
            .filter(|t| t.name.starts_with("encoder."))
            .map(|t| t.len())
            .sum()
    }
}
