//! Versioned little-endian binary snapshot of a training run.
//!
//! Layout: magic, version, policy config, ray count, training config (TOML
//! text), total steps, every parameter tensor (name, dims, values),
//! observation statistics, Adam state, advantage moments and the minibatch
//! shuffling stream position. All floats are 64-bit.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use rand_chacha::ChaCha8Rng;

use crate::advantage::RunningMoments;
use crate::error::{Error, Result};
use crate::policy::{EncoderKind, Network, Policy, PolicyConfig, PolicyParams, RunningObsStats};
use crate::ppo::{Adam, AdamConfig};

const MAGIC: &[u8; 8] = b"PNAVCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub train_config: String,
    pub total_steps: u64,
    pub policy_config: PolicyConfig,
    pub n_rays: usize,
    pub params: PolicyParams,
    pub adam: Adam,
    pub moments: RunningMoments,
    pub shuffle_rng: ChaCha8Rng,
}

fn encoder_code(k: EncoderKind) -> u8 {
    match k {
        EncoderKind::Mlp => 0,
        EncoderKind::SimpleCnn => 1,
        EncoderKind::ResidualGn => 2,
    }
}

fn encoder_from_code(c: u8) -> Result<EncoderKind> {
    EncoderKind::ALL.get(c as usize).copied().ok_or_else(|| Error::Checkpoint(format!("unknown encoder code {c}")))
}

fn put_len<W: Write>(w: &mut W, n: usize) -> Result<()> {
    Ok(w.write_u64::<LE>(n as u64)?)
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_len(w, s.len())?;
    Ok(w.write_all(s.as_bytes())?)
}

fn put_f64s<W: Write>(w: &mut W, xs: &[f64]) -> Result<()> {
    put_len(w, xs.len())?;
    for &x in xs {
        w.write_f64::<LE>(x)?;
    }
    Ok(())
}

const MAX_LEN: u64 = 1 << 32;

fn get_len<R: Read>(r: &mut R) -> Result<usize> {
    let n = r.read_u64::<LE>()?;
    if n > MAX_LEN {
        return Err(Error::Checkpoint(format!("implausible length {n}")));
    }
    Ok(n as usize)
}

fn get_str<R: Read>(r: &mut R) -> Result<String> {
    let n = get_len(r)?;
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Checkpoint("string is not UTF-8".into()))
}

fn get_f64s<R: Read>(r: &mut R) -> Result<Vec<f64>> {
    let n = get_len(r)?;
    (0..n).map(|_| Ok(r.read_f64::<LE>()?)).collect()
}

impl Checkpoint {
    pub fn policy(&self) -> Result<Policy> {
        let net = Network::new(self.policy_config, self.n_rays)?;
        Ok(Policy::from_parts(net, self.params.clone()))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let net = Network::new(self.policy_config, self.n_rays)?;
        if self.params.values.len() != net.num_params() {
            return Err(Error::Checkpoint("parameter count does not match the config".into()));
        }
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(VERSION)?;
        let c = &self.policy_config;
        w.write_u8(encoder_code(c.encoder))?;
        for n in [c.hidden_size, c.rnn_layers, c.goal_embed_dim, c.action_embed_dim, self.n_rays] {
            put_len(w, n)?;
        }
        put_str(w, &self.train_config)?;
        w.write_u64::<LE>(self.total_steps)?;

        put_len(w, net.layout().tensors().len())?;
        for t in net.layout().tensors() {
            put_str(w, &t.name)?;
            put_len(w, t.dims.len())?;
            for &d in &t.dims {
                put_len(w, d)?;
            }
            for &x in &self.params.values[t.range()] {
                w.write_f64::<LE>(x)?;
            }
        }

        let s = &self.params.obs_stats;
        w.write_u64::<LE>(s.count)?;
        put_f64s(w, &s.mean)?;
        put_f64s(w, &s.m2)?;

        let a = &self.adam;
        for x in [a.config.beta1, a.config.beta2, a.config.eps] {
            w.write_f64::<LE>(x)?;
        }
        w.write_u64::<LE>(a.t)?;
        put_f64s(w, &a.m)?;
        put_f64s(w, &a.v)?;

        let m = &self.moments;
        for x in [m.raw_mean, m.raw_var, m.decay] {
            w.write_f64::<LE>(x)?;
        }
        w.write_u64::<LE>(m.updates)?;

        w.write_all(&self.shuffle_rng.get_seed())?;
        w.write_u64::<LE>(self.shuffle_rng.get_stream())?;
        w.write_u128::<LE>(self.shuffle_rng.get_word_pos())?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.read_u32::<LE>()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let encoder = encoder_from_code(r.read_u8()?)?;
        let mut dims = [0usize; 5];
        for d in &mut dims {
            *d = get_len(r)?;
        }
        let policy_config = PolicyConfig {
            encoder,
            hidden_size: dims[0],
            rnn_layers: dims[1],
            goal_embed_dim: dims[2],
            action_embed_dim: dims[3],
        };
        let n_rays = dims[4];
        let train_config = get_str(r)?;
        let total_steps = r.read_u64::<LE>()?;

        let net = Network::new(policy_config, n_rays)?;
        let n_tensors = get_len(r)?;
        if n_tensors != net.layout().tensors().len() {
            return Err(Error::Checkpoint("tensor count does not match the config".into()));
        }
        let mut values = vec![0.0; net.num_params()];
        for t in net.layout().tensors() {
            let name = get_str(r)?;
            let nd = get_len(r)?;
            let dims = (0..nd).map(|_| get_len(r)).collect::<Result<Vec<_>>>()?;
            if name != t.name || dims != t.dims {
                return Err(Error::Checkpoint(format!("tensor {name} {dims:?} where {} {:?} expected", t.name, t.dims)));
            }
            for x in &mut values[t.range()] {
                *x = r.read_f64::<LE>()?;
            }
        }

        let count = r.read_u64::<LE>()?;
        let mean = get_f64s(r)?;
        let m2 = get_f64s(r)?;
        if mean.len() != n_rays || m2.len() != n_rays {
            return Err(Error::Checkpoint("observation statistics have the wrong width".into()));
        }

        let config = AdamConfig { beta1: r.read_f64::<LE>()?, beta2: r.read_f64::<LE>()?, eps: r.read_f64::<LE>()? };
        let t = r.read_u64::<LE>()?;
        let m = get_f64s(r)?;
        let v = get_f64s(r)?;
        if m.len() != values.len() || v.len() != values.len() {
            return Err(Error::Checkpoint("optimizer state has the wrong width".into()));
        }

        let raw_mean = r.read_f64::<LE>()?;
        let raw_var = r.read_f64::<LE>()?;
        let decay = r.read_f64::<LE>()?;
        let updates = r.read_u64::<LE>()?;

        let mut seed = [0u8; 32];
        r.read_exact(&mut seed)?;
        let stream = r.read_u64::<LE>()?;
        let word_pos = r.read_u128::<LE>()?;
        let mut shuffle_rng = <ChaCha8Rng as rand::SeedableRng>::from_seed(seed);
        shuffle_rng.set_stream(stream);
        shuffle_rng.set_word_pos(word_pos);

        Ok(Self {
            train_config,
            total_steps,
            policy_config,
            n_rays,
            params: PolicyParams { values, obs_stats: RunningObsStats { mean, m2, count } },
            adam: Adam { config, m, v, t },
            moments: RunningMoments { raw_mean, raw_var, updates, decay },
            shuffle_rng,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let ck = Self::read_from(&mut bytes).map_err(|e| match e {
            Error::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
                Error::Checkpoint("truncated data".into())
            }
            other => other,
        })?;
        if !bytes.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len())));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_bytes()?)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
