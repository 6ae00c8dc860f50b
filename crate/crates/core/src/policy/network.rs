use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::encoder::{Encoder, EncoderKind};
use super::init::{fan_in_uniform, orthogonal};
use super::layers::{GruCache, GruCell, Linear};
use super::layout::ParamLayout;
use super::obs_norm::RunningObsStats;
use crate::error::{Error, Result};
use crate::navsim::{Action, Observation};
use crate::rollout::TransitionBatch;

pub const N_ACTIONS: usize = Action::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub encoder: EncoderKind,
    pub hidden_size: usize,
    pub rnn_layers: usize,
    pub goal_embed_dim: usize,
    pub action_embed_dim: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderKind::Mlp,
            hidden_size: 128,
            rnn_layers: 1,
            goal_embed_dim: 32,
            action_embed_dim: 8,
        }
    }
}

/// Offsets of one step's activations inside a step cache.
#[derive(Debug, Clone)]
struct StepLayout {
    enc: usize,
    x: usize,
    layers: usize,
    logits: usize,
    logp: usize,
    probs: usize,
    value: usize,
    len: usize,
}

const H_IN: usize = 0;
const R: usize = 1;
const Z: usize = 2;
const N: usize = 3;
const GH_N: usize = 4;
const H_OUT: usize = 5;

/// Architecture of the recurrent actor-critic. Parameters live outside in a
/// flat vector laid out by [`Network::layout`].
#[derive(Debug, Clone)]
pub struct Network {
    config: PolicyConfig,
    n_rays: usize,
    layout: ParamLayout,
    encoder: Encoder,
    goal_proj: Linear,
    action_embed: usize,
    grus: Vec<GruCell>,
    actor: Linear,
    critic: Linear,
    in_dim: usize,
    step: StepLayout,
}

/// Learnable tensors plus running observation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub values: Vec<f64>,
    pub obs_stats: RunningObsStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    /// Sample from the categorical and fold the observation into the running
    /// statistics.
    Train,
    /// Take the most likely action; statistics stay untouched.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDistribution {
    pub probs: [f64; N_ACTIONS],
}

impl ActionDistribution {
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..N_ACTIONS {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding left a sliver above the cumulative sum.
        (0..N_ACTIONS).rev().find(|&i| self.probs[i] > 0.0).unwrap_or(N_ACTIONS - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActOutput {
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub dist: ActionDistribution,
}

/// Per-step outputs of a sequence replay.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEval {
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub entropies: Vec<f64>,
    /// Mean of `entropies`.
    pub entropy: f64,
}

/// Forward activations of a whole batch, kept for the backward pass.
pub struct BatchForward {
    caches: Vec<f64>,
    pub eval: SequenceEval,
}

/// Reusable scratch for stepping and backpropagation.
#[derive(Debug, Clone)]
pub struct Workspace {
    gates: Vec<f64>,
    dx: Vec<f64>,
    d_above: Vec<f64>,
    dh_out: Vec<f64>,
    dh_in: Vec<f64>,
    gru_scratch: Vec<f64>,
    enc_grads: Vec<f64>,
    d_logits: Vec<f64>,
    dh: Vec<f64>,
    cache: Vec<f64>,
}

fn softmax_into(logits: &[f64], logp: &mut [f64], probs: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    for i in 0..logits.len() {
        logp[i] = logits[i] - lse;
        probs[i] = logp[i].exp();
    }
}

fn goal_features((r, theta): (f64, f64)) -> [f64; 3] {
    [r, theta.cos(), theta.sin()]
}

impl Network {
    pub fn new(config: PolicyConfig, n_rays: usize) -> Result<Self> {
        if config.hidden_size == 0
            || config.goal_embed_dim == 0
            || config.action_embed_dim == 0
            || n_rays == 0
        {
            return Err(Error::Config("policy dimensions must be positive".into()));
        }
        if !(1..=2).contains(&config.rnn_layers) {
            return Err(Error::Config(format!(
                "rnn_layers must be 1 or 2, got {}",
                config.rnn_layers
            )));
        }
        let h = config.hidden_size;
        let mut layout = ParamLayout::default();
        let encoder = Encoder::build(config.encoder, n_rays, h, &mut layout)?;
        let goal_proj = Linear::new(&mut layout, "goal_proj", 3, config.goal_embed_dim, false);
        let action_embed =
            layout.add("action_embed.weight", &[N_ACTIONS + 1, config.action_embed_dim]);
        let in_dim = h + config.goal_embed_dim + config.action_embed_dim;
        let grus = (0..config.rnn_layers)
            .map(|l| GruCell::new(&mut layout, &format!("rnn.l{l}"), if l == 0 { in_dim } else { h }, h))
            .collect();
        let actor = Linear::new(&mut layout, "actor", h, N_ACTIONS, true);
        let critic = Linear::new(&mut layout, "critic", h, 1, true);

        let enc = 0;
        let x = enc + encoder.cache_len();
        let layers = x + in_dim;
        let logits = layers + 6 * h * config.rnn_layers;
        let logp = logits + N_ACTIONS;
        let probs = logp + N_ACTIONS;
        let value = probs + N_ACTIONS;
        let step = StepLayout { enc, x, layers, logits, logp, probs, value, len: value + 1 };
        Ok(Self { config, n_rays, layout, encoder, goal_proj, action_embed, grus, actor, critic, in_dim, step })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn n_rays(&self) -> usize {
        self.n_rays
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn num_params(&self) -> usize {
        self.layout.len()
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    /// Recurrent state size per environment (`layers x hidden`).
    pub fn state_size(&self) -> usize {
        self.config.rnn_layers * self.config.hidden_size
    }

    pub fn workspace(&self) -> Workspace {
        let h = self.config.hidden_size;
        Workspace {
            gates: vec![0.0; 6 * h],
            dx: vec![0.0; self.in_dim],
            d_above: vec![0.0; h],
            dh_out: vec![0.0; h],
            dh_in: vec![0.0; h],
            gru_scratch: vec![0.0; 6 * h],
            enc_grads: vec![0.0; self.encoder.cache_len()],
            d_logits: vec![0.0; N_ACTIONS],
            dh: vec![0.0; self.state_size()],
            cache: vec![0.0; self.step.len],
        }
    }

    /// Orthogonal recurrent weights, fan-in scaled uniform elsewhere (gain
    /// sqrt(2) before ReLUs, 0.01 on the actor head, 1 on the critic head),
    /// zero biases, unit group-norm scales and standard-normal action
    /// embeddings.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.layout.len()];
        let h = self.config.hidden_size;
        for t in self.layout.tensors() {
            let range = t.range();
            let name = t.name.as_str();
            let fan_in: usize = t.dims[1..].iter().product::<usize>().max(1);
            if name.ends_with(".gamma") {
                p[range].fill(1.0);
            } else if name.ends_with(".bias") || name.ends_with(".beta") || name.contains(".bias_") {
                p[range].fill(0.0);
            } else if name.starts_with("rnn.") {
                let cols = t.dims[1];
                for gate in 0..3 {
                    let block = orthogonal(rng, h, cols, 1.0);
                    let start = t.offset + gate * h * cols;
                    p[start..start + h * cols].copy_from_slice(&block);
                }
            } else if name == "action_embed.weight" {
                for v in &mut p[range] {
                    *v = rng.sample(StandardNormal);
                }
            } else if name == "actor.weight" {
                fan_in_uniform(rng, &mut p[range], fan_in, 0.01);
            } else if name == "critic.weight" || name == "goal_proj.weight" {
                fan_in_uniform(rng, &mut p[range], fan_in, 1.0);
            } else {
                fan_in_uniform(rng, &mut p[range], fan_in, std::f64::consts::SQRT_2);
            }
        }
        p
    }

    fn layer_slot(&self, l: usize, which: usize) -> std::ops::Range<usize> {
        let h = self.config.hidden_size;
        let start = self.step.layers + (l * 6 + which) * h;
        start..start + h
    }

    /// Runs one step. `h_prev` is the incoming state (`layers x hidden`); it is
    /// multiplied by `mask` before use and the previous action is dropped when
    /// `mask` is 0. The new state is left in the cache.
    #[allow(clippy::too_many_arguments)]
    fn forward_step(
        &self,
        p: &[f64],
        depth: &[f64],
        goal: (f64, f64),
        prev_action: Option<usize>,
        h_prev: &[f64],
        mask: f64,
        cache: &mut [f64],
        gates: &mut [f64],
    ) {
        let h = self.config.hidden_size;
        let s = &self.step;
        self.encoder.forward(p, depth, &mut cache[s.enc..s.enc + self.encoder.cache_len()]);
        {
            let (enc, rest) = cache.split_at_mut(s.x);
            let x = &mut rest[..self.in_dim];
            x[..h].copy_from_slice(self.encoder.output(&enc[s.enc..]));
            let g = self.config.goal_embed_dim;
            self.goal_proj.forward(p, &goal_features(goal), &mut x[h..h + g]);
            let a = self.config.action_embed_dim;
            let row = if mask == 0.0 { 0 } else { prev_action.map_or(0, |a| a + 1) };
            let emb = self.action_embed + row * a;
            x[h + g..].copy_from_slice(&p[emb..emb + a]);
        }
        for (l, gru) in self.grus.iter().enumerate() {
            let hin = self.layer_slot(l, H_IN);
            for k in 0..h {
                cache[hin.start + k] = mask * h_prev[l * h + k];
            }
            let (before, rest) = cache.split_at_mut(hin.start + h);
            let h_in = &before[hin.clone()];
            let input = if l == 0 {
                &before[s.x..s.x + self.in_dim]
            } else {
                &before[self.layer_slot(l - 1, H_OUT)]
            };
            let (r, rest) = rest.split_at_mut(h);
            let (z, rest) = rest.split_at_mut(h);
            let (n, rest) = rest.split_at_mut(h);
            let (gh_n, rest) = rest.split_at_mut(h);
            gru.forward(p, input, h_in, gates, r, z, n, gh_n, &mut rest[..h]);
        }
        let top = self.layer_slot(self.grus.len() - 1, H_OUT);
        let (before, rest) = cache.split_at_mut(s.logits);
        let h_top = &before[top];
        let (logits, rest) = rest.split_at_mut(N_ACTIONS);
        self.actor.forward(p, h_top, logits);
        let (logp, rest) = rest.split_at_mut(N_ACTIONS);
        let (probs, rest) = rest.split_at_mut(N_ACTIONS);
        softmax_into(logits, logp, probs);
        self.critic.forward(p, h_top, &mut rest[..1]);
    }

    fn copy_state_out(&self, cache: &[f64], h_out: &mut [f64]) {
        let h = self.config.hidden_size;
        for l in 0..self.grus.len() {
            h_out[l * h..(l + 1) * h].copy_from_slice(&cache[self.layer_slot(l, H_OUT)]);
        }
    }

    /// Backpropagates one step. On entry `dh` holds the gradient with respect
    /// to this step's output state; on exit, with respect to the previous
    /// step's output state.
    #[allow(clippy::too_many_arguments)]
    fn backward_step(
        &self,
        p: &[f64],
        g: &mut [f64],
        depth: &[f64],
        goal: (f64, f64),
        prev_action: Option<usize>,
        mask: f64,
        cache: &[f64],
        d_value: f64,
        ws: &mut Workspace,
    ) {
        let h = self.config.hidden_size;
        let top = self.layer_slot(self.grus.len() - 1, H_OUT);
        ws.d_above.fill(0.0);
        self.actor.backward(p, g, &cache[top.clone()], &ws.d_logits, Some(&mut ws.d_above));
        self.critic.backward(p, g, &cache[top], &[d_value], Some(&mut ws.d_above));
        for (l, gru) in self.grus.iter().enumerate().rev() {
            for k in 0..h {
                ws.dh_out[k] = ws.dh[l * h + k] + ws.d_above[k];
            }
            let input: &[f64] = if l == 0 {
                &cache[self.step.x..self.step.x + self.in_dim]
            } else {
                &cache[self.layer_slot(l - 1, H_OUT)]
            };
            let gc = GruCache {
                h_in: &cache[self.layer_slot(l, H_IN)],
                r: &cache[self.layer_slot(l, R)],
                z: &cache[self.layer_slot(l, Z)],
                n: &cache[self.layer_slot(l, N)],
                gh_n: &cache[self.layer_slot(l, GH_N)],
            };
            let dx: &mut [f64] = if l == 0 { &mut ws.dx } else { &mut ws.d_above };
            dx.fill(0.0);
            gru.backward(p, g, input, &gc, &ws.dh_out, &mut ws.gru_scratch, dx, &mut ws.dh_in);
            for k in 0..h {
                ws.dh[l * h + k] = mask * ws.dh_in[k];
            }
        }
        let gdim = self.config.goal_embed_dim;
        let enc_cache = &cache[self.step.enc..self.step.enc + self.encoder.cache_len()];
        self.encoder.backward(p, g, depth, enc_cache, &ws.dx[..h], &mut ws.enc_grads);
        self.goal_proj.backward(p, g, &goal_features(goal), &ws.dx[h..h + gdim], None);
        let a = self.config.action_embed_dim;
        let row = if mask == 0.0 { 0 } else { prev_action.map_or(0, |a| a + 1) };
        let emb = self.action_embed + row * a;
        for k in 0..a {
            g[emb + k] += ws.dx[h + gdim + k];
        }
    }

    fn read_dist(&self, cache: &[f64]) -> ActionDistribution {
        let mut probs = [0.0; N_ACTIONS];
        probs.copy_from_slice(&cache[self.step.probs..self.step.probs + N_ACTIONS]);
        ActionDistribution { probs }
    }

    /// Single-step action selection on an already normalized depth vector.
    /// Updates `hidden` in place.
    #[allow(clippy::too_many_arguments)]
    pub fn act_normalized<R: Rng + ?Sized>(
        &self,
        p: &[f64],
        depth: &[f64],
        goal: (f64, f64),
        prev_action: Option<usize>,
        hidden: &mut [f64],
        mask: f64,
        greedy: bool,
        rng: &mut R,
        ws: &mut Workspace,
    ) -> Result<ActOutput> {
        let mut cache = std::mem::take(&mut ws.cache);
        self.forward_step(p, depth, goal, prev_action, hidden, mask, &mut cache, &mut ws.gates);
        let dist = self.read_dist(&cache);
        let value = cache[self.step.value];
        let logp = &cache[self.step.logp..self.step.logp + N_ACTIONS];
        if !value.is_finite() || logp.iter().any(|l| !l.is_finite()) {
            ws.cache = cache;
            return Err(Error::Divergence("non-finite policy output".into()));
        }
        let action = if greedy { dist.argmax() } else { dist.sample(rng) };
        let log_prob = logp[action];
        self.copy_state_out(&cache, hidden);
        ws.cache = cache;
        Ok(ActOutput { action, log_prob, value, dist })
    }

    /// Critic value for an observation without advancing `hidden`.
    #[allow(clippy::too_many_arguments)]
    pub fn value_normalized(
        &self,
        p: &[f64],
        depth: &[f64],
        goal: (f64, f64),
        prev_action: Option<usize>,
        hidden: &[f64],
        mask: f64,
        ws: &mut Workspace,
    ) -> f64 {
        let mut cache = std::mem::take(&mut ws.cache);
        self.forward_step(p, depth, goal, prev_action, hidden, mask, &mut cache, &mut ws.gates);
        let v = cache[self.step.value];
        ws.cache = cache;
        v
    }

    fn check_batch(&self, batch: &TransitionBatch) -> Result<()> {
        let n = batch.num_steps();
        let ok = batch.n_rays == self.n_rays
            && batch.state_size == self.state_size()
            && batch.depth.len() == n * self.n_rays
            && batch.goal.len() == n
            && batch.actions.len() == n
            && batch.masks.len() == n
            && batch.start_hidden.len() == batch.num_seqs() * self.state_size()
            && batch.start_prev_action.len() == batch.num_seqs()
            && batch.actions.iter().all(|&a| a < N_ACTIONS);
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("transition batch does not match the network".into()))
        }
    }

    fn prev_action_at(batch: &TransitionBatch, seq: usize, t: usize) -> Option<usize> {
        if t == 0 {
            batch.start_prev_action[seq]
        } else {
            Some(batch.actions[seq * batch.seq_len + t - 1])
        }
    }

    /// Replays every sequence from its stored start state, applying the step
    /// masks, and keeps all activations.
    pub fn forward_batch(&self, p: &[f64], batch: &TransitionBatch, ws: &mut Workspace) -> Result<BatchForward> {
        self.check_batch(batch)?;
        let n = batch.num_steps();
        let sl = self.step.len;
        let ss = self.state_size();
        let mut caches = vec![0.0; n * sl];
        let mut log_probs = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut entropies = Vec::with_capacity(n);
        let mut state = vec![0.0; ss];
        for seq in 0..batch.num_seqs() {
            state.copy_from_slice(&batch.start_hidden[seq * ss..(seq + 1) * ss]);
            for t in 0..batch.seq_len {
                let i = seq * batch.seq_len + t;
                let cache = &mut caches[i * sl..(i + 1) * sl];
                self.forward_step(
                    p,
                    &batch.depth[i * self.n_rays..(i + 1) * self.n_rays],
                    batch.goal[i],
                    Self::prev_action_at(batch, seq, t),
                    &state,
                    batch.masks[i],
                    cache,
                    &mut ws.gates,
                );
                self.copy_state_out(cache, &mut state);
                let dist = self.read_dist(cache);
                log_probs.push(cache[self.step.logp + batch.actions[i]]);
                values.push(cache[self.step.value]);
                entropies.push(dist.entropy());
            }
        }
        let entropy = if n == 0 { 0.0 } else { entropies.iter().sum::<f64>() / n as f64 };
        Ok(BatchForward { caches, eval: SequenceEval { log_probs, values, entropies, entropy } })
    }

    #[allow(clippy::too_many_arguments)]
    /// Accumulates into `g` the gradient of
    /// `sum_i d_log_prob[i] * log_prob_i + d_value[i] * value_i + d_entropy[i] * entropy_i`.
    pub fn backward_batch(
        &self,
        p: &[f64],
        batch: &TransitionBatch,
        fwd: &BatchForward,
        d_log_prob: &[f64],
        d_value: &[f64],
        d_entropy: &[f64],
        g: &mut [f64],
        ws: &mut Workspace,
    ) {
        let sl = self.step.len;
        for seq in 0..batch.num_seqs() {
            ws.dh.fill(0.0);
            for t in (0..batch.seq_len).rev() {
                let i = seq * batch.seq_len + t;
                let cache = &fwd.caches[i * sl..(i + 1) * sl];
                let probs = &cache[self.step.probs..self.step.probs + N_ACTIONS];
                let logp = &cache[self.step.logp..self.step.logp + N_ACTIONS];
                let ent = fwd.eval.entropies[i];
                let a = batch.actions[i];
                for j in 0..N_ACTIONS {
                    let onehot = if j == a { 1.0 } else { 0.0 };
                    ws.d_logits[j] = d_log_prob[i] * (onehot - probs[j])
                        - d_entropy[i] * probs[j] * (logp[j] + ent);
                }
                self.backward_step(
                    p,
                    g,
                    &batch.depth[i * self.n_rays..(i + 1) * self.n_rays],
                    batch.goal[i],
                    Self::prev_action_at(batch, seq, t),
                    batch.masks[i],
                    cache,
                    d_value[i],
                    ws,
                );
            }
        }
    }
}

/// Network plus its parameters: the unit that acts and gets optimized.
#[derive(Debug, Clone)]
pub struct Policy {
    pub net: Network,
    pub params: PolicyParams,
    ws: Workspace,
}

impl Policy {
    pub fn new<R: Rng + ?Sized>(config: PolicyConfig, n_rays: usize, rng: &mut R) -> Result<Self> {
        let net = Network::new(config, n_rays)?;
        let values = net.init_params(rng);
        Ok(Self::from_parts(net, PolicyParams { values, obs_stats: RunningObsStats::new(n_rays) }))
    }

    pub fn from_parts(net: Network, params: PolicyParams) -> Self {
        let ws = net.workspace();
        Self { net, params, ws }
    }

    pub fn state_size(&self) -> usize {
        self.net.state_size()
    }

    pub fn zero_state(&self) -> Vec<f64> {
        vec![0.0; self.net.state_size()]
    }

    /// Normalizes the observation (folding it into the running statistics in
    /// [`ActMode::Train`]), then steps the recurrent core.
    ///
    /// `normalized_out`, when given, receives the depth vector the encoder saw.
    #[allow(clippy::too_many_arguments)]
    pub fn act<R: Rng + ?Sized>(
        &mut self,
        obs: &Observation,
        prev_action: Option<usize>,
        hidden: &mut [f64],
        mask: f64,
        mode: ActMode,
        rng: &mut R,
        normalized_out: Option<&mut [f64]>,
    ) -> Result<ActOutput> {
        if mode == ActMode::Train {
            self.params.obs_stats.update(&obs.depth);
        }
        let mut depth = vec![0.0; obs.depth.len()];
        self.params.obs_stats.normalize_into(&obs.depth, &mut depth);
        if let Some(out) = normalized_out {
            out.copy_from_slice(&depth);
        }
        self.net.act_normalized(
            &self.params.values,
            &depth,
            obs.goal_polar,
            prev_action,
            hidden,
            mask,
            mode == ActMode::Greedy,
            rng,
            &mut self.ws,
        )
    }

    /// Critic value of an observation under frozen statistics; `hidden` is not
    /// advanced.
    pub fn value(&mut self, obs: &Observation, prev_action: Option<usize>, hidden: &[f64], mask: f64) -> f64 {
        let mut depth = vec![0.0; obs.depth.len()];
        self.params.obs_stats.normalize_into(&obs.depth, &mut depth);
        self.net.value_normalized(
            &self.params.values,
            &depth,
            obs.goal_polar,
            prev_action,
            hidden,
            mask,
            &mut self.ws,
        )
    }

    pub fn parts_mut(&mut self) -> (&Network, &mut PolicyParams, &mut Workspace) {
        (&self.net, &mut self.params, &mut self.ws)
    }

    pub fn evaluate_sequences(&mut self, batch: &TransitionBatch) -> Result<SequenceEval> {
        Ok(self.net.forward_batch(&self.params.values, batch, &mut self.ws)?.eval)
    }

    pub fn forward_batch(&mut self, batch: &TransitionBatch) -> Result<BatchForward> {
        self.net.forward_batch(&self.params.values, batch, &mut self.ws)
    }

    pub fn backward_batch(
        &mut self,
        batch: &TransitionBatch,
        fwd: &BatchForward,
        d_log_prob: &[f64],
        d_value: &[f64],
        d_entropy: &[f64],
        g: &mut [f64],
    ) {
        self.net.backward_batch(&self.params.values, batch, fwd, d_log_prob, d_value, d_entropy, g, &mut self.ws)
    }

    /// Linear map of `[r, cos θ, sin θ]` through the goal projection.
    pub fn embed_goal(&self, goal_polar: (f64, f64)) -> Vec<f64> {
        let mut out = vec![0.0; self.net.config.goal_embed_dim];
        self.net.goal_proj.forward(&self.params.values, &goal_features(goal_polar), &mut out);
        out
    }

    pub fn goal_features(goal_polar: (f64, f64)) -> [f64; 3] {
        goal_features(goal_polar)
    }
}
