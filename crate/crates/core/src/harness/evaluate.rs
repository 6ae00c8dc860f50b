use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::MapSpec;
use crate::error::{Error, Result};
use crate::navsim::{compute_spl, sample_episode, success_rate, Action, Episode, GridMap, NavConfig, NavEnv, Observation, Pose};
use crate::policy::{ActMode, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub checkpoint_step: u64,
    pub success_rate: f64,
    pub spl: f64,
    pub episodes: usize,
}

pub type MapSet = Arc<Vec<Arc<GridMap>>>;

fn generate(seeds: std::ops::Range<u64>, spec: &MapSpec) -> Result<MapSet> {
    let maps = seeds
        .map(|s| GridMap::generate(s, spec.width, spec.height, spec.obstacle_density).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(maps))
}

/// `(train, eval)` map sets for a split.
pub fn build_maps(spec: &MapSpec) -> Result<(MapSet, MapSet)> {
    Ok((generate(spec.train_seeds(), spec)?, generate(spec.eval_seeds(), spec)?))
}

/// A fixed list of held-out episodes together with their maps.
#[derive(Debug, Clone)]
pub struct EvalSet {
    maps: HashMap<String, Arc<GridMap>>,
    pub episodes: Vec<Episode>,
}

const EVAL_STREAM: u64 = 0x5EED_0E7A_1000_0001;

impl EvalSet {
    pub fn new(maps: &[Arc<GridMap>], episodes: Vec<Episode>) -> Result<Self> {
        let maps: HashMap<String, Arc<GridMap>> = maps.iter().map(|m| (m.id().to_string(), m.clone())).collect();
        if let Some(e) = episodes.iter().find(|e| !maps.contains_key(&e.map_id)) {
            return Err(Error::InvalidMap(format!("episode refers to unknown map {}", e.map_id)));
        }
        Ok(Self { maps, episodes })
    }

    /// `count` episodes cycling over the split's evaluation maps. The list
    /// depends only on the map spec, never on the training seed.
    pub fn from_spec(spec: &MapSpec, count: usize) -> Result<Self> {
        let maps = generate(spec.eval_seeds(), spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ EVAL_STREAM);
        let episodes = (0..count)
            .map(|i| sample_episode(&maps[i % maps.len()], &mut rng, spec.min_geodesic, spec.max_steps))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&maps, episodes)
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn env(&self, i: usize, config: NavConfig) -> Result<NavEnv> {
        let ep = &self.episodes[i];
        NavEnv::new(config, self.maps[&ep.map_id].clone(), ep.clone())
    }

    pub fn to_file(&self) -> EpisodeFile {
        let mut ids: Vec<&String> = self.maps.keys().collect();
        ids.sort();
        EpisodeFile {
            maps: ids
                .into_iter()
                .map(|id| MapEntry { id: id.clone(), grid: self.maps[id].to_text() })
                .collect(),
            episodes: self
                .episodes
                .iter()
                .map(|e| EpisodeEntry {
                    map_id: e.map_id.clone(),
                    start: [e.start.x, e.start.y, e.start.heading],
                    goal: [e.goal.0, e.goal.1],
                    max_steps: e.max_steps,
                })
                .collect(),
        }
    }
}

/// On-disk episode list (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeFile {
    pub maps: Vec<MapEntry>,
    pub episodes: Vec<EpisodeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEntry {
    pub id: String,
    /// Rows of `.` (free) and `#` (blocked), first row at `y = 0`.
    pub grid: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeEntry {
    pub map_id: String,
    /// `[x, y, heading]`, heading in radians.
    pub start: [f64; 3],
    pub goal: [f64; 2],
    pub max_steps: usize,
}

impl EpisodeFile {
    pub fn into_set(self) -> Result<EvalSet> {
        let maps = self
            .maps
            .into_iter()
            .map(|m| GridMap::parse(m.id, &m.grid).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let by_id: HashMap<&str, &Arc<GridMap>> = maps.iter().map(|m| (m.id(), m)).collect();
        let episodes = self
            .episodes
            .iter()
            .map(|e| {
                let map = by_id
                    .get(e.map_id.as_str())
                    .ok_or_else(|| Error::InvalidMap(format!("episode refers to unknown map {}", e.map_id)))?;
                Episode::new(map, Pose::new(e.start[0], e.start[1], e.start[2]), (e.goal[0], e.goal[1]), e.max_steps)
            })
            .collect::<Result<Vec<_>>>()?;
        EvalSet::new(&maps, episodes)
    }
}

/// Anything that can drive an evaluation episode. Agents see the environment
/// handle so scripted baselines can plan on the map; learned agents use only
/// the observation.
pub trait EvalAgent {
    fn begin_episode(&mut self, env: &NavEnv);
    fn act(&mut self, obs: &Observation, env: &NavEnv) -> Result<Action>;
}

/// Greedy rollout of a frozen copy of a policy.
pub struct PolicyAgent {
    policy: Policy,
    hidden: Vec<f64>,
    prev_action: Option<usize>,
    mask: f64,
    rng: ChaCha8Rng,
}

impl PolicyAgent {
    pub fn new(policy: &Policy) -> Self {
        Self {
            hidden: policy.zero_state(),
            policy: policy.clone(),
            prev_action: None,
            mask: 0.0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }
}

impl EvalAgent for PolicyAgent {
    fn begin_episode(&mut self, _env: &NavEnv) {
        self.hidden.fill(0.0);
        self.prev_action = None;
        self.mask = 0.0;
    }

    fn act(&mut self, obs: &Observation, _env: &NavEnv) -> Result<Action> {
        let out = self.policy.act(obs, self.prev_action, &mut self.hidden, self.mask, ActMode::Greedy, &mut self.rng, None)?;
        self.prev_action = Some(out.action);
        self.mask = 1.0;
        Ok(Action::from_index(out.action).expect("policy emits valid actions"))
    }
}

/// Stops immediately.
pub struct StopAgent;

impl EvalAgent for StopAgent {
    fn begin_episode(&mut self, _env: &NavEnv) {}

    fn act(&mut self, _obs: &Observation, _env: &NavEnv) -> Result<Action> {
        Ok(Action::Stop)
    }
}

/// Map-aware baseline: heads straight for the goal when the segment is clear,
/// otherwise for the visible nearby cell with the smallest estimated remaining
/// distance, and stops inside the success radius. When a forward step would
/// hit a wall it turns left until the way ahead is free and takes that step.
#[derive(Debug, Clone, Default)]
pub struct ScriptedOracle {
    escaping: bool,
}

const ORACLE_RADIUS: i64 = 4;

fn segment_clear(map: &GridMap, from: (f64, f64), to: (f64, f64)) -> bool {
    let len = (to.0 - from.0).hypot(to.1 - from.1);
    let n = (len / (map.cell_size() / 8.0)).ceil().max(1.0) as usize;
    (0..=n).all(|k| {
        let f = k as f64 / n as f64;
        map.is_free_point(from.0 + f * (to.0 - from.0), from.1 + f * (to.1 - from.1))
    })
}

impl ScriptedOracle {
    fn target(env: &NavEnv) -> (f64, f64) {
        let map = env.map();
        let pose = env.pose();
        let goal = env.episode().goal;
        if segment_clear(map, (pose.x, pose.y), goal) {
            return goal;
        }
        let field = env.goal_distance_field();
        let here = map.cell_of(pose.x, pose.y).expect("agent stays on the map");
        let (hx, hy) = map.coords(here);
        let mut best: Option<((f64, f64), f64)> = None;
        for dy in -ORACLE_RADIUS..=ORACLE_RADIUS {
            for dx in -ORACLE_RADIUS..=ORACLE_RADIUS {
                let (cx, cy) = (hx as i64 + dx, hy as i64 + dy);
                if map.is_blocked(cx, cy) {
                    continue;
                }
                let cell = map.index(cx as usize, cy as usize);
                let Some(rest) = field[cell] else { continue };
                let centre = map.cell_center(cell);
                // The whole forward step towards the cell must stay free too.
                let (ux, uy) = (centre.0 - pose.x, centre.1 - pose.y);
                let reach = ux.hypot(uy).max(env.config().forward_step) / ux.hypot(uy).max(1e-9);
                if !segment_clear(map, (pose.x, pose.y), (pose.x + ux * reach, pose.y + uy * reach)) {
                    continue;
                }
                let cost = rest + (centre.0 - pose.x).hypot(centre.1 - pose.y);
                if best.is_none_or(|(_, c)| cost < c) {
                    best = Some((centre, cost));
                }
            }
        }
        best.map_or_else(|| map.cell_center(here), |(c, _)| c)
    }
}

impl EvalAgent for ScriptedOracle {
    fn begin_episode(&mut self, _env: &NavEnv) {
        self.escaping = false;
    }

    fn act(&mut self, _obs: &Observation, env: &NavEnv) -> Result<Action> {
        let pose = env.pose();
        let goal = env.episode().goal;
        if (goal.0 - pose.x).hypot(goal.1 - pose.y) <= env.config().success_radius {
            return Ok(Action::Stop);
        }
        let step = env.config().forward_step;
        let (sin, cos) = pose.heading.sin_cos();
        let ahead_free = env.map().is_free_point(pose.x + step * cos, pose.y + step * sin);
        if self.escaping {
            self.escaping = !ahead_free;
            return Ok(if ahead_free { Action::MoveForward } else { Action::TurnLeft });
        }
        let target = Self::target(env);
        let desired = (target.1 - pose.y).atan2(target.0 - pose.x);
        let mut diff = (desired - pose.heading).rem_euclid(2.0 * PI);
        if diff > PI {
            diff -= 2.0 * PI;
        }
        let half_turn = env.config().turn_angle.to_radians() / 2.0;
        Ok(if diff > half_turn {
            Action::TurnLeft
        } else if diff < -half_turn {
            Action::TurnRight
        } else if ahead_free {
            Action::MoveForward
        } else {
            self.escaping = true;
            Action::TurnLeft
        })
    }
}

/// Runs every episode to termination and reports success rate and SPL.
pub fn evaluate<A: EvalAgent + ?Sized>(agent: &mut A, set: &EvalSet, config: NavConfig, step: u64) -> Result<EvalReport> {
    let mut outcomes = Vec::with_capacity(set.len());
    for i in 0..set.len() {
        let mut env = set.env(i, config)?;
        agent.begin_episode(&env);
        let mut obs = env.observe();
        while !env.is_done() {
            let action = agent.act(&obs, &env)?;
            obs = env.step(action)?.observation;
        }
        outcomes.push(env.outcome());
    }
    Ok(EvalReport {
        checkpoint_step: step,
        success_rate: success_rate(&outcomes)?,
        spl: compute_spl(&outcomes)?,
        episodes: outcomes.len(),
    })
}

/// Greedy evaluation of a policy; the policy itself is left untouched.
pub fn evaluate_policy(policy: &Policy, set: &EvalSet, config: NavConfig, step: u64) -> Result<EvalReport> {
    evaluate(&mut PolicyAgent::new(policy), set, config, step)
}
