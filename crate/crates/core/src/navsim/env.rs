use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::episode::{Episode, Pose};
use super::geodesic::distance_field;
use super::map::GridMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    MoveForward = 0,
    TurnLeft = 1,
    TurnRight = 2,
    Stop = 3,
}

impl Action {
    pub const COUNT: usize = 4;
    pub const ALL: [Action; 4] =
        [Action::MoveForward, Action::TurnLeft, Action::TurnRight, Action::Stop];

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Egocentric depth rays spread evenly across the field of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub n_rays: usize,
    /// Degrees.
    pub fov: f64,
    pub max_range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self { n_rays: 32, fov: 90.0, max_range: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavConfig {
    pub sensor: SensorConfig,
    pub forward_step: f64,
    /// Degrees.
    pub turn_angle: f64,
    pub success_radius: f64,
    pub slack_penalty: f64,
    pub success_reward: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            sensor: SensorConfig::default(),
            forward_step: 0.25,
            turn_angle: 10.0,
            success_radius: 0.2,
            slack_penalty: 0.01,
            success_reward: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub depth: Vec<f64>,
    /// Goal distance in meters and bearing in `(-π, π]` relative to heading.
    pub goal_polar: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    pub geodesic_to_goal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub success: bool,
    pub path_length: f64,
    pub shortest_path_length: f64,
    pub steps: usize,
}

/// Depth and goal observation for a pose. Pure in its inputs.
pub fn observe(map: &GridMap, pose: &Pose, goal: (f64, f64), sensor: &SensorConfig) -> Observation {
    let n = sensor.n_rays;
    let fov = sensor.fov.to_radians();
    let mut depth = Vec::with_capacity(n);
    for i in 0..n {
        let offset = if n == 1 { 0.0 } else { -fov / 2.0 + fov * i as f64 / (n - 1) as f64 };
        depth.push(cast_ray(map, pose.x, pose.y, pose.heading + offset, sensor.max_range));
    }
    Observation { depth, goal_polar: goal_polar(pose, goal) }
}

/// Marches a ray in steps of a quarter cell and returns the distance of the
/// first sample that lands in a blocked cell, clipped to `max_range`.
pub fn cast_ray(map: &GridMap, x: f64, y: f64, angle: f64, max_range: f64) -> f64 {
    let step = map.cell_size() / 4.0;
    let (dy, dx) = angle.sin_cos();
    let mut k = 1u32;
    loop {
        let d = step * k as f64;
        if d >= max_range {
            return max_range;
        }
        let px = x + dx * d;
        let py = y + dy * d;
        let cx = (px / map.cell_size()).floor() as i64;
        let cy = (py / map.cell_size()).floor() as i64;
        if map.is_blocked(cx, cy) {
            return d;
        }
        k += 1;
    }
}

pub fn goal_polar(pose: &Pose, goal: (f64, f64)) -> (f64, f64) {
    let dx = goal.0 - pose.x;
    let dy = goal.1 - pose.y;
    let r = dx.hypot(dy);
    let mut theta = (dy.atan2(dx) - pose.heading).rem_euclid(2.0 * PI);
    if theta > PI {
        theta -= 2.0 * PI;
    }
    (r, theta)
}

/// One PointGoal episode on a shared map.
#[derive(Debug, Clone)]
pub struct NavEnv {
    config: NavConfig,
    map: Arc<GridMap>,
    episode: Episode,
    goal_distances: Vec<Option<f64>>,
    pose: Pose,
    steps: usize,
    path_length: f64,
    geodesic: f64,
    done: bool,
    success: bool,
}

impl NavEnv {
    pub fn new(config: NavConfig, map: Arc<GridMap>, episode: Episode) -> Result<Self> {
        if episode.map_id != map.id() {
            return Err(Error::InvalidMap(format!(
                "episode for map {} given map {}",
                episode.map_id,
                map.id()
            )));
        }
        let goal_cell = map
            .cell_of(episode.goal.0, episode.goal.1)
            .filter(|&c| !map.is_blocked_index(c))
            .ok_or(Error::BlockedPoint { x: episode.goal.0, y: episode.goal.1 })?;
        let goal_distances = distance_field(&map, goal_cell);
        let start = episode.start;
        let geodesic = map
            .cell_of(start.x, start.y)
            .and_then(|c| goal_distances[c])
            .ok_or(Error::BlockedPoint { x: start.x, y: start.y })?;
        Ok(Self {
            config,
            map,
            goal_distances,
            pose: start,
            steps: 0,
            path_length: 0.0,
            geodesic,
            done: false,
            success: false,
            episode,
        })
    }

    pub fn config(&self) -> &NavConfig {
        &self.config
    }

    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn geodesic_to_goal(&self) -> f64 {
        self.geodesic
    }

    /// Geodesic distance from every cell to the goal cell (`None` where
    /// unreachable).
    pub fn goal_distance_field(&self) -> &[Option<f64>] {
        &self.goal_distances
    }

    pub fn observe(&self) -> Observation {
        observe(&self.map, &self.pose, self.episode.goal, &self.config.sensor)
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        self.steps += 1;
        let reward = match action {
            Action::Stop => {
                let (gx, gy) = self.episode.goal;
                self.success =
                    (gx - self.pose.x).hypot(gy - self.pose.y) <= self.config.success_radius;
                self.done = true;
                if self.success {
                    self.config.success_reward
                } else {
                    0.0
                }
            }
            Action::MoveForward => {
                let (s, c) = self.pose.heading.sin_cos();
                let nx = self.pose.x + self.config.forward_step * c;
                let ny = self.pose.y + self.config.forward_step * s;
                let before = self.geodesic;
                if let Some(d) = self.map.cell_of(nx, ny).and_then(|cell| self.goal_distances[cell]) {
                    self.pose.x = nx;
                    self.pose.y = ny;
                    self.path_length += self.config.forward_step;
                    self.geodesic = d;
                }
                -(self.geodesic - before) - self.config.slack_penalty
            }
            Action::TurnLeft | Action::TurnRight => {
                let sign = if action == Action::TurnLeft { 1.0 } else { -1.0 };
                self.pose = Pose::new(
                    self.pose.x,
                    self.pose.y,
                    self.pose.heading + sign * self.config.turn_angle.to_radians(),
                );
                -self.config.slack_penalty
            }
        };
        if !self.done && self.steps >= self.episode.max_steps {
            self.done = true;
        }
        Ok(StepResult {
            observation: self.observe(),
            reward,
            done: self.done,
            success: self.success,
            geodesic_to_goal: self.geodesic,
        })
    }

    pub fn outcome(&self) -> EpisodeOutcome {
        EpisodeOutcome {
            success: self.success,
            path_length: self.path_length,
            shortest_path_length: self.episode.shortest_path_length,
            steps: self.steps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navsim::episode::sample_episode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn open_env(start: Pose, goal: (f64, f64)) -> NavEnv {
        let map = Arc::new(GridMap::generate(0, 16, 16, 0.0).unwrap());
        let ep = Episode::new(&map, start, goal, 500).unwrap();
        NavEnv::new(NavConfig::default(), map, ep).unwrap()
    }

    #[test]
    fn forward_toward_goal_earns_slack_adjusted_reward() {
        let mut env = open_env(Pose::new(0.375, 0.375, 0.0), (2.375, 0.375));
        let r = env.step(Action::MoveForward).unwrap();
        assert!((r.reward - 0.24).abs() < 1e-12);
        assert!(!r.done);
        assert!((r.geodesic_to_goal - 1.75).abs() < 1e-12);
    }

    #[test]
    fn stop_near_goal_succeeds() {
        let mut env = open_env(Pose::new(0.375, 0.375, 0.0), (0.5, 0.45));
        let r = env.step(Action::Stop).unwrap();
        assert_eq!(r.reward, 2.5);
        assert!(r.done && r.success);
    }

    #[test]
    fn stop_far_from_goal_fails() {
        let mut env = open_env(Pose::new(0.375, 0.375, 0.0), (2.375, 0.375));
        let r = env.step(Action::Stop).unwrap();
        assert_eq!(r.reward, 0.0);
        assert!(r.done && !r.success);
        assert!(matches!(env.step(Action::TurnLeft), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn turns_change_heading_only() {
        let mut env = open_env(Pose::new(1.0, 1.0, 0.0), (2.375, 0.375));
        let r = env.step(Action::TurnRight).unwrap();
        assert!((r.reward + 0.01).abs() < 1e-15);
        assert!((env.pose().heading - (2.0 * PI - 10f64.to_radians())).abs() < 1e-12);
        env.step(Action::TurnLeft).unwrap();
        env.step(Action::TurnLeft).unwrap();
        assert!((env.pose().heading - 10f64.to_radians()).abs() < 1e-12);
        assert_eq!((env.pose().x, env.pose().y), (1.0, 1.0));
    }

    #[test]
    fn blocked_forward_leaves_pose() {
        // Facing the left boundary wall from the first free column.
        let mut env = open_env(Pose::new(0.3, 1.0, PI), (2.375, 0.375));
        let before = env.pose();
        let r = env.step(Action::MoveForward).unwrap();
        assert_eq!(env.pose(), before);
        assert!((r.reward + 0.01).abs() < 1e-15);
        assert_eq!(env.outcome().path_length, 0.0);
    }

    #[test]
    fn max_steps_ends_episode_as_failure() {
        let map = Arc::new(GridMap::generate(0, 16, 16, 0.0).unwrap());
        let ep = Episode::new(&map, Pose::new(1.0, 1.0, 0.0), (3.0, 3.0), 3).unwrap();
        let mut env = NavEnv::new(NavConfig::default(), map, ep).unwrap();
        assert!(!env.step(Action::TurnLeft).unwrap().done);
        assert!(!env.step(Action::TurnLeft).unwrap().done);
        let last = env.step(Action::TurnLeft).unwrap();
        assert!(last.done && !last.success);
        assert!((last.reward + 0.01).abs() < 1e-15);
        assert_eq!(env.outcome().steps, 3);
    }

    #[test]
    fn wall_one_meter_ahead() {
        // Free interior spans x in [0.25, 3.75); wall face at x = 3.75.
        let map = GridMap::generate(0, 16, 16, 0.0).unwrap();
        let sensor = SensorConfig { n_rays: 33, ..SensorConfig::default() };
        let obs = observe(&map, &Pose::new(2.75, 2.0, 0.0), (3.0, 3.0), &sensor);
        assert!((obs.depth[16] - 1.0).abs() <= map.cell_size() / 4.0);
    }

    #[test]
    fn depth_is_clipped() {
        let map = GridMap::generate(0, 64, 64, 0.0).unwrap();
        let obs = observe(&map, &Pose::new(1.0, 8.0, 0.0), (3.0, 3.0), &SensorConfig::default());
        assert!(obs.depth.iter().all(|&d| (0.0..=5.0).contains(&d)));
        assert_eq!(obs.depth[16], 5.0);
    }

    #[test]
    fn goal_polar_frame() {
        let p = Pose::new(1.0, 1.0, 0.0);
        let (r, t) = goal_polar(&p, (3.0, 1.0));
        assert!((r - 2.0).abs() < 1e-15);
        assert_eq!(t, 0.0);
        let (_, t) = goal_polar(&p, (-1.0, 1.0));
        assert_eq!(t, PI);
        let (_, t) = goal_polar(&Pose::new(1.0, 1.0, PI / 2.0), (1.0, 2.0));
        assert!(t.abs() < 1e-15);
        let (_, t) = goal_polar(&p, (1.0, 2.0));
        assert!((t - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn geodesic_rewards_telescope() {
        let map = Arc::new(GridMap::generate(5, 16, 16, 0.15).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let ep = sample_episode(&map, &mut rng, 1.0, 200).unwrap();
            let start_geo = ep.shortest_path_length;
            let mut env = NavEnv::new(NavConfig::default(), map.clone(), ep).unwrap();
            let mut sum = 0.0;
            loop {
                let a = Action::from_index(rng.gen_range(0..3)).unwrap();
                let r = env.step(a).unwrap();
                sum += r.reward + 0.01;
                assert!(map.is_free_point(env.pose().x, env.pose().y));
                if r.done {
                    break;
                }
            }
            assert!((sum - (start_geo - env.geodesic_to_goal())).abs() < 1e-9);
        }
    }
}
