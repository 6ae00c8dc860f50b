use std::f64::consts::TAU;

use rand::Rng;

use super::geodesic::cost_field;
use super::map::GridMap;
use crate::error::{Error, Result};

const MAX_SAMPLING_ATTEMPTS: usize = 1000;

/// Agent pose in meters; heading is measured counter-clockwise from +x and
/// kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: wrap_heading(heading) }
    }
}

pub fn wrap_heading(h: f64) -> f64 {
    let w = h.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub map_id: String,
    pub start: Pose,
    pub goal: (f64, f64),
    pub shortest_path_length: f64,
    pub max_steps: usize,
}

impl Episode {
    /// Builds an episode with a measured shortest path, rejecting unreachable
    /// goals.
    pub fn new(map: &GridMap, start: Pose, goal: (f64, f64), max_steps: usize) -> Result<Self> {
        if max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        let shortest = super::geodesic::geodesic_distance(map, (start.x, start.y), goal)?
            .ok_or_else(|| Error::InvalidMap("goal unreachable from start".into()))?;
        Ok(Self {
            map_id: map.id().to_string(),
            start,
            goal,
            shortest_path_length: shortest,
            max_steps,
        })
    }
}

fn point_in_cell<R: Rng + ?Sized>(map: &GridMap, cell: usize, rng: &mut R) -> (f64, f64) {
    let (cx, cy) = map.coords(cell);
    let cs = map.cell_size();
    (
        (cx as f64 + rng.gen::<f64>()) * cs,
        (cy as f64 + rng.gen::<f64>()) * cs,
    )
}

/// Samples a start pose and goal uniformly over free space, retrying until the
/// pair is connected and at least `min_geodesic` meters apart.
pub fn sample_episode<R: Rng + ?Sized>(
    map: &GridMap,
    rng: &mut R,
    min_geodesic: f64,
    max_steps: usize,
) -> Result<Episode> {
    if max_steps == 0 {
        return Err(Error::Config("max_steps must be positive".into()));
    }
    let free = map.free_cells();
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let start_cell = free[rng.gen_range(0..free.len())];
        let goal_cell = free[rng.gen_range(0..free.len())];
        let Some(cost) = cost_field(map, start_cell)[goal_cell] else {
            continue;
        };
        let shortest = cost.meters(map.cell_size());
        if shortest < min_geodesic || start_cell == goal_cell {
            continue;
        }
        let (sx, sy) = point_in_cell(map, start_cell, rng);
        let heading = rng.gen::<f64>() * TAU;
        let goal = point_in_cell(map, goal_cell, rng);
        return Ok(Episode {
            map_id: map.id().to_string(),
            start: Pose::new(sx, sy, heading),
            goal,
            shortest_path_length: shortest,
            max_steps,
        });
    }
    Err(Error::EpisodeSampling(MAX_SAMPLING_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navsim::geodesic::geodesic_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_min_geodesic() {
        let map = GridMap::generate(3, 16, 16, 0.15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let ep = sample_episode(&map, &mut rng, 1.0, 500).unwrap();
            assert!(ep.shortest_path_length >= 1.0);
            let g = geodesic_distance(&map, (ep.start.x, ep.start.y), ep.goal).unwrap();
            assert_eq!(g, Some(ep.shortest_path_length));
            assert!(map.is_free_point(ep.start.x, ep.start.y));
            assert!(map.is_free_point(ep.goal.0, ep.goal.1));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let map = GridMap::generate(3, 16, 16, 0.15).unwrap();
        let a = sample_episode(&map, &mut ChaCha8Rng::seed_from_u64(9), 1.0, 500).unwrap();
        let b = sample_episode(&map, &mut ChaCha8Rng::seed_from_u64(9), 1.0, 500).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn start_never_equals_goal_on_open_map() {
        let map = GridMap::generate(0, 8, 8, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let ep = sample_episode(&map, &mut rng, 0.0, 500).unwrap();
            assert_ne!(map.cell_of(ep.start.x, ep.start.y), map.cell_of(ep.goal.0, ep.goal.1));
        }
    }

    #[test]
    fn impossible_separation_fails() {
        let map = GridMap::generate(0, 6, 6, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(matches!(
            sample_episode(&map, &mut rng, 100.0, 500),
            Err(Error::EpisodeSampling(_))
        ));
    }

    #[test]
    fn heading_wraps_into_range() {
        assert_eq!(wrap_heading(-1e-18), 0.0);
        assert!((wrap_heading(-std::f64::consts::FRAC_PI_2) - 1.5 * std::f64::consts::PI).abs() < 1e-12);
        assert!(wrap_heading(7.0) < TAU);
    }
}
