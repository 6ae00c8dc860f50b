//! Independent reference implementations used to check the library.

use pointnav::navsim::GridMap;
use rand::Rng;

/// All-pairs shortest paths by Floyd–Warshall over free cells.
///
/// Lengths are carried as (straight, diagonal) move counts and compared by
/// their cell-unit length, so the result converts to meters with the same
/// arithmetic the library uses. Diagonal moves need only the target cell free.
#[allow(clippy::needless_range_loop)]
pub fn floyd_warshall(map: &GridMap) -> Vec<Vec<Option<(u32, u32)>>> {
    let (w, h) = (map.width(), map.height());
    let n = w * h;
    let len = |c: (u32, u32)| c.0 as f64 + c.1 as f64 * std::f64::consts::SQRT_2;
    let mut d: Vec<Vec<Option<(u32, u32)>>> = vec![vec![None; n]; n];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if map.is_blocked(x as i64, y as i64) {
                continue;
            }
            d[i][i] = Some((0, 0));
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if map.is_blocked(nx, ny) {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    d[i][j] = Some(if dx != 0 && dy != 0 { (0, 1) } else { (1, 0) });
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k] else { continue };
            for j in 0..n {
                let Some(kj) = d[k][j] else { continue };
                let via = (ik.0 + kj.0, ik.1 + kj.1);
                if d[i][j].is_none_or(|cur| len(via) < len(cur)) {
                    d[i][j] = Some(via);
                }
            }
        }
    }
    d
}

pub fn cost_meters(c: (u32, u32), cell_size: f64) -> f64 {
    (c.0 as f64 + c.1 as f64 * std::f64::consts::SQRT_2) * cell_size
}

/// Random map of at most 8x8 cells with a blocked border; free space need not
/// be connected.
pub fn random_small_map<R: Rng>(rng: &mut R, id: usize) -> GridMap {
    let w = rng.gen_range(4..=8);
    let h = rng.gen_range(4..=8);
    let density = rng.gen_range(0.0..0.45);
    loop {
        let mut blocked = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
                blocked[y * w + x] = border || rng.gen::<f64>() < density;
            }
        }
        if let Ok(map) = GridMap::new(format!("fw-{id}"), w, h, 0.25, blocked) {
            return map;
        }
    }
}

/// Advantages as explicit discounted sums of TD errors, truncated at the first
/// episode end.
pub fn gae_explicit(
    rewards: &[f64],
    values: &[f64],
    continues: &[f64],
    bootstrap: f64,
    gamma: f64,
    tau: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let value_after = |t: usize| if t + 1 < n { values[t + 1] } else { bootstrap };
    let delta: Vec<f64> =
        (0..n).map(|t| rewards[t] + gamma * continues[t] * value_after(t) - values[t]).collect();
    (0..n)
        .map(|t| {
            let mut sum = 0.0;
            let mut weight = 1.0;
            for l in t..n {
                sum += weight * delta[l];
                if continues[l] == 0.0 {
                    break;
                }
                weight *= gamma * tau;
            }
            sum
        })
        .collect()
}
