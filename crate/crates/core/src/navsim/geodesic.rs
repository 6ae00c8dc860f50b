//! Geodesic distances on the free space of a [`GridMap`].
//!
//! Paths run between free cell centres over the 8-connected grid. A path's
//! length is tracked as a count of straight and diagonal moves and only turned
//! into meters at the end, so the same path always yields the same bits no
//! matter in which order its edges were summed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::map::GridMap;
use crate::error::{Error, Result};

/// Number of straight and diagonal moves along a grid path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub const ZERO: PathCost = PathCost { straight: 0, diagonal: 0 };

    /// Length in cell units.
    pub fn cells(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }

    pub fn meters(self, cell_size: f64) -> f64 {
        self.cells() * cell_size
    }

    pub fn step(self, diagonal: bool) -> PathCost {
        if diagonal {
            PathCost { straight: self.straight, diagonal: self.diagonal + 1 }
        } else {
            PathCost { straight: self.straight + 1, diagonal: self.diagonal }
        }
    }
}

#[derive(PartialEq)]
struct Frontier {
    cells: f64,
    cost: PathCost,
    index: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap; index breaks ties deterministically.
        other.cells.total_cmp(&self.cells).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra over free cells. `None` marks blocked or
/// unreachable cells.
pub fn cost_field(map: &GridMap, source: usize) -> Vec<Option<PathCost>> {
    let mut best: Vec<Option<PathCost>> = vec![None; map.num_cells()];
    if map.is_blocked_index(source) {
        return best;
    }
    let mut done = vec![false; map.num_cells()];
    let mut heap = BinaryHeap::new();
    best[source] = Some(PathCost::ZERO);
    heap.push(Frontier { cells: 0.0, cost: PathCost::ZERO, index: source });
    while let Some(Frontier { cost, index, .. }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        for (next, diagonal) in map.neighbors(index) {
            if done[next] {
                continue;
            }
            let candidate = cost.step(diagonal);
            let better = match best[next] {
                None => true,
                Some(current) => candidate.cells() < current.cells(),
            };
            if better {
                best[next] = Some(candidate);
                heap.push(Frontier { cells: candidate.cells(), cost: candidate, index: next });
            }
        }
    }
    best
}

/// Geodesic distances in meters from `source` to every cell.
pub fn distance_field(map: &GridMap, source: usize) -> Vec<Option<f64>> {
    cost_field(map, source)
        .into_iter()
        .map(|c| c.map(|c| c.meters(map.cell_size())))
        .collect()
}

/// Geodesic distance between two metric points, each snapped to its
/// containing cell. `Ok(None)` means the cells are not connected.
pub fn geodesic_distance(map: &GridMap, from: (f64, f64), to: (f64, f64)) -> Result<Option<f64>> {
    let start = free_cell(map, from)?;
    let goal = free_cell(map, to)?;
    Ok(cost_field(map, start)[goal].map(|c| c.meters(map.cell_size())))
}

fn free_cell(map: &GridMap, (x, y): (f64, f64)) -> Result<usize> {
    match map.cell_of(x, y) {
        Some(i) if !map.is_blocked_index(i) => Ok(i),
        _ => Err(Error::BlockedPoint { x, y }),
    }
}
