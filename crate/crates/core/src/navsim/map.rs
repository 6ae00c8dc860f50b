use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_CELL_SIZE: f64 = 0.25;

/// Occupancy grid with a metric cell size.
///
/// Cell `(cx, cy)` covers `[cx * cell_size, (cx + 1) * cell_size)` on x and the
/// same span on y. Storage is row-major with `cy` as the row index; in the text
/// format the first map row is `cy = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    id: String,
    width: usize,
    height: usize,
    cell_size: f64,
    blocked: Vec<bool>,
}

impl GridMap {
    pub fn new(
        id: impl Into<String>,
        width: usize,
        height: usize,
        cell_size: f64,
        blocked: Vec<bool>,
    ) -> Result<Self> {
        if width < 4 || height < 4 {
            return Err(Error::InvalidMap(format!(
                "dimensions {width}x{height} below the 4x4 minimum"
            )));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidMap(format!("cell size {cell_size} must be positive")));
        }
        if blocked.len() != width * height {
            return Err(Error::InvalidMap(format!(
                "{} occupancy values for a {width}x{height} map",
                blocked.len()
            )));
        }
        let map = Self { id: id.into(), width, height, cell_size, blocked };
        for cy in 0..height {
            for cx in 0..width {
                let boundary = cx == 0 || cy == 0 || cx == width - 1 || cy == height - 1;
                if boundary && !map.blocked[cy * width + cx] {
                    return Err(Error::InvalidMap(format!("boundary cell ({cx}, {cy}) is free")));
                }
            }
        }
        if map.blocked.iter().all(|&b| b) {
            return Err(Error::InvalidMap("no free cells".into()));
        }
        Ok(map)
    }

    /// Procedurally generates a map whose interior cells are blocked
    /// independently with probability `obstacle_density`. Interiors are redrawn
    /// until the largest 8-connected free region holds at least half the free
    /// cells.
    pub fn generate(seed: u64, width: usize, height: usize, obstacle_density: f64) -> Result<Self> {
        if width < 4 || height < 4 {
            return Err(Error::InvalidMap(format!(
                "dimensions {width}x{height} below the 4x4 minimum"
            )));
        }
        if !(0.0..0.5).contains(&obstacle_density) {
            return Err(Error::InvalidMap(format!(
                "obstacle density {obstacle_density} outside [0, 0.5)"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let id = format!("gen-{seed}-{width}x{height}-{obstacle_density}");
        for _ in 0..1000 {
            let mut blocked = vec![false; width * height];
            for cy in 0..height {
                for cx in 0..width {
                    let boundary = cx == 0 || cy == 0 || cx == width - 1 || cy == height - 1;
                    blocked[cy * width + cx] = boundary || rng.gen::<f64>() < obstacle_density;
                }
            }
            if blocked.iter().all(|&b| b) {
                continue;
            }
            let map = Self::new(id.clone(), width, height, DEFAULT_CELL_SIZE, blocked)?;
            if map.largest_component_fraction() >= 0.5 {
                return Ok(map);
            }
        }
        Err(Error::InvalidMap(format!(
            "could not generate a connected map for seed {seed}"
        )))
    }

    /// Parses the text format: a `cell_size=<meters>` line followed by rows of
    /// `#` (blocked) and `.` (free), all of equal length.
    pub fn parse(id: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim_end).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidMap("empty map text".into()))?;
        let cell_size = header
            .strip_prefix("cell_size=")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::InvalidMap(format!("bad header line {header:?}")))?;
        let mut width = None;
        let mut blocked = Vec::new();
        let mut height = 0;
        for row in lines {
            let w = *width.get_or_insert(row.chars().count());
            if row.chars().count() != w {
                return Err(Error::InvalidMap(format!("row {height} has a different length")));
            }
            for ch in row.chars() {
                blocked.push(match ch {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(Error::InvalidMap(format!("unexpected character {other:?}")))
                    }
                });
            }
            height += 1;
        }
        Self::new(id, width.unwrap_or(0), height, cell_size, blocked)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "cell_size={}", self.cell_size);
        for cy in 0..self.height {
            for cx in 0..self.width {
                out.push(if self.blocked[self.index(cx, cy)] { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, cx: usize, cy: usize) -> usize {
        cy * self.width + cx
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// Out-of-range coordinates count as blocked.
    pub fn is_blocked(&self, cx: i64, cy: i64) -> bool {
        if cx < 0 || cy < 0 || cx >= self.width as i64 || cy >= self.height as i64 {
            return true;
        }
        self.blocked[cy as usize * self.width + cx as usize]
    }

    pub fn is_blocked_index(&self, index: usize) -> bool {
        self.blocked[index]
    }

    /// Cell containing a metric point, if it lies inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<usize> {
        let cx = (x / self.cell_size).floor();
        let cy = (y / self.cell_size).floor();
        if cx < 0.0 || cy < 0.0 || cx >= self.width as f64 || cy >= self.height as f64 {
            return None;
        }
        Some(self.index(cx as usize, cy as usize))
    }

    pub fn is_free_point(&self, x: f64, y: f64) -> bool {
        self.cell_of(x, y).is_some_and(|i| !self.blocked[i])
    }

    pub fn cell_center(&self, index: usize) -> (f64, f64) {
        let (cx, cy) = self.coords(index);
        ((cx as f64 + 0.5) * self.cell_size, (cy as f64 + 0.5) * self.cell_size)
    }

    pub fn free_cells(&self) -> Vec<usize> {
        (0..self.num_cells()).filter(|&i| !self.blocked[i]).collect()
    }

    /// Free 8-neighbours of a cell together with whether the move is diagonal.
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        let (cx, cy) = self.coords(index);
        const OFFSETS: [(i64, i64); 8] =
            [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let nx = cx as i64 + dx;
            let ny = cy as i64 + dy;
            if self.is_blocked(nx, ny) {
                None
            } else {
                Some((self.index(nx as usize, ny as usize), dx != 0 && dy != 0))
            }
        })
    }

    /// Labels 8-connected free components; blocked cells get `usize::MAX`.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.num_cells()];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in self.free_cells() {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            queue.push_back(start);
            while let Some(cell) = queue.pop_front() {
                for (n, _) in self.neighbors(cell) {
                    if label[n] == usize::MAX {
                        label[n] = next;
                        queue.push_back(n);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn largest_component_fraction(&self) -> f64 {
        let labels = self.components();
        let mut sizes = Vec::<usize>::new();
        let mut free = 0usize;
        for &l in labels.iter().filter(|&&l| l != usize::MAX) {
            if l >= sizes.len() {
                sizes.resize(l + 1, 0);
            }
            sizes[l] += 1;
            free += 1;
        }
        match sizes.iter().max() {
            Some(&m) if free > 0 => m as f64 / free as f64,
            _ => 0.0,
        }
    }
}
