use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scene::{Aabb, Scene, Vec3};

/// Cell edge of the navigation grid, in meters.
pub const CELL_SIZE: f64 = 0.25;

/// Half-height of the vertical probe around the walkable height.
pub const PROBE_HALF_HEIGHT: f64 = 0.5;

/// Occupancy of the horizontal slice of a scene at its walkable height.
/// Cells are indexed `(ix, iz)` over the scene bounds in the x-z plane.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    origin: Vec3,
    nx: usize,
    nz: usize,
    height: f64,
    blocked: Vec<bool>,
    walkable: Vec<bool>,
}

impl OccupancyGrid {
    pub fn build(scene: &Scene) -> OccupancyGrid {
        let bounds = scene.bounds();
        let height = scene.walkable_height();
        let extent = bounds.extent();
        let nx = ((extent.x / CELL_SIZE).ceil() as usize).max(1);
        let nz = ((extent.z / CELL_SIZE).ceil() as usize).max(1);
        let origin = Vec3::new(bounds.min.x, height, bounds.min.z);
        let mut blocked = vec![false; nx * nz];
        let mut walkable = vec![false; nx * nz];
        for iz in 0..nz {
            for ix in 0..nx {
                let x0 = origin.x + ix as f64 * CELL_SIZE;
                let z0 = origin.z + iz as f64 * CELL_SIZE;
                let probe = Aabb {
                    min: Vec3::new(x0, height - PROBE_HALF_HEIGHT, z0),
                    max: Vec3::new(x0 + CELL_SIZE, height + PROBE_HALF_HEIGHT, z0 + CELL_SIZE),
                };
                let i = iz * nx + ix;
                blocked[i] = scene.box_overlaps_surface(&probe);
                if !blocked[i] {
                    let c = Vec3::new(x0 + 0.5 * CELL_SIZE, height, z0 + 0.5 * CELL_SIZE);
                    let down = scene.ray_intersect(c, Vec3::new(0.0, -1.0, 0.0), f64::INFINITY);
                    let up = scene.ray_intersect(c, Vec3::new(0.0, 1.0, 0.0), f64::INFINITY);
                    walkable[i] = down.is_some() && up.is_some();
                }
            }
        }
        OccupancyGrid {
            origin,
            nx,
            nz,
            height,
            blocked,
            walkable,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.nz)
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn is_blocked(&self, cell: (usize, usize)) -> bool {
        self.blocked[cell.1 * self.nx + cell.0]
    }

    /// Free, with a floor below and a ceiling above.
    pub fn is_walkable(&self, cell: (usize, usize)) -> bool {
        self.walkable[cell.1 * self.nx + cell.0]
    }

    pub fn walkable_cells(&self) -> Vec<(usize, usize)> {
        (0..self.nz)
            .flat_map(|iz| (0..self.nx).map(move |ix| (ix, iz)))
            .filter(|&c| self.is_walkable(c))
            .collect()
    }

    /// Walkable cells of the largest 8-connected walkable region, in scan
    /// order. Pockets such as the hollow inside of a closed column are left out.
    pub fn main_region(&self) -> Vec<(usize, usize)> {
        let idx = |c: (usize, usize)| c.1 * self.nx + c.0;
        let free = |c: (usize, usize)| self.is_walkable(c);
        let mut label = vec![usize::MAX; self.nx * self.nz];
        let mut best: Vec<(usize, usize)> = Vec::new();
        for seed in self.walkable_cells() {
            if label[idx(seed)] != usize::MAX {
                continue;
            }
            label[idx(seed)] = idx(seed);
            let mut region = vec![seed];
            let mut i = 0;
            while i < region.len() {
                for (next, _) in self.neighbors(region[i], free) {
                    if label[idx(next)] == usize::MAX {
                        label[idx(next)] = idx(seed);
                        region.push(next);
                    }
                }
                i += 1;
            }
            if region.len() > best.len() {
                best = region;
            }
        }
        best.sort_by_key(|&c| idx(c));
        best
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: Vec3) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / CELL_SIZE;
        let fz = (p.z - self.origin.z) / CELL_SIZE;
        if !(fx >= 0.0 && fz >= 0.0) {
            return None;
        }
        let (ix, iz) = (fx as usize, fz as usize);
        (ix < self.nx && iz < self.nz).then_some((ix, iz))
    }

    pub fn cell_center(&self, cell: (usize, usize)) -> Vec3 {
        Vec3::new(
            self.origin.x + (cell.0 as f64 + 0.5) * CELL_SIZE,
            self.height,
            self.origin.z + (cell.1 as f64 + 0.5) * CELL_SIZE,
        )
    }

    /// Neighbors reachable in one move with their step length. Diagonal
    /// moves need both adjacent orthogonal cells free.
    pub fn neighbors(
        &self,
        cell: (usize, usize),
        free: impl Fn((usize, usize)) -> bool,
    ) -> Vec<((usize, usize), f64)> {
        let (x, z) = (cell.0 as i64, cell.1 as i64);
        let inside = |x: i64, z: i64| {
            (x >= 0 && z >= 0 && (x as usize) < self.nx && (z as usize) < self.nz)
                .then_some((x as usize, z as usize))
        };
        let open = |x: i64, z: i64| inside(x, z).filter(|&c| free(c));
        let mut out = Vec::with_capacity(8);
        for (dx, dz) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if let Some(c) = open(x + dx, z + dz) {
                out.push((c, CELL_SIZE));
            }
        }
        for (dx, dz) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            if let (Some(c), Some(_), Some(_)) = (open(x + dx, z + dz), open(x + dx, z), open(x, z + dz))
            {
                out.push((c, CELL_SIZE * std::f64::consts::SQRT_2));
            }
        }
        out
    }

    /// Shortest 8-connected cell path by A*. The end cells are treated as
    /// free even when blocked.
    pub fn shortest_path(
        &self,
        start: (usize, usize),
        goal: (usize, usize),
    ) -> Option<Vec<(usize, usize)>> {
        let free = |c: (usize, usize)| c == start || c == goal || !self.is_blocked(c);
        let idx = |c: (usize, usize)| c.1 * self.nx + c.0;
        let h = |c: (usize, usize)| {
            let dx = c.0.abs_diff(goal.0) as f64;
            let dz = c.1.abs_diff(goal.1) as f64;
            CELL_SIZE * (dx.max(dz) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dz))
        };
        let n = self.nx * self.nz;
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        g[idx(start)] = 0.0;
        open.push(Node {
            f: h(start),
            g: 0.0,
            cell: start,
        });
        while let Some(Node { g: gc, cell, .. }) = open.pop() {
            let i = idx(cell);
            if closed[i] {
                continue;
            }
            closed[i] = true;
            if cell == goal {
                let mut path = vec![cell];
                let mut j = i;
                while parent[j] != usize::MAX {
                    j = parent[j];
                    path.push((j % self.nx, j / self.nx));
                }
                path.reverse();
                return Some(path);
            }
            for (next, step) in self.neighbors(cell, free) {
                let k = idx(next);
                let cand = gc + step;
                if !closed[k] && cand < g[k] {
                    g[k] = cand;
                    parent[k] = i;
                    open.push(Node {
                        f: cand + h(next),
                        g: cand,
                        cell: next,
                    });
                }
            }
        }
        None
    }
}

#[derive(Debug, PartialEq)]
struct Node {
    f: f64,
    g: f64,
    cell: (usize, usize),
}

impl Eq for Node {}

impl Ord for Node {
    // Min-heap on f, ties broken toward larger g and then cell index so the
    // expansion order is fully deterministic.
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then(self.g.total_cmp(&o.g))
            .then(o.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
