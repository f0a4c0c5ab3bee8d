//! Source motion paths: planning around obstacles, constant-speed timing and
//! placement-distance checks.

mod grid;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use grid::{OccupancyGrid, CELL_SIZE, PROBE_HALF_HEIGHT};

use crate::error::{Error, Result};
use crate::scene::{Scene, Vec3};

pub const DEFAULT_RIR_SPACING: f64 = 0.5;
pub const MIN_PLACEMENT_DISTANCE: f64 = 1.0;
pub const MAX_PLACEMENT_DISTANCE: f64 = 8.0;

/// Polyline with cumulative arc lengths and an optional traversal time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    waypoints: Vec<Vec3>,
    arc: Vec<f64>,
    duration: Option<f64>,
}

impl Trajectory {
    /// Fails unless there are at least two waypoints and consecutive ones differ.
    pub fn new(waypoints: Vec<Vec3>) -> Result<Trajectory> {
        if waypoints.len() < 2 {
            return Err(Error::Validation("trajectory needs at least 2 waypoints".into()));
        }
        if waypoints.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation("trajectory waypoint is not finite".into()));
        }
        let mut arc = Vec::with_capacity(waypoints.len());
        arc.push(0.0);
        for (i, w) in waypoints.windows(2).enumerate() {
            let d = w[0].distance(w[1]);
            if d == 0.0 {
                return Err(Error::Validation(format!(
                    "waypoints {i} and {} coincide",
                    i + 1
                )));
            }
            arc.push(arc[i] + d);
        }
        Ok(Trajectory {
            waypoints,
            arc,
            duration: None,
        })
    }

    pub fn waypoints(&self) -> &[Vec3] {
        &self.waypoints
    }

    pub fn start(&self) -> Vec3 {
        self.waypoints[0]
    }

    pub fn end(&self) -> Vec3 {
        *self.waypoints.last().expect("at least two waypoints")
    }

    pub fn total_length(&self) -> f64 {
        *self.arc.last().expect("at least two waypoints")
    }

    pub fn duration(&self) -> Option<f64> {
        self.duration
    }

    /// Constant speed implied by the duration.
    pub fn speed(&self) -> Option<f64> {
        self.duration.map(|t| self.total_length() / t)
    }

    pub fn with_duration(mut self, duration: f64) -> Result<Trajectory> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::Domain(format!("duration must be positive, got {duration}")));
        }
        self.duration = Some(duration);
        Ok(self)
    }

    /// Point at arc length `s`, clamped to `[0, total_length]`.
    pub fn position_at_arc(&self, s: f64) -> Vec3 {
        let s = s.clamp(0.0, self.total_length());
        let seg = match self.arc.partition_point(|&a| a <= s) {
            0 => 0,
            k => (k - 1).min(self.waypoints.len() - 2),
        };
        let (a0, a1) = (self.arc[seg], self.arc[seg + 1]);
        if s == a1 {
            return self.waypoints[seg + 1];
        }
        let u = (s - a0) / (a1 - a0);
        self.waypoints[seg].lerp(self.waypoints[seg + 1], u)
    }

    pub fn position_at(&self, t: f64) -> Result<Vec3> {
        let duration = self
            .duration
            .ok_or_else(|| Error::Domain("trajectory has no duration".into()))?;
        if !(0.0..=duration).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {duration}]")));
        }
        if t == duration {
            return Ok(self.end());
        }
        Ok(self.position_at_arc(self.total_length() * t / duration))
    }

    /// Positions at arc lengths `0, spacing, 2·spacing, …` plus the endpoint,
    /// returned as `(arc length, point)`.
    pub fn sample_rir_positions(&self, spacing: f64) -> Result<Vec<(f64, Vec3)>> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Domain(format!("spacing must be positive, got {spacing}")));
        }
        let len = self.total_length();
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let s = k as f64 * spacing;
            if s >= len - 1e-9 {
                break;
            }
            out.push((s, self.position_at_arc(s)));
            k += 1;
        }
        out.push((len, self.end()));
        Ok(out)
    }
}

/// Plans a path from `start` to `end` at the scene's walkable height.
pub fn plan_path(scene: &Scene, start: Vec3, end: Vec3) -> Result<Trajectory> {
    plan_path_with(scene, None, start, end)
}

/// [`plan_path`] with an optional prebuilt grid, reused across many queries.
pub fn plan_path_with(
    scene: &Scene,
    grid: Option<&OccupancyGrid>,
    start: Vec3,
    end: Vec3,
) -> Result<Trajectory> {
    let bounds = scene.bounds();
    for (name, p) in [("start", start), ("end", end)] {
        if !bounds.contains_strict(p) {
            return Err(Error::Placement(format!("path {name} {p:?} outside scene bounds")));
        }
    }
    if start.distance(end) == 0.0 {
        return Err(Error::Validation("path start and end coincide".into()));
    }
    if scene.line_of_sight(start, end) {
        return Trajectory::new(vec![start, end]);
    }

    let built;
    let grid = match grid {
        Some(g) => g,
        None => {
            built = OccupancyGrid::build(scene);
            &built
        }
    };
    let unreachable = || Error::Unreachable(format!("no path from {start:?} to {end:?}"));
    let (Some(a), Some(b)) = (grid.cell_of(start), grid.cell_of(end)) else {
        return Err(unreachable());
    };
    let cells = grid.shortest_path(a, b).ok_or_else(unreachable)?;

    let mut raw = vec![start];
    if cells.len() > 2 {
        raw.extend(cells[1..cells.len() - 1].iter().map(|&c| grid.cell_center(c)));
    }
    raw.push(end);

    // Greedy shortcutting: from each kept point jump to the farthest visible one.
    let mut smoothed = vec![start];
    let mut i = 0;
    while i < raw.len() - 1 {
        let j = (i + 1..raw.len())
            .rev()
            .find(|&j| scene.line_of_sight(raw[i], raw[j]))
            .ok_or_else(unreachable)?;
        smoothed.push(raw[j]);
        i = j;
    }
    smoothed.dedup();
    Trajectory::new(smoothed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlacementPair {
    MicStart,
    MicEnd,
    StartEnd,
    MicNoise(usize),
}

impl fmt::Display for PlacementPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlacementPair::MicStart => write!(f, "mic-start"),
            PlacementPair::MicEnd => write!(f, "mic-end"),
            PlacementPair::StartEnd => write!(f, "start-end"),
            PlacementPair::MicNoise(i) => write!(f, "mic-noise[{i}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub pair: PlacementPair,
    pub distance: f64,
}

impl Violation {
    pub fn is_below(&self) -> bool {
        self.distance < MIN_PLACEMENT_DISTANCE
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_below() {
            write!(f, "{} {:.3} m below {MIN_PLACEMENT_DISTANCE} m", self.pair, self.distance)
        } else {
            write!(f, "{} {:.3} m above {MAX_PLACEMENT_DISTANCE} m", self.pair, self.distance)
        }
    }
}

pub fn distance_in_range(d: f64) -> bool {
    (MIN_PLACEMENT_DISTANCE..=MAX_PLACEMENT_DISTANCE).contains(&d)
}

/// Every pair whose distance falls outside `[1, 8]` m.
pub fn validate_placement(
    mic: Vec3,
    src_start: Vec3,
    src_end: Vec3,
    noise: &[Vec3],
) -> Vec<Violation> {
    let mut pairs = vec![
        (PlacementPair::MicStart, mic.distance(src_start)),
        (PlacementPair::MicEnd, mic.distance(src_end)),
        (PlacementPair::StartEnd, src_start.distance(src_end)),
    ];
    pairs.extend(
        noise
            .iter()
            .enumerate()
            .map(|(i, &n)| (PlacementPair::MicNoise(i), mic.distance(n))),
    );
    pairs
        .into_iter()
        .filter(|&(_, d)| !distance_in_range(d))
        .map(|(pair, distance)| Violation { pair, distance })
        .collect()
}
