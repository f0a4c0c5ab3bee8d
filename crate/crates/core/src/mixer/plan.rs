use std::f64::consts::PI;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::arrange::{layout, seconds_to_samples};
use super::config::MixConfig;
use super::pools::{PoolEntry, Pools};
use crate::error::{Error, Result};
use crate::rir::DEFAULT_CAPTURE_RADIUS;
use crate::scene::{Scene, Vec3};
use crate::trajectory::{
    plan_path_with, validate_placement, OccupancyGrid, PlacementPair, Trajectory, CELL_SIZE,
    MAX_PLACEMENT_DISTANCE, MIN_PLACEMENT_DISTANCE,
};

pub const N_SOURCES: usize = 3;
pub const MAX_PLACEMENT_TRIES: usize = 1000;
pub const UTTERANCES_PER_SOURCE: [usize; 3] = [3, 4, 5];
pub const SEGMENTS_PER_NOISE: [usize; 3] = [6, 7, 8];
pub const SPEECH_MAX_GAP: f64 = 8.0;
pub const NOISE_MAX_GAP: f64 = 4.0;

/// One clip placed on a stem timeline. `start`/`end` are planned from the
/// manifest duration; the built stem uses the decoded length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub path: String,
    pub transcript: String,
    pub gap_seconds: f64,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePlan {
    pub speaker_id: String,
    pub segments: Vec<Segment>,
    /// Drawn clips that did not fit on the timeline.
    pub dropped: Vec<String>,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePlan {
    pub segments: Vec<Segment>,
    pub dropped: Vec<String>,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPlan {
    pub scene: String,
    pub seed: u64,
    pub sample_rate: u32,
    pub clip_seconds: f64,
    pub mic: Vec3,
    pub sources: Vec<SourcePlan>,
    pub noise: NoisePlan,
    pub music: NoisePlan,
}

impl MixPlan {
    pub fn noise_positions(&self) -> [Vec3; 2] {
        [self.noise.position, self.music.position]
    }

    /// Placement check for every source against the shared mic and noise positions.
    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.sources.iter().enumerate() {
            let v = validate_placement(
                self.mic,
                s.trajectory.start(),
                s.trajectory.end(),
                &self.noise_positions(),
            );
            if let Some(first) = v.first() {
                return Err(Error::Placement(format!("source{}: {first}", k + 1)));
            }
        }
        let total = seconds_to_samples(self.clip_seconds, self.sample_rate);
        let stems = self
            .sources
            .iter()
            .map(|s| &s.segments)
            .chain([&self.noise.segments, &self.music.segments]);
        for segments in stems {
            if segments.iter().any(|g| g.start >= g.end || g.end >= total) {
                return Err(Error::Validation("segment outside the stem timeline".into()));
            }
        }
        Ok(())
    }
}

/// Samples group plans for one scene, reusing its navigation grid.
pub struct Planner<'a> {
    scene: &'a Scene,
    grid: OccupancyGrid,
    walkable: Vec<(usize, usize)>,
    in_region: Vec<bool>,
    label: String,
}

impl<'a> Planner<'a> {
    pub fn new(scene: &'a Scene, label: impl Into<String>) -> Planner<'a> {
        let grid = OccupancyGrid::build(scene);
        let walkable = grid.main_region();
        let (nx, nz) = grid.dims();
        let mut in_region = vec![false; nx * nz];
        for &(x, z) in &walkable {
            in_region[z * nx + x] = true;
        }
        Planner {
            scene,
            grid,
            walkable,
            in_region,
            label: label.into(),
        }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    fn is_walkable_point(&self, p: Vec3) -> bool {
        let nx = self.grid.dims().0;
        self.grid
            .cell_of(p)
            .is_some_and(|(x, z)| self.in_region[z * nx + x])
    }

    fn jittered(&self, rng: &mut ChaCha8Rng, cell: (usize, usize)) -> Vec3 {
        let c = self.grid.cell_center(cell);
        let h = 0.5 * CELL_SIZE;
        Vec3::new(
            c.x + rng.random_range(-h..h),
            c.y,
            c.z + rng.random_range(-h..h),
        )
    }

    /// Uniform point of the horizontal 1-8 m annulus around `center` on walkable ground.
    fn annulus_point(
        &self,
        rng: &mut ChaCha8Rng,
        center: Vec3,
        mut accept: impl FnMut(Vec3) -> bool,
        what: PlacementPair,
    ) -> Result<Vec3> {
        let (r0, r1) = (MIN_PLACEMENT_DISTANCE, MAX_PLACEMENT_DISTANCE);
        for _ in 0..MAX_PLACEMENT_TRIES {
            let r = rng.random_range(r0 * r0..r1 * r1).sqrt();
            let theta = rng.random_range(0.0..2.0 * PI);
            let p = Vec3::new(
                center.x + r * theta.cos(),
                self.grid.height(),
                center.z + r * theta.sin(),
            );
            if self.is_walkable_point(p) && accept(p) {
                return Ok(p);
            }
        }
        Err(Error::Placement(format!(
            "no walkable {what} placement within {r0}-{r1} m after {MAX_PLACEMENT_TRIES} tries"
        )))
    }

    fn source_trajectory(
        &self,
        rng: &mut ChaCha8Rng,
        mic: Vec3,
        clip_seconds: f64,
    ) -> Result<Trajectory> {
        let start = self.annulus_point(rng, mic, |_| true, PlacementPair::MicStart)?;
        let mut path = None;
        let end = self.annulus_point(
            rng,
            mic,
            |p| {
                let d = p.distance(start);
                if !(MIN_PLACEMENT_DISTANCE..=MAX_PLACEMENT_DISTANCE).contains(&d) {
                    return false;
                }
                match plan_path_with(self.scene, Some(&self.grid), start, p) {
                    Ok(t) if clearance(&t, mic) > DEFAULT_CAPTURE_RADIUS => {
                        path = Some(t);
                        true
                    }
                    _ => false,
                }
            },
            PlacementPair::StartEnd,
        )?;
        debug_assert!(path.as_ref().is_some_and(|t| t.end() == end));
        path.expect("accepted endpoint has a path")
            .with_duration(clip_seconds)
    }

    pub fn plan(&self, pools: &Pools, seed: u64, config: &MixConfig) -> Result<MixPlan> {
        config.validate()?;
        if pools.speakers.len() < N_SOURCES {
            return Err(Error::Data(format!(
                "need {N_SOURCES} distinct speakers, pool has {}",
                pools.speakers.len()
            )));
        }
        if pools.environmental.is_empty() {
            return Err(Error::Data("environmental noise pool is empty".into()));
        }
        if pools.music.is_empty() {
            return Err(Error::Data("music pool is empty".into()));
        }
        if self.walkable.is_empty() {
            return Err(Error::Placement("scene has no walkable area".into()));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mic_cell = *self.walkable.choose(&mut rng).expect("non-empty");
        let mic = self.jittered(&mut rng, mic_cell);
        let noise_pos = self.annulus_point(&mut rng, mic, |_| true, PlacementPair::MicNoise(0))?;
        let music_pos = self.annulus_point(&mut rng, mic, |_| true, PlacementPair::MicNoise(1))?;

        let fs = config.sample_rate;
        let total = config.clip_samples();
        let speakers: Vec<&String> = pools.speakers.keys().collect();
        let chosen: Vec<&String> = speakers
            .choose_multiple(&mut rng, N_SOURCES)
            .copied()
            .collect();
        let mut sources = Vec::with_capacity(N_SOURCES);
        for speaker in chosen {
            let trajectory = self.source_trajectory(&mut rng, mic, config.clip_seconds)?;
            let count = *UTTERANCES_PER_SOURCE.choose(&mut rng).expect("non-empty");
            let mut clips: Vec<&PoolEntry> = pools.speakers[speaker].iter().collect();
            clips.shuffle(&mut rng);
            clips.truncate(count);
            let (segments, dropped) = place(&mut rng, &clips, SPEECH_MAX_GAP, fs, total);
            sources.push(SourcePlan {
                speaker_id: speaker.clone(),
                segments,
                dropped,
                trajectory,
            });
        }

        let mut bed = |pool: &[PoolEntry], position: Vec3| {
            let count = *SEGMENTS_PER_NOISE.choose(&mut rng).expect("non-empty");
            let clips: Vec<&PoolEntry> = (0..count)
                .map(|_| pool.choose(&mut rng).expect("non-empty"))
                .collect();
            let (segments, dropped) = place(&mut rng, &clips, NOISE_MAX_GAP, fs, total);
            NoisePlan {
                segments,
                dropped,
                position,
            }
        };
        let noise = bed(&pools.environmental, noise_pos);
        let music = bed(&pools.music, music_pos);

        let plan = MixPlan {
            scene: self.label.clone(),
            seed,
            sample_rate: fs,
            clip_seconds: config.clip_seconds,
            mic,
            sources,
            noise,
            music,
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// Closest approach of a polyline to `p`.
fn clearance(t: &Trajectory, p: Vec3) -> f64 {
    t.waypoints()
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let u = ((p - w[0]).dot(d) / d.length_squared()).clamp(0.0, 1.0);
            p.distance(w[0] + d * u)
        })
        .fold(f64::INFINITY, f64::min)
}

fn place(
    rng: &mut ChaCha8Rng,
    clips: &[&PoolEntry],
    max_gap: f64,
    sample_rate: u32,
    total: usize,
) -> (Vec<Segment>, Vec<String>) {
    let gaps: Vec<f64> = clips.iter().map(|_| rng.random_range(0.0..max_gap)).collect();
    let lengths: Vec<usize> = clips
        .iter()
        .map(|c| seconds_to_samples(c.duration, sample_rate))
        .collect();
    let gap_samples: Vec<usize> = gaps
        .iter()
        .map(|&g| seconds_to_samples(g, sample_rate))
        .collect();
    let spans = layout(&lengths, &gap_samples, total);
    let segments = spans
        .iter()
        .zip(clips.iter().zip(&gaps))
        .map(|(&(start, end), (c, &gap_seconds))| Segment {
            path: c.path.clone(),
            transcript: c.transcript.clone(),
            gap_seconds,
            start,
            end,
        })
        .collect();
    let dropped = clips[spans.len()..].iter().map(|c| c.path.clone()).collect();
    (segments, dropped)
}

/// Plans one group. Build a [`Planner`] directly to sample many plans.
pub fn plan_group(scene: &Scene, pools: &Pools, seed: u64, config: &MixConfig) -> Result<MixPlan> {
    Planner::new(scene, "scene").plan(pools, seed, config)
}
