use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::audio_io::{read_wav, resample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipKind {
    #[default]
    Speech,
    Environmental,
    Music,
}

/// One row of a pool manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub speaker_id: String,
    pub path: String,
    #[serde(default)]
    pub transcript: String,
    /// Seconds.
    pub duration: f64,
    #[serde(default)]
    pub kind: ClipKind,
}

/// Speech clips grouped by speaker, plus environmental and music beds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pools {
    pub speakers: BTreeMap<String, Vec<PoolEntry>>,
    pub environmental: Vec<PoolEntry>,
    pub music: Vec<PoolEntry>,
}

impl Pools {
    pub fn from_entries(entries: Vec<PoolEntry>) -> Result<Pools> {
        let mut pools = Pools::default();
        for (i, e) in entries.into_iter().enumerate() {
            if !(e.duration > 0.0 && e.duration.is_finite()) {
                return Err(Error::Data(format!(
                    "manifest row {i} ({}): duration must be positive, got {}",
                    e.path, e.duration
                )));
            }
            if e.path.is_empty() {
                return Err(Error::Data(format!("manifest row {i}: empty path")));
            }
            match e.kind {
                ClipKind::Speech => pools.speakers.entry(e.speaker_id.clone()).or_default().push(e),
                ClipKind::Environmental => pools.environmental.push(e),
                ClipKind::Music => pools.music.push(e),
            }
        }
        Ok(pools)
    }

    pub fn from_json_str(text: &str, path: &str) -> Result<Pools> {
        let entries: Vec<PoolEntry> = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: path.to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::from_entries(entries)
    }

    pub fn load(path: &Path) -> Result<Pools> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn is_empty(&self) -> bool {
        self.speakers.is_empty() && self.environmental.is_empty() && self.music.is_empty()
    }
}

/// Source of dry clips, delivered mono at the requested rate.
pub trait ClipStore: Sync {
    fn load(&self, path: &str, sample_rate: u32) -> Result<AudioBuffer>;
}

/// Reads WAV files relative to a root directory.
#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FileStore { root: root.into() }
    }
}

impl ClipStore for FileStore {
    fn load(&self, path: &str, sample_rate: u32) -> Result<AudioBuffer> {
        let full = self.root.join(path);
        let buf = read_wav(&full)?;
        resample(&buf.to_mono(), sample_rate)
    }
}

/// In-memory clips keyed by manifest path.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    clips: HashMap<String, AudioBuffer>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: impl Into<String>, clip: AudioBuffer) {
        self.clips.insert(path.into(), clip);
    }
}

impl ClipStore for MemoryStore {
    fn load(&self, path: &str, sample_rate: u32) -> Result<AudioBuffer> {
        let clip = self
            .clips
            .get(path)
            .ok_or_else(|| Error::Data(format!("no clip named {path}")))?;
        resample(&clip.to_mono(), sample_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_grouping() {
        let text = r#"[
            {"speaker_id": "61", "path": "a.wav", "transcript": "HI", "duration": 2.0},
            {"speaker_id": "61", "path": "b.wav", "duration": 3.5},
            {"speaker_id": "908", "path": "c.wav", "transcript": "", "duration": 1.0},
            {"speaker_id": "", "path": "rain.wav", "duration": 9.0, "kind": "environmental"},
            {"speaker_id": "", "path": "song.wav", "duration": 30.0, "kind": "music"}
        ]"#;
        let p = Pools::from_json_str(text, "m.json").unwrap();
        assert_eq!(p.speakers.len(), 2);
        assert_eq!(p.speakers["61"].len(), 2);
        assert_eq!(p.speakers["61"][1].transcript, "");
        assert_eq!(p.environmental.len(), 1);
        assert_eq!(p.music[0].path, "song.wav");
    }

    #[test]
    fn bad_rows() {
        let zero = r#"[{"speaker_id": "1", "path": "a.wav", "duration": 0}]"#;
        assert!(matches!(Pools::from_json_str(zero, "m"), Err(Error::Data(_))));
        let missing = r#"[{"speaker_id": "1", "duration": 1}]"#;
        assert!(matches!(Pools::from_json_str(missing, "m"), Err(Error::Parse { .. })));
        assert!(Pools::from_json_str("[]", "m").unwrap().is_empty());
    }

    #[test]
    fn memory_store_resamples() {
        let mut store = MemoryStore::new();
        store.insert("x", AudioBuffer::mono(vec![1.0; 4800], 48_000).unwrap());
        assert_eq!(store.load("x", 16_000).unwrap().len(), 1600);
        assert!(store.load("y", 16_000).is_err());
    }
}
