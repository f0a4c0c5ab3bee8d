use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};

/// JSON Schema for group metadata at 60 s and 16 kHz, shipped for external tools.
pub const METADATA_SCHEMA: &str = include_str!("../../schema/mix_metadata.schema.json");

pub const SPEECH_KEYS: [&str; 3] = ["source1", "source2", "source3"];
pub const BED_KEYS: [&str; 2] = ["noise", "music"];

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SpeechMeta {
    pub audio: Vec<String>,
    pub start_end_points: Vec<[usize; 2]>,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BedMeta {
    pub audio: Vec<String>,
    pub start_end_points: Vec<[usize; 2]>,
}

/// Per-stem file names, sample spans on the dry timeline and transcripts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MixMetadata {
    pub sources: [SpeechMeta; 3],
    pub noise: BedMeta,
    pub music: BedMeta,
}

impl Serialize for MixMetadata {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(5))?;
        for (key, src) in SPEECH_KEYS.iter().zip(&self.sources) {
            map.serialize_entry(key, src)?;
        }
        map.serialize_entry("noise", &self.noise)?;
        map.serialize_entry("music", &self.music)?;
        map.end()
    }
}

impl MixMetadata {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serializes")
    }

    /// Parses metadata that passes [`metadata_violations`] for `total` samples.
    pub fn from_json(v: &Value, total: usize) -> Result<MixMetadata> {
        validate_metadata(v, total)?;
        let strings = |v: &Value| -> Vec<String> {
            v.as_array()
                .map(|a| a.iter().filter_map(|s| s.as_str().map(String::from)).collect())
                .unwrap_or_default()
        };
        let spans = |v: &Value| -> Vec<[usize; 2]> {
            v.as_array()
                .into_iter()
                .flatten()
                .map(|p| [p[0].as_u64().unwrap_or(0) as usize, p[1].as_u64().unwrap_or(0) as usize])
                .collect()
        };
        let speech = |k: &str| SpeechMeta {
            audio: strings(&v[k]["audio"]),
            start_end_points: spans(&v[k]["start_end_points"]),
            words: strings(&v[k]["words"]),
        };
        let bed = |k: &str| BedMeta {
            audio: strings(&v[k]["audio"]),
            start_end_points: spans(&v[k]["start_end_points"]),
        };
        Ok(MixMetadata {
            sources: SPEECH_KEYS.map(speech),
            noise: bed("noise"),
            music: bed("music"),
        })
    }
}

fn check_spans(key: &str, v: Option<&Value>, total: usize, out: &mut Vec<String>) -> Option<usize> {
    let Some(arr) = v.and_then(Value::as_array) else {
        out.push(format!("{key}.start_end_points: missing or not an array"));
        return None;
    };
    let mut prev_end = 0u64;
    for (i, p) in arr.iter().enumerate() {
        let pair = p.as_array().filter(|a| a.len() == 2);
        let nums = pair.and_then(|a| Some((a[0].as_u64()?, a[1].as_u64()?)));
        let Some((s, e)) = nums else {
            out.push(format!("{key}.start_end_points[{i}]: expected [start, end] sample indices"));
            continue;
        };
        if s >= e {
            out.push(format!("{key}.start_end_points[{i}]: start {s} not before end {e}"));
        }
        if e >= total as u64 {
            out.push(format!("{key}.start_end_points[{i}]: end {e} outside [0, {total})"));
        }
        if s < prev_end {
            out.push(format!("{key}.start_end_points[{i}]: overlaps the previous span"));
        }
        prev_end = e;
    }
    Some(arr.len())
}

fn check_strings(key: &str, field: &str, v: Option<&Value>, out: &mut Vec<String>) -> Option<usize> {
    let Some(arr) = v.and_then(Value::as_array) else {
        out.push(format!("{key}.{field}: missing or not an array"));
        return None;
    };
    if arr.iter().any(|s| !s.is_string()) {
        out.push(format!("{key}.{field}: entries must be strings"));
    }
    Some(arr.len())
}

/// Every way `v` departs from the metadata shape for stems of `total` samples.
pub fn metadata_violations(v: &Value, total: usize) -> Vec<String> {
    let mut out = Vec::new();
    let Some(obj) = v.as_object() else {
        return vec!["metadata must be a JSON object".into()];
    };
    for k in obj.keys() {
        if !SPEECH_KEYS.contains(&k.as_str()) && !BED_KEYS.contains(&k.as_str()) {
            out.push(format!("unexpected key {k:?}"));
        }
    }
    for key in SPEECH_KEYS {
        let Some(stem) = obj.get(key).and_then(Value::as_object) else {
            out.push(format!("{key}: missing or not an object"));
            continue;
        };
        for k in stem.keys() {
            if !["audio", "start_end_points", "words"].contains(&k.as_str()) {
                out.push(format!("{key}: unexpected key {k:?}"));
            }
        }
        let n = check_spans(key, stem.get("start_end_points"), total, &mut out);
        let a = check_strings(key, "audio", stem.get("audio"), &mut out);
        let w = check_strings(key, "words", stem.get("words"), &mut out);
        if let (Some(n), Some(a), Some(w)) = (n, a, w) {
            if a != n || w != n {
                out.push(format!("{key}: {a} audio, {n} spans and {w} transcripts differ in count"));
            }
        }
    }
    for key in BED_KEYS {
        let Some(stem) = obj.get(key).and_then(Value::as_object) else {
            out.push(format!("{key}: missing or not an object"));
            continue;
        };
        for k in stem.keys() {
            if !["audio", "start_end_points"].contains(&k.as_str()) {
                out.push(format!("{key}: unexpected key {k:?}"));
            }
        }
        let n = check_spans(key, stem.get("start_end_points"), total, &mut out);
        if stem.contains_key("audio") {
            let a = check_strings(key, "audio", stem.get("audio"), &mut out);
            if let (Some(n), Some(a)) = (n, a) {
                if a != 0 && a != n {
                    out.push(format!("{key}: {a} audio names for {n} spans"));
                }
            }
        }
    }
    out
}

pub fn validate_metadata(v: &Value, total: usize) -> Result<()> {
    let problems = metadata_violations(v, total);
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems.join("; ")))
    }
}
