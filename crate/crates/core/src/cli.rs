//! Command-line front end.
//!
//! Settings resolve as command-line flags, then the config file, then
//! built-in defaults. Exit status is 0 on success, 1 for input or data
//! errors and 2 for unsupported features.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::audio::AudioBuffer;
use crate::audio_io::{read_wav, write_wav, SampleFormat};
use crate::error::{Error, Result};
use crate::metrics::{pit_select, si_snr, snr_loss};
use crate::mixer::{
    build_group, derive_seed, render_config, validate_metadata, FileStore, GenerationConfig,
    MixConfig, Planner, Pools,
};
use crate::rir::{rir_from_trace, rt60_estimate, trace_energy, RirRequest};
use crate::scene::{Scene, BAND_CENTERS_HZ};

#[derive(Debug, Parser)]
#[command(name = "sonicforge", version, about = "Room acoustics simulation and moving-source dataset generation")]
#[command(after_help = "Settings precedence: command-line flags > config file > defaults.\n\
Log level is read from SONICFORGE_LOG (error, warn, info, debug, trace).")]
pub struct Cli {
    /// Worker threads; 0 uses every core. Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace one impulse response for the source and microphone in a config file.
    Rir(RirArgs),
    /// Render the single source (and optional noise) described by a config file.
    Render(RenderArgs),
    /// Generate dataset groups: five stems, metadata and plan per group.
    Generate(GenerateArgs),
    /// Score estimates against references.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// OBJ mesh, or a directory holding scene.obj and materials.json.
    /// Falls back to environment.scene in the config file.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Material table; defaults to materials.json beside the mesh.
    #[arg(long)]
    pub materials: Option<PathBuf>,
    /// Config file (JSON with comments allowed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Rays per traced response.
    #[arg(long)]
    pub rays: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RirArgs {
    #[command(flatten)]
    pub common: SceneArgs,
    /// Output WAV; a sidecar JSON is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = WavFormat::F32)]
    pub format: WavFormat,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: SceneArgs,
    /// Output directory for mixture.wav, source.wav and noise.wav.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory the config's audio paths are relative to; defaults to the config's directory.
    #[arg(long)]
    pub audio_root: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: SceneArgs,
    /// Pool manifest: JSON list of {speaker_id, path, transcript, duration, kind}.
    #[arg(long)]
    pub pools: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub n_groups: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WavFormat {
    Pcm16,
    F32,
}

impl From<WavFormat> for SampleFormat {
    fn from(f: WavFormat) -> Self {
        match f {
            WavFormat::Pcm16 => SampleFormat::Pcm16,
            WavFormat::F32 => SampleFormat::F32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Metric {
    SiSnr,
    Snr,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::SiSnr => "si_snr",
            Metric::Snr => "snr",
        }
    }

    /// Score reported for a pair: SI-SNR in dB, or SNR in dB (the negated SNR loss).
    fn score(self, reference: &[f64], estimate: &[f64]) -> Result<f64> {
        match self {
            Metric::SiSnr => si_snr(reference, estimate, true).map(|d| d.value),
            Metric::Snr => snr_loss(reference, estimate).map(|d| -d.value),
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSON list of {reference, estimate}; each a path or a list of paths.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "si_snr")]
    pub metrics: Vec<Metric>,
    /// Output JSON lines of {file, metric, value}.
    #[arg(long)]
    pub out: PathBuf,
    /// Pair multi-source rows under the best assignment of the first metric.
    #[arg(long)]
    pub pit: bool,
    /// Record failing rows and continue; exit 0 unless the manifest itself is unreadable.
    #[arg(long)]
    pub keep_going: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Rir(a) => cmd_rir(&a),
        Command::Render(a) => cmd_render(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
    })
}

fn load_config(path: Option<&Path>) -> Result<GenerationConfig> {
    match path {
        Some(p) => GenerationConfig::load(p),
        None => Ok(GenerationConfig::default()),
    }
}

fn mix_config(args: &SceneArgs, file: &GenerationConfig) -> Result<MixConfig> {
    let mut c = MixConfig::from_file_config(file);
    if let Some(r) = args.rays {
        c.rir.n_rays = r;
    }
    c.validate()?;
    Ok(c)
}

/// Mesh and material paths from the flags, else the config file.
fn scene_paths(args: &SceneArgs, file: &GenerationConfig) -> Result<(PathBuf, PathBuf)> {
    let env = file.environment.clone().unwrap_or_default();
    let base = args
        .config
        .as_deref()
        .and_then(Path::parent)
        .unwrap_or(Path::new(""))
        .to_path_buf();
    let scene = match (&args.scene, env.scene) {
        (Some(s), _) => s.clone(),
        (None, Some(s)) => base.join(s),
        (None, None) => return Err(Error::Config("no scene given (--scene)".into())),
    };
    let (mesh, sibling) = if scene.is_dir() {
        (scene.join("scene.obj"), scene.join("materials.json"))
    } else {
        let dir = scene.parent().unwrap_or(Path::new("")).to_path_buf();
        (scene, dir.join("materials.json"))
    };
    let materials = match (&args.materials, env.materials) {
        (Some(m), _) => m.clone(),
        (None, Some(m)) => base.join(m),
        (None, None) => sibling,
    };
    Ok((mesh, materials))
}

fn load_scene(args: &SceneArgs, file: &GenerationConfig) -> Result<(Scene, String)> {
    let (mesh, materials) = scene_paths(args, file)?;
    if !mesh.is_file() {
        return Err(Error::io(
            &mesh,
            std::io::Error::new(std::io::ErrorKind::NotFound, "scene file not found"),
        ));
    }
    let scene = Scene::load(&mesh, &materials)?;
    let label = mesh
        .file_stem()
        .map_or_else(|| "scene".into(), |s| s.to_string_lossy().into_owned());
    Ok((scene, label))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn cmd_rir(args: &RirArgs) -> Result<()> {
    let file = load_config(args.common.config.as_deref())?;
    let config = mix_config(&args.common, &file)?;
    let mic = file
        .microphone
        .as_ref()
        .and_then(|m| m.position)
        .ok_or_else(|| Error::Config("microphone.position is required".into()))?;
    let receiver = config.receiver(mic)?;
    let source = file
        .sound_source
        .as_ref()
        .map(|s| s.start_point)
        .ok_or_else(|| Error::Config("sound_source.start_point is required".into()))?;
    let (scene, _) = load_scene(&args.common, &file)?;

    let mut req = RirRequest::new(source, receiver, config.sample_rate, args.common.seed);
    req.n_rays = config.rir.n_rays;
    req.max_ir_seconds = config.rir.max_ir_seconds;
    req.max_bounces = config.rir.max_bounces;
    let trace = trace_energy(&scene, &req)?;
    let ir = rir_from_trace(&trace, &req);
    write_wav(&args.out, &ir.to_audio()?, args.format.into())?;

    let rt60: Vec<Value> = match rt60_estimate(&ir) {
        Ok(v) => v.into_iter().map(finite_or_null).collect(),
        Err(e) => {
            log::warn!("RT60 estimate unavailable: {e}");
            vec![Value::Null; ir.num_channels()]
        }
    };
    let hist = trace.histogram();
    let band_energy: Vec<Vec<f64>> = (0..hist.bins.len())
        .map(|c| hist.band_totals(c).to_vec())
        .collect();
    let sidecar = json!({
        "sample_rate": ir.sample_rate,
        "channels": ir.num_channels(),
        "samples": ir.len(),
        "microphone": config.microphone,
        "source": source,
        "receiver": mic,
        "n_rays": req.n_rays,
        "seed": req.seed,
        "rt60_seconds": rt60,
        "band_centers_hz": BAND_CENTERS_HZ,
        "band_energy": band_energy,
        "direct_distance": trace.elements.first().map(|e| e.direct.distance),
    });
    let path = args.out.with_extension("json");
    write_text(&path, &serde_json::to_string_pretty(&sidecar).expect("json"))?;
    log::info!("wrote {} and {}", args.out.display(), path.display());
    Ok(())
}

pub fn cmd_render(args: &RenderArgs) -> Result<()> {
    let file = load_config(args.common.config.as_deref())?;
    let config = mix_config(&args.common, &file)?;
    let (scene, _) = load_scene(&args.common, &file)?;
    let root = match (&args.audio_root, &args.common.config) {
        (Some(r), _) => r.clone(),
        (None, Some(c)) => c.parent().unwrap_or(Path::new("")).to_path_buf(),
        (None, None) => PathBuf::new(),
    };
    let out = render_config(&scene, &file, &FileStore::new(root), &config, args.common.seed)?;
    create_dir(&args.out)?;
    write_wav(&args.out.join("mixture.wav"), &out.mixture, SampleFormat::F32)?;
    write_wav(&args.out.join("source.wav"), &out.source, SampleFormat::F32)?;
    if let Some(n) = &out.noise {
        write_wav(&args.out.join("noise.wav"), n, SampleFormat::F32)?;
    }
    Ok(())
}

fn generate_one(
    planner: &Planner,
    scene: &Scene,
    pools: &Pools,
    store: &FileStore,
    config: &MixConfig,
    seed: u64,
    dir: &Path,
) -> Result<()> {
    let plan = planner.plan(pools, seed, config)?;
    let built = build_group(scene, &plan, store, config)?;
    let metadata = serde_json::to_value(&built.metadata).expect("json");
    validate_metadata(&metadata, config.clip_samples())?;
    create_dir(dir)?;
    for (name, stem) in built.stems.named() {
        write_wav(&dir.join(format!("{name}.wav")), stem, SampleFormat::F32)?;
    }
    write_text(&dir.join("metadata.json"), &built.metadata.to_json_pretty())?;
    write_text(
        &dir.join("plan.json"),
        &serde_json::to_string_pretty(&plan).expect("json"),
    )?;
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let file = load_config(args.common.config.as_deref())?;
    let config = mix_config(&args.common, &file)?;
    let pools = Pools::load(&args.pools)?;
    if pools.is_empty() {
        return Err(Error::Data(format!("{}: pools are empty", args.pools.display())));
    }
    let (scene, label) = load_scene(&args.common, &file)?;
    let store = FileStore::new(args.pools.parent().unwrap_or(Path::new("")));
    let planner = Planner::new(&scene, label);
    create_dir(&args.out)?;

    let n = args.n_groups;
    let results: Vec<Result<()>> = (0..n)
        .into_par_iter()
        .map(|g| {
            let seed = derive_seed(args.common.seed, 0, g as u64);
            let dir = args.out.join(format!("group_{g:04}"));
            let r = generate_one(&planner, &scene, &pools, &store, &config, seed, &dir);
            match &r {
                Ok(()) => eprintln!("group_{g:04} done ({n} total)"),
                Err(e) => eprintln!("group_{g:04} failed: {e}"),
            }
            r
        })
        .collect();
    let failed = results.iter().filter(|r| r.is_err()).count();
    match results.into_iter().find_map(|r| r.err()) {
        Some(first) => {
            log::error!("{failed} of {n} groups failed");
            Err(first)
        }
        None => Ok(()),
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    fn paths(self) -> Vec<String> {
        match self {
            OneOrMany::One(p) => vec![p],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRow {
    reference: OneOrMany,
    estimate: OneOrMany,
}

fn load_mono(base: &Path, p: &str) -> Result<Vec<f64>> {
    let buf: AudioBuffer = read_wav(&base.join(p))?;
    Ok(buf.to_mono().into_channels().swap_remove(0))
}

fn evaluate_row(row: &Value, base: &Path, args: &EvaluateArgs) -> Result<Vec<Value>> {
    let row: PairRow = serde_json::from_value(row.clone())
        .map_err(|e| Error::Data(format!("malformed row: {e}")))?;
    let (refs, ests) = (row.reference.paths(), row.estimate.paths());
    if refs.is_empty() || refs.len() != ests.len() {
        return Err(Error::Data(format!(
            "{} references but {} estimates",
            refs.len(),
            ests.len()
        )));
    }
    let ref_audio = refs.iter().map(|p| load_mono(base, p)).collect::<Result<Vec<_>>>()?;
    let est_audio = ests.iter().map(|p| load_mono(base, p)).collect::<Result<Vec<_>>>()?;
    let first = *args.metrics.first().ok_or_else(|| Error::Config("no metrics".into()))?;
    let assignment: Vec<usize> = if args.pit && refs.len() > 1 {
        let r = pit_select(&ref_audio, &est_audio, |a, b| first.score(a, b).map(|s| -s))?;
        log::info!("{}: assignment {:?}", ests.join(","), r.assignment);
        r.assignment
    } else {
        (0..refs.len()).collect()
    };
    let mut out = Vec::new();
    for (i, &j) in assignment.iter().enumerate() {
        for m in &args.metrics {
            let mut v = json!({
                "file": ests[j],
                "reference": refs[i],
                "metric": m.name(),
                "value": m.score(&ref_audio[i], &est_audio[j])?,
            });
            if args.pit && refs.len() > 1 {
                v["assignment"] = json!(assignment);
            }
            out.push(v);
        }
    }
    Ok(out)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.pairs).map_err(|e| Error::io(&args.pairs, e))?;
    let rows: Vec<Value> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: args.pairs.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let base = args.pairs.parent().unwrap_or(Path::new("")).to_path_buf();
    let results: Vec<Result<Vec<Value>>> = rows
        .par_iter()
        .map(|row| evaluate_row(row, &base, args))
        .collect();

    let file = File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut w = BufWriter::new(file);
    let mut first_error = None;
    for (i, r) in results.into_iter().enumerate() {
        let lines = match r {
            Ok(lines) => lines,
            Err(e) => {
                log::error!("row {i}: {e}");
                let line = json!({"file": rows[i].get("estimate"), "row": i, "error": e.to_string()});
                first_error.get_or_insert(e);
                vec![line]
            }
        };
        for line in lines {
            writeln!(w, "{line}").map_err(|e| Error::io(&args.out, e))?;
        }
        if first_error.is_some() && !args.keep_going {
            break;
        }
    }
    w.flush().map_err(|e| Error::io(&args.out, e))?;
    match first_error {
        Some(e) if !args.keep_going => Err(e),
        _ => Ok(()),
    }
}
