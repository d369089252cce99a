//! Command-line pipelines: map generation, scoring, corruption, resampling,
//! validation and oracle comparison, each emitting a JSON [`RunReport`].
//!
//! Reports go to `--report <path>` when given and to stdout otherwise;
//! diagnostics go to stderr. Per-frame entries are sorted by frame id and
//! aggregates are summed in that order, so identical inputs yield
//! byte-identical reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{self, AnnotationRecord, Point2, Trajectory};
use crate::baseline::{self, BandPredictorParams};
use crate::confmap::{self, ConfidenceMap, Formula, GenerationParams, ThresholdMode};
use crate::corrupt::{self, CorruptionKind, CorruptionSpec, Image};
use crate::error::Error;
use crate::metrics::{self, MapScore, TrajScore};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bumped whenever the report layout changes.
pub const REPORT_VERSION: u32 = 1;
/// File written next to generated maps, echoing the parameters used.
pub const PARAMS_SIDECAR: &str = "generation_params.json";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "safemargin",
    version,
    about = "Safety-margin confidence maps and evaluation tools"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Root seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = one per core). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Treat missing counterparts and skipped frames as fatal.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate one ground-truth PNG per annotation record.
    Generate(GenerateArgs),
    /// Score predicted maps against ground-truth maps.
    ScoreMap(ScoreMapArgs),
    /// Score predicted trajectories against ground truth.
    ScoreTraj(ScoreTrajArgs),
    /// Apply seeded corruptions to every PNG in a directory.
    Corrupt(CorruptArgs),
    /// Resample trajectories to a fixed point count.
    Resample(ResampleArgs),
    /// Check an annotation file and list invalid records.
    Validate(ValidateArgs),
    /// Check the fast generator against the exhaustive oracle.
    CompareOracle(CompareOracleArgs),
    /// Baseline: linear band maps around each annotated trajectory.
    PredictBand(PredictBandArgs),
    /// Baseline: constant-direction trajectory continuation.
    Extrapolate(ExtrapolateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ParamArgs {
    /// JSON file with generation parameters; flags below override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub distance_threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub threshold_mode: Option<ThresholdMode>,
    #[arg(long, value_enum)]
    pub formula: Option<Formula>,
}

impl ParamArgs {
    fn resolve(&self) -> anyhow::Result<GenerationParams> {
        let mut p = match &self.params {
            Some(path) => serde_json::from_slice(&read(path)?)
                .with_context(|| format!("parsing parameters {}", path.display()))?,
            None => GenerationParams::default(),
        };
        if let Some(t) = self.distance_threshold {
            p.distance_threshold = t;
        }
        if let Some(m) = self.threshold_mode {
            p.threshold_mode = m;
        }
        if let Some(f) = self.formula {
            p.formula = f;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Keep maps written before a failure instead of removing them.
    #[arg(long)]
    pub keep_partial: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreMapArgs {
    #[arg(long)]
    pub pred_dir: PathBuf,
    #[arg(long)]
    pub gt_dir: PathBuf,
    /// Weight of pixels whose ground truth is zero.
    #[arg(long, default_value_t = metrics::DEFAULT_OUTSIDE_WEIGHT)]
    pub w_out: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreTrajArgs {
    /// Predictions as `{frame_id: [[x, y], ...]}`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth, same layout.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub resample_n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CorruptArgs {
    #[arg(long)]
    pub image_dir: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Corruption name, or `all`.
    #[arg(long)]
    pub kind: String,
    /// 1 to 5; omitted means all five.
    #[arg(long)]
    pub severity: Option<u8>,
}

#[derive(Debug, Args, Serialize)]
pub struct ResampleArgs {
    /// Annotation file (array) or trajectory map (object).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Trajectory map output; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub annotations: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareOracleArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Run the oracle with a different ratio formula (a deliberate mismatch).
    #[arg(long, value_enum)]
    pub oracle_formula: Option<Formula>,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictBandArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub half_width: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtrapolateArgs {
    /// Observed histories as `{frame_id: [[x, y], ...]}`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Machine-readable outcome of one command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport<F, A> {
    pub tool_version: String,
    pub report_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub per_frame: Vec<F>,
    pub aggregate: A,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapFrame {
    pub frame_id: String,
    pub pixels: usize,
    #[serde(flatten)]
    pub score: MapScore,
}

/// `pooled` weights frames by pixel count; `per_image_mean` weights them equally.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapAggregate {
    pub frames: usize,
    pub pixels: usize,
    pub pooled: MapScore,
    pub per_image_mean: MapScore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajFrame {
    pub frame_id: String,
    pub points: usize,
    #[serde(flatten)]
    pub score: TrajScore,
}

/// `pooled` weights ADE by point count; FDE and FD have one value per frame,
/// so their pooled and per-image means coincide.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajAggregate {
    pub frames: usize,
    pub pooled: TrajScore,
    pub per_image_mean: TrajScore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputFrame {
    pub frame_id: String,
    pub output: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputAggregate {
    pub written: usize,
    pub failed: usize,
    pub partial: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorruptFrame {
    pub frame_id: String,
    pub kind: CorruptionKind,
    pub severity: u8,
    pub seed: u64,
    pub output: String,
    /// `None` when the output is identical to the input.
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorruptAggregate {
    pub images: usize,
    pub outputs: usize,
    pub table_version: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleFrame {
    pub frame_id: String,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleAggregate {
    pub frames: usize,
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// Command result: `success == false` maps to a nonzero exit status even
/// though the command ran to completion (invalid records, oracle mismatch).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub success: bool,
}

impl Outcome {
    const OK: Outcome = Outcome { success: true };
}

pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if cli.global.threads > 0 {
        // Fails only if a pool already exists (e.g. repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global();
    }
    let ctx = Ctx {
        global: &cli.global,
        config: serde_json::json!({ "global": &cli.global, "command": &cli.command }),
    };
    match &cli.command {
        Command::Generate(a) => cmd_generate(&ctx, a),
        Command::ScoreMap(a) => cmd_score_map(&ctx, a),
        Command::ScoreTraj(a) => cmd_score_traj(&ctx, a),
        Command::Corrupt(a) => cmd_corrupt(&ctx, a),
        Command::Resample(a) => cmd_resample(&ctx, a),
        Command::Validate(a) => cmd_validate(&ctx, a),
        Command::CompareOracle(a) => cmd_compare_oracle(&ctx, a),
        Command::PredictBand(a) => cmd_predict_band(&ctx, a),
        Command::Extrapolate(a) => cmd_extrapolate(&ctx, a),
    }
}

struct Ctx<'a> {
    global: &'a GlobalArgs,
    config: serde_json::Value,
}

impl Ctx<'_> {
    fn emit<F: Serialize, A: Serialize>(
        &self,
        command: &str,
        per_frame: Vec<F>,
        aggregate: A,
        warnings: Vec<String>,
    ) -> anyhow::Result<()> {
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        let report = RunReport {
            tool_version: TOOL_VERSION.to_string(),
            report_version: REPORT_VERSION,
            command: command.to_string(),
            config: self.config.clone(),
            per_frame,
            aggregate,
            warnings,
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        match &self.global.report {
            Some(path) => write(path, text.as_bytes()),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

/// Frame ids become file names, so they must be plain names.
fn check_frame_id(id: &str) -> Result<(), Error> {
    let bad = id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\', '\0']);
    if bad {
        return Err(Error::Validation {
            frame_id: id.to_string(),
            field: "frame_id".into(),
            message: "frame id must be usable as a file name".into(),
        });
    }
    Ok(())
}

fn error_frame_id(e: &Error, index: usize) -> String {
    match e {
        Error::Validation { frame_id, .. } => frame_id.clone(),
        _ => format!("#{index}"),
    }
}

/// `(frame_id, message)` for each rejected record.
type Failures = Vec<(String, String)>;

/// Parses an annotation file into valid records plus the rejected ones;
/// duplicate and unusable frame ids are rejected too.
fn load_records(path: &Path) -> anyhow::Result<(Vec<AnnotationRecord>, Failures)> {
    let parsed = annotation::parse_records(&read(path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let mut seen = BTreeSet::new();
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (i, r) in parsed.into_iter().enumerate() {
        let checked = r.and_then(|rec| {
            check_frame_id(&rec.frame_id)?;
            if !seen.insert(rec.frame_id.clone()) {
                return Err(Error::Validation {
                    frame_id: rec.frame_id.clone(),
                    field: "frame_id".into(),
                    message: "duplicate frame id".into(),
                });
            }
            Ok(rec)
        });
        match checked {
            Ok(rec) => ok.push(rec),
            Err(e) => bad.push((error_frame_id(&e, i), e.to_string())),
        }
    }
    Ok((ok, bad))
}

fn list_failures(failures: &[(String, String)]) -> String {
    failures
        .iter()
        .map(|(id, _)| id.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn cmd_generate(ctx: &Ctx, a: &GenerateArgs) -> anyhow::Result<Outcome> {
    let params = a.params.resolve()?;
    let (records, mut failures) = load_records(&a.annotations)?;
    create_dir(&a.out_dir)?;

    let results: Vec<(String, Result<Vec<u8>, Error>)> = records
        .par_iter()
        .map(|rec| {
            let png = confmap::generate(rec, &params).and_then(|m| confmap::encode_png(&m));
            (rec.frame_id.clone(), png)
        })
        .collect();

    let mut written = Vec::new();
    for (id, png) in results {
        match png {
            Ok(bytes) => {
                let path = a.out_dir.join(format!("{id}.png"));
                write(&path, &bytes)?;
                written.push((id, path));
            }
            Err(e) => failures.push((id, e.to_string())),
        }
    }

    let failed = !failures.is_empty();
    let keep = !failed || a.keep_partial;
    if keep {
        let sidecar = serde_json::json!({ "tool_version": TOOL_VERSION, "params": params });
        let mut text = serde_json::to_string_pretty(&sidecar)?;
        text.push('\n');
        write(&a.out_dir.join(PARAMS_SIDECAR), text.as_bytes())?;
    } else {
        for (_, path) in &written {
            fs::remove_file(path).with_context(|| format!("removing {}", path.display()))?;
        }
    }

    let mut frames: Vec<OutputFrame> = written
        .iter()
        .map(|(id, path)| OutputFrame {
            frame_id: id.clone(),
            output: keep.then(|| path.display().to_string()),
            error: None,
        })
        .chain(failures.iter().map(|(id, e)| OutputFrame {
            frame_id: id.clone(),
            output: None,
            error: Some(e.clone()),
        }))
        .collect();
    frames.sort_by(|x, y| x.frame_id.cmp(&y.frame_id));

    let mut warnings = Vec::new();
    if failed {
        warnings.push(format!("records failed: {}", list_failures(&failures)));
        if a.keep_partial {
            warnings.push("partial output kept".into());
        }
    }
    let aggregate = OutputAggregate {
        written: if keep { written.len() } else { 0 },
        failed: failures.len(),
        partial: failed && a.keep_partial,
    };
    ctx.emit("generate", frames, aggregate, warnings)?;
    if failed {
        bail!(
            "{} record(s) failed: {}",
            failures.len(),
            list_failures(&failures)
        );
    }
    Ok(Outcome::OK)
}

/// `.png` files in `dir`, keyed by file stem.
fn png_stems(dir: &Path) -> anyhow::Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "png") && path.is_file() {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path.clone());
            }
        }
    }
    Ok(out)
}

/// Keys present in both maps, plus warnings for one-sided keys; fatal under
/// `--strict` when anything is unmatched or nothing matches.
fn match_frames<A, B>(
    strict: bool,
    pred: &BTreeMap<String, A>,
    gt: &BTreeMap<String, B>,
) -> anyhow::Result<(Vec<String>, Vec<String>)> {
    let mut warnings = Vec::new();
    for id in pred.keys().filter(|k| !gt.contains_key(*k)) {
        warnings.push(format!("no ground truth for prediction '{id}'"));
    }
    for id in gt.keys().filter(|k| !pred.contains_key(*k)) {
        warnings.push(format!("no prediction for ground truth '{id}'"));
    }
    let common: Vec<String> = pred
        .keys()
        .filter(|k| gt.contains_key(*k))
        .cloned()
        .collect();
    if strict && !warnings.is_empty() {
        bail!("unmatched frames under --strict: {}", warnings.join("; "));
    }
    if common.is_empty() {
        bail!("no frame ids shared by predictions and ground truth");
    }
    Ok((common, warnings))
}

pub fn aggregate_maps(frames: &[MapFrame]) -> MapAggregate {
    let n = frames.len() as f64;
    let pixels: usize = frames.iter().map(|f| f.pixels).sum();
    let (mut pooled, mut mean) = ([0.0; 3], [0.0; 3]);
    for f in frames {
        let s = [f.score.mae, f.score.mse, f.score.weighted_mse];
        for k in 0..3 {
            pooled[k] += s[k] * f.pixels as f64;
            mean[k] += s[k];
        }
    }
    let score = |v: [f64; 3], d: f64| MapScore {
        mae: v[0] / d,
        mse: v[1] / d,
        weighted_mse: v[2] / d,
    };
    MapAggregate {
        frames: frames.len(),
        pixels,
        pooled: score(pooled, pixels as f64),
        per_image_mean: score(mean, n),
    }
}

pub fn aggregate_trajs(frames: &[TrajFrame]) -> TrajAggregate {
    let n = frames.len() as f64;
    let points: usize = frames.iter().map(|f| f.points).sum();
    let (mut ade_pooled, mut sums) = (0.0, [0.0; 3]);
    for f in frames {
        ade_pooled += f.score.ade * f.points as f64;
        sums[0] += f.score.ade;
        sums[1] += f.score.fde;
        sums[2] += f.score.fd;
    }
    let mean = TrajScore {
        ade: sums[0] / n,
        fde: sums[1] / n,
        fd: sums[2] / n,
    };
    TrajAggregate {
        frames: frames.len(),
        pooled: TrajScore {
            ade: ade_pooled / points as f64,
            ..mean
        },
        per_image_mean: mean,
    }
}

fn load_map(path: &Path) -> anyhow::Result<ConfidenceMap> {
    confmap::decode_png(&read(path)?).with_context(|| format!("decoding {}", path.display()))
}

fn cmd_score_map(ctx: &Ctx, a: &ScoreMapArgs) -> anyhow::Result<Outcome> {
    let pred = png_stems(&a.pred_dir)?;
    let gt = png_stems(&a.gt_dir)?;
    let (common, warnings) = match_frames(ctx.global.strict, &pred, &gt)?;
    let frames = common
        .par_iter()
        .map(|id| {
            let p = load_map(&pred[id])?;
            let g = load_map(&gt[id])?;
            let score =
                metrics::score_map(&p, &g, a.w_out).with_context(|| format!("frame '{id}'"))?;
            Ok(MapFrame {
                frame_id: id.clone(),
                pixels: g.values().len(),
                score,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let aggregate = aggregate_maps(&frames);
    ctx.emit("score-map", frames, aggregate, warnings)?;
    Ok(Outcome::OK)
}

type TrajMap = BTreeMap<String, Vec<[f64; 2]>>;

fn load_traj_map(path: &Path) -> anyhow::Result<TrajMap> {
    serde_json::from_slice(&read(path)?)
        .with_context(|| format!("parsing trajectory map {}", path.display()))
}

fn to_points(v: &[[f64; 2]]) -> Vec<Point2> {
    v.iter().map(|&p| p.into()).collect()
}

fn resampled(id: &str, v: &[[f64; 2]], n: usize) -> anyhow::Result<Trajectory> {
    Trajectory::new(to_points(v))
        .and_then(|t| annotation::resample_trajectory(&t, n))
        .with_context(|| format!("frame '{id}'"))
}

fn cmd_score_traj(ctx: &Ctx, a: &ScoreTrajArgs) -> anyhow::Result<Outcome> {
    let pred = load_traj_map(&a.pred)?;
    let gt = load_traj_map(&a.gt)?;
    let (common, warnings) = match_frames(ctx.global.strict, &pred, &gt)?;
    let mut frames = Vec::with_capacity(common.len());
    for id in &common {
        let p = resampled(id, &pred[id], a.resample_n)?;
        let g = resampled(id, &gt[id], a.resample_n)?;
        let score = metrics::score_trajectory(p.points(), g.points())?;
        frames.push(TrajFrame {
            frame_id: id.clone(),
            points: g.len(),
            score,
        });
    }
    let aggregate = aggregate_trajs(&frames);
    ctx.emit("score-traj", frames, aggregate, warnings)?;
    Ok(Outcome::OK)
}

/// Per-image seed: the root seed mixed with the image name (FNV-1a, then a
/// SplitMix64 finalizer), so images get independent streams.
pub fn image_seed(root: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = root ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn cmd_corrupt(ctx: &Ctx, a: &CorruptArgs) -> anyhow::Result<Outcome> {
    let kinds: Vec<CorruptionKind> = if a.kind == "all" {
        CorruptionKind::ALL.to_vec()
    } else {
        vec![CorruptionKind::from_name(&a.kind)?]
    };
    let severities: Vec<u8> = match a.severity {
        Some(s) => vec![s],
        None => (1..=5).collect(),
    };
    for &s in &severities {
        CorruptionSpec::new(kinds[0], s, 0)?;
    }
    let inputs = png_stems(&a.image_dir)?;
    if inputs.is_empty() && ctx.global.strict {
        bail!("no PNG images in {}", a.image_dir.display());
    }
    create_dir(&a.out_dir)?;
    let images = inputs
        .iter()
        .map(|(id, path)| {
            let img = Image::from_png(&read(path)?)
                .with_context(|| format!("decoding {}", path.display()))?;
            Ok((id.clone(), img))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for (i, (id, _)) in images.iter().enumerate() {
        for &kind in &kinds {
            for &severity in &severities {
                let seed = image_seed(ctx.global.seed, id);
                jobs.push((i, CorruptionSpec::new(kind, severity, seed)?));
            }
        }
    }
    let frames = jobs
        .par_iter()
        .map(|&(i, spec)| {
            let (id, img) = &images[i];
            let out = corrupt::apply(img, &spec)?;
            let path = a
                .out_dir
                .join(format!("{id}.{}.s{}.png", spec.kind, spec.severity));
            write(&path, &out.to_png()?)?;
            let psnr = corrupt::psnr(img, &out)?;
            Ok(CorruptFrame {
                frame_id: id.clone(),
                kind: spec.kind,
                severity: spec.severity,
                seed: spec.seed,
                output: path.display().to_string(),
                psnr: psnr.is_finite().then_some(psnr),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    if images.is_empty() {
        warnings.push(format!("no PNG images in {}", a.image_dir.display()));
    }
    let aggregate = CorruptAggregate {
        images: images.len(),
        outputs: frames.len(),
        table_version: corrupt::tables::TABLE_VERSION,
    };
    ctx.emit("corrupt", frames, aggregate, warnings)?;
    Ok(Outcome::OK)
}

fn write_traj_map(
    path: Option<&Path>,
    map: &BTreeMap<String, Vec<[f64; 2]>>,
) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(map)?;
    text.push('\n');
    match path {
        Some(p) => write(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn points_of(t: &Trajectory) -> Vec<[f64; 2]> {
    t.points().iter().map(|&p| p.into()).collect()
}

fn cmd_resample(ctx: &Ctx, a: &ResampleArgs) -> anyhow::Result<Outcome> {
    let bytes = read(&a.input)?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", a.input.display()))?;
    let sources: TrajMap = if value.is_array() {
        let (records, failures) = load_records(&a.input)?;
        if !failures.is_empty() {
            bail!("invalid records: {}", list_failures(&failures));
        }
        records
            .iter()
            .map(|r| (r.frame_id.clone(), points_of(&r.trajectory)))
            .collect()
    } else {
        serde_json::from_value(value)
            .with_context(|| format!("parsing trajectory map {}", a.input.display()))?
    };
    let mut out = BTreeMap::new();
    let mut frames = Vec::new();
    for (id, pts) in &sources {
        let t = resampled(id, pts, a.n)?;
        frames.push(OutputFrame {
            frame_id: id.clone(),
            output: a.output.as_ref().map(|p| p.display().to_string()),
            error: None,
        });
        out.insert(id.clone(), points_of(&t));
    }
    write_traj_map(a.output.as_deref(), &out)?;
    if a.output.is_some() {
        let aggregate = OutputAggregate {
            written: frames.len(),
            failed: 0,
            partial: false,
        };
        ctx.emit("resample", frames, aggregate, Vec::new())?;
    }
    Ok(Outcome::OK)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateFrame {
    pub frame_id: String,
    pub valid: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidateAggregate {
    pub records: usize,
    pub valid: usize,
    pub invalid: usize,
}

fn cmd_validate(ctx: &Ctx, a: &ValidateArgs) -> anyhow::Result<Outcome> {
    let (records, failures) = load_records(&a.annotations)?;
    let mut frames: Vec<ValidateFrame> = records
        .iter()
        .map(|r| ValidateFrame {
            frame_id: r.frame_id.clone(),
            valid: true,
            error: None,
        })
        .chain(failures.iter().map(|(id, e)| ValidateFrame {
            frame_id: id.clone(),
            valid: false,
            error: Some(e.clone()),
        }))
        .collect();
    frames.sort_by(|x, y| x.frame_id.cmp(&y.frame_id));
    let aggregate = ValidateAggregate {
        records: frames.len(),
        valid: records.len(),
        invalid: failures.len(),
    };
    let warnings = if failures.is_empty() {
        Vec::new()
    } else {
        vec![format!("invalid records: {}", list_failures(&failures))]
    };
    ctx.emit("validate", frames, aggregate, warnings)?;
    Ok(Outcome {
        success: failures.is_empty(),
    })
}

fn cmd_compare_oracle(ctx: &Ctx, a: &CompareOracleArgs) -> anyhow::Result<Outcome> {
    let params = a.params.resolve()?;
    let oracle_params = GenerationParams {
        formula: a.oracle_formula.unwrap_or(params.formula),
        ..params
    };
    let (records, failures) = load_records(&a.annotations)?;
    if !failures.is_empty() {
        bail!("invalid records: {}", list_failures(&failures));
    }
    let mut frames = records
        .iter()
        .map(|rec| {
            let fast = confmap::generate(rec, &params)?;
            let slow = confmap::oracle_generate(rec, &oracle_params)?;
            let diff = fast
                .max_abs_diff(&slow)
                .context("oracle map has different dimensions")?;
            Ok(OracleFrame {
                frame_id: rec.frame_id.clone(),
                max_abs_diff: diff,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    frames.sort_by(|x, y| x.frame_id.cmp(&y.frame_id));
    let max = frames.iter().map(|f| f.max_abs_diff).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if frames.is_empty() {
        warnings.push("no records: comparison passes vacuously".into());
    }
    let pass = max == 0.0;
    let aggregate = OracleAggregate {
        frames: frames.len(),
        max_abs_diff: max,
        pass,
    };
    ctx.emit("compare-oracle", frames, aggregate, warnings)?;
    if !pass {
        eprintln!("oracle mismatch: max absolute difference {max}");
    }
    Ok(Outcome { success: pass })
}

fn cmd_predict_band(ctx: &Ctx, a: &PredictBandArgs) -> anyhow::Result<Outcome> {
    let params = BandPredictorParams::new(a.half_width)?;
    let (records, failures) = load_records(&a.annotations)?;
    if !failures.is_empty() {
        bail!("invalid records: {}", list_failures(&failures));
    }
    create_dir(&a.out_dir)?;
    let frames = records
        .par_iter()
        .map(|rec| {
            let map = baseline::predict_map_from_trajectory(
                &rec.trajectory,
                rec.width as usize,
                rec.height as usize,
                &params,
            )?;
            let path = a.out_dir.join(format!("{}.png", rec.frame_id));
            write(&path, &confmap::encode_png(&map)?)?;
            Ok(OutputFrame {
                frame_id: rec.frame_id.clone(),
                output: Some(path.display().to_string()),
                error: None,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut frames = frames;
    frames.sort_by(|x, y| x.frame_id.cmp(&y.frame_id));
    let aggregate = OutputAggregate {
        written: frames.len(),
        failed: 0,
        partial: false,
    };
    ctx.emit("predict-band", frames, aggregate, Vec::new())?;
    Ok(Outcome::OK)
}

fn cmd_extrapolate(ctx: &Ctx, a: &ExtrapolateArgs) -> anyhow::Result<Outcome> {
    let histories = load_traj_map(&a.input)?;
    let mut out = BTreeMap::new();
    for (id, pts) in &histories {
        let t = baseline::extrapolate_trajectory(&to_points(pts), a.n)
            .with_context(|| format!("frame '{id}'"))?;
        out.insert(id.clone(), points_of(&t));
    }
    write_traj_map(a.output.as_deref(), &out)?;
    if a.output.is_some() {
        let frames: Vec<OutputFrame> = out
            .keys()
            .map(|id| OutputFrame {
                frame_id: id.clone(),
                output: a.output.as_ref().map(|p| p.display().to_string()),
                error: None,
            })
            .collect();
        let aggregate = OutputAggregate {
            written: frames.len(),
            failed: 0,
            partial: false,
        };
        ctx.emit("extrapolate", frames, aggregate, Vec::new())?;
    }
    Ok(Outcome::OK)
}
