use std::fs;
use std::path::{Path, PathBuf};

use afford::detection::score_color;
use afford::geometry::{load_ply, save_ply, PlyFormat, PointCloud, RigidPose};
use afford::ibs::sample_ibs;
use afford::synth::{make_table_scene, make_training_pair, Archetype};
use anyhow::{anyhow, Context};
use clap::Args;

use crate::config::{require, Config};
use crate::{CmdResult, Failure, OutputContext};

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// table, place, hang or fill.
    #[arg(long)]
    kind: String,
    /// Scene PLY. Sidecars are written next to it: `<stem>.labels.json` for
    /// a table, `<stem>.query.ply` and `<stem>.pose.json` for a training pair.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write ASCII instead of binary PLY.
    #[arg(long)]
    ascii: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IbsArgs {
    #[arg(long)]
    query: Option<PathBuf>,
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Pose applied to the query first; without it the query is taken as already posed.
    #[arg(long)]
    pose: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).output(path)
}

pub fn run_synth(a: SynthArgs) -> CmdResult {
    const USAGE: &str = "usage: afford synth --kind table|place|hang|fill --out <PLY> [--seed N]";
    let config = Config::load_or_default(a.config.as_deref())?;
    let out = require(a.out, &config.paths.out, "out", USAGE)?;
    let format = if a.ascii {
        PlyFormat::Ascii
    } else {
        PlyFormat::BinaryLittleEndian
    };
    if a.kind == "table" {
        let scene = make_table_scene(&config.table, a.seed)?;
        save_ply(&scene.cloud, &out, format, None).output(&out)?;
        return write_text(&sidecar(&out, ".labels.json"), &scene.labels_json());
    }
    let archetype: Archetype = a
        .kind
        .parse()
        .map_err(|e: afford::Error| Failure::Input(anyhow!("{e}\n{USAGE}")))?;
    let pair = make_training_pair(archetype, a.seed)?;
    save_ply(&pair.scene, &out, format, None).output(&out)?;
    let query = sidecar(&out, ".query.ply");
    save_ply(&pair.query, &query, format, None).output(&query)?;
    let mut pose = serde_json::to_string_pretty(&pair.pose).expect("pose serializes");
    pose.push('\n');
    write_text(&sidecar(&out, ".pose.json"), &pose)
}

pub fn run_ibs(a: IbsArgs) -> CmdResult {
    const USAGE: &str = "usage: afford ibs --query <PLY> --scene <PLY> --out <PLY> [--pose <JSON>]";
    let config = Config::load_or_default(a.config.as_deref())?;
    let query_path = require(a.query, &config.paths.query, "query", USAGE)?;
    let scene_path = require(a.scene, &config.paths.scene, "scene", USAGE)?;
    let out = require(a.out, &config.paths.out, "out", USAGE)?;
    let mut query = load_ply(&query_path).with_context(|| format!("query {}", query_path.display()))?;
    let scene = load_ply(&scene_path).with_context(|| format!("scene {}", scene_path.display()))?;
    if let Some(p) = a.pose.or(config.paths.pose) {
        let text = fs::read_to_string(&p).with_context(|| format!("cannot read pose {}", p.display()))?;
        let pose: RigidPose =
            serde_json::from_str(&text).with_context(|| format!("invalid pose {}", p.display()))?;
        query = query.transformed(&pose);
    }
    let bisector = sample_ibs(&query, &scene, &config.ibs).context("bisector sampling failed")?;
    let far = bisector
        .samples
        .iter()
        .map(|s| s.d_query)
        .fold(0.0, f64::max);
    let colors: Vec<_> = bisector
        .samples
        .iter()
        .map(|s| score_color(if far > 0.0 { 1.0 - s.d_query / far } else { 1.0 }))
        .collect();
    let cloud = PointCloud::new(bisector.samples.iter().map(|s| s.p).collect())
        .context("bisector samples")?;
    save_ply(&cloud, &out, PlyFormat::BinaryLittleEndian, Some(&colors)).output(&out)?;
    log::info!(
        "{} bisector samples, eps_ibs {:e}",
        bisector.samples.len(),
        bisector.eps_ibs
    );
    Ok(())
}
