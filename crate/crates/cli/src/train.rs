use std::fs;
use std::path::PathBuf;

use afford::descriptor::{save_descriptor, TrainingParams};
use afford::geometry::{load_ply, RigidPose};
use afford::keypoints::SamplingStrategy;
use afford::{train_affordance, SourceFiles};
use anyhow::Context;
use clap::Args;
use serde_json::json;

use crate::config::{require, Config};
use crate::{CmdResult, OutputContext};

const USAGE: &str = "usage: afford train --query <PLY> --scene <PLY> --pose <JSON> --out <JSON>";

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Query object cloud in its own frame.
    #[arg(long)]
    query: Option<PathBuf>,
    #[arg(long)]
    scene: Option<PathBuf>,
    /// `{"rotation": [[..],[..],[..]], "translation": [x, y, z]}` placing the query in the scene.
    #[arg(long)]
    pose: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keypoint sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Descriptor name; defaults to the output file stem.
    #[arg(long)]
    name: Option<String>,
    /// Number of keypoints.
    #[arg(long)]
    keypoints: Option<usize>,
    /// uniform, weighted-random or top-weight.
    #[arg(long)]
    strategy: Option<SamplingStrategy>,
}

pub fn run(a: TrainArgs) -> CmdResult {
    let config = Config::load_or_default(a.config.as_deref())?;
    let query_path = require(a.query, &config.paths.query, "query", USAGE)?;
    let scene_path = require(a.scene, &config.paths.scene, "scene", USAGE)?;
    let pose_path = require(a.pose, &config.paths.pose, "pose", USAGE)?;
    let out = require(a.out, &config.paths.out, "out", USAGE)?;

    let mut params = TrainingParams {
        ibs: config.ibs,
        keypoints: config.keypoints,
        thresholds: config.thresholds,
    };
    if let Some(seed) = a.seed {
        params.keypoints.seed = seed;
    }
    if let Some(n) = a.keypoints {
        params.keypoints.count = n;
    }
    if let Some(s) = a.strategy {
        params.keypoints.strategy = s;
    }

    let query = load_ply(&query_path).with_context(|| format!("query {}", query_path.display()))?;
    let scene = load_ply(&scene_path).with_context(|| format!("scene {}", scene_path.display()))?;
    let pose_text = fs::read_to_string(&pose_path)
        .with_context(|| format!("cannot read pose {}", pose_path.display()))?;
    let pose: RigidPose = serde_json::from_str(&pose_text)
        .with_context(|| format!("invalid pose {}", pose_path.display()))?;

    let name = a.name.unwrap_or_else(|| {
        out.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "descriptor".into())
    });
    let sources = SourceFiles {
        query: Some(query_path.display().to_string()),
        scene: Some(scene_path.display().to_string()),
    };
    let trained = train_affordance(&name, &query, &scene, &pose, &params, sources)
        .context("training failed")?;
    save_descriptor(&trained.descriptor, &out).output(&out)?;

    let d = &trained.descriptor;
    let s = &trained.stats;
    let summary = json!({
        "name": d.name,
        "out": out.display().to_string(),
        "keypoints": d.keypoints.len(),
        "anchor": d.anchor,
        "query_diag": d.query_diag,
        "ibs_samples": s.ibs_samples,
        "retained_samples": s.retained_samples,
        "pruned_samples": s.ibs_samples - s.retained_samples,
        "eps_ibs": s.eps_ibs,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}
