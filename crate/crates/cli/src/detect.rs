use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use afford::descriptor::{load_descriptor, AffordanceDescriptor};
use afford::detection::{
    batch_detect_at_points, sample_test_points, visualization_cloud, Detection, DetectionParams,
    DetectionRecord, DetectionsReport, GroupSummary, Timing,
};
use afford::geometry::{load_ply, save_ply, PlyFormat, PointCloud, SceneIndex, Vector3};
use anyhow::{anyhow, Context};
use clap::Args;

use crate::config::{require, Config};
use crate::{CmdResult, DetectionFlags, Failure, OutputContext};

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long)]
    desc: Option<PathBuf>,
    #[command(flatten)]
    flags: DetectionFlags,
}

#[derive(Args, Debug)]
pub struct BatchArgs {
    /// Directory whose `*.json` files are all descriptors, run in file-name order.
    #[arg(long)]
    desc_dir: Option<PathBuf>,
    #[command(flatten)]
    flags: DetectionFlags,
}

struct Setup {
    config: Config,
    params: DetectionParams,
    scene_path: PathBuf,
    out: PathBuf,
    viz: Option<PathBuf>,
}

fn setup(flags: &DetectionFlags, usage: &str) -> Result<Setup, Failure> {
    let config = Config::load_or_default(flags.config.as_deref())?;
    let scene_path = require(flags.scene.clone(), &config.paths.scene, "scene", usage)?;
    let out = require(flags.out.clone(), &config.paths.out, "out", usage)?;
    let mut params = config.detection;
    if let Some(n) = flags.points {
        params.n_test_points = n;
    }
    if let Some(n) = flags.orientations {
        params.n_orientations = n;
    }
    if let Some(s) = flags.seed {
        params.seed = s;
    }
    if let Some(t) = flags.threshold {
        params.score_threshold = t;
    }
    params.validate()?;
    let viz = flags.viz.clone().or_else(|| config.paths.viz.clone());
    Ok(Setup {
        config,
        params,
        scene_path,
        out,
        viz,
    })
}

struct Run {
    groups: Vec<Vec<Detection>>,
    timing: Timing,
    scene: PointCloud,
}

fn run_all(descriptors: &[AffordanceDescriptor], s: &Setup) -> Result<Run, Failure> {
    let wall = Instant::now();
    let scene = load_ply(&s.scene_path).with_context(|| format!("scene {}", s.scene_path.display()))?;
    let t = Instant::now();
    let index = SceneIndex::build(&scene)?;
    let index_build_ms = ms(t);
    let points = sample_test_points(&scene, s.params.n_test_points, s.params.seed)?;
    let t = Instant::now();
    let groups = batch_detect_at_points(descriptors, &index, &points, &s.params)?;
    let scoring_ms = ms(t);
    Ok(Run {
        groups,
        timing: Timing {
            index_build_ms,
            scoring_ms,
            wall_ms: Some(ms(wall)),
        },
        scene,
    })
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn write_outputs(
    s: &Setup,
    report: &DetectionsReport,
    run: &Run,
    descriptors: &[(PathBuf, AffordanceDescriptor)],
) -> CmdResult {
    let text = report.to_json();
    fs::write(&s.out, text).output(&s.out)?;
    if let Some(viz) = &s.viz {
        let models: Vec<Vec<Vector3>> = descriptors
            .iter()
            .map(|(path, d)| instance_model(path, d))
            .collect();
        let pairs: Vec<(&Detection, &[Vector3])> = run
            .groups
            .iter()
            .zip(&models)
            .flat_map(|(g, m)| g.iter().map(move |det| (det, m.as_slice())))
            .collect();
        let (cloud, colors) = visualization_cloud(&run.scene, &pairs);
        save_ply(&cloud, viz, PlyFormat::BinaryLittleEndian, Some(&colors)).output(viz)?;
    }
    Ok(())
}

/// The query model relative to the anchor, in the training frame. Loaded from
/// the descriptor's recorded query file (as given, then next to the
/// descriptor); the keypoint sites stand in when it cannot be found.
fn instance_model(desc_path: &Path, d: &AffordanceDescriptor) -> Vec<Vector3> {
    let candidates = d.provenance.query_file.iter().flat_map(|q| {
        let q = PathBuf::from(q);
        let beside = desc_path.parent().map(|dir| dir.join(&q));
        std::iter::once(q).chain(beside)
    });
    for path in candidates {
        if let Ok(query) = load_ply(&path) {
            let pose = d.provenance.pose;
            return query.iter().map(|p| pose.apply(p) - d.anchor).collect();
        }
    }
    log::warn!(
        "query model for {:?} not found; instancing keypoint sites instead",
        d.name
    );
    d.keypoints.iter().map(|k| k.offset).collect()
}

fn load_named(path: &Path) -> Result<AffordanceDescriptor, Failure> {
    load_descriptor(path)
        .with_context(|| format!("descriptor {}", path.display()))
        .map_err(Failure::Input)
}

pub fn run_detect(a: DetectArgs) -> CmdResult {
    const USAGE: &str = "usage: afford detect --desc <JSON> --scene <PLY> --out <JSON>";
    let s = setup(&a.flags, USAGE)?;
    let desc_path = require(a.desc, &s.config.paths.desc, "desc", USAGE)?;
    let d = load_named(&desc_path)?;
    let descriptors = vec![(desc_path, d)];
    let only: Vec<AffordanceDescriptor> = descriptors.iter().map(|(_, d)| d.clone()).collect();
    let mut run = run_all(&only, &s)?;
    run.timing.wall_ms = None;
    let report = DetectionsReport {
        scene_file: s.scene_path.display().to_string(),
        params: s.params,
        groups: None,
        results: run.groups[0].iter().map(DetectionRecord::from).collect(),
        timing: run.timing,
    };
    write_outputs(&s, &report, &run, &descriptors)
}

pub fn run_batch(a: BatchArgs) -> CmdResult {
    const USAGE: &str = "usage: afford batch --desc-dir <DIR> --scene <PLY> --out <JSON>";
    let s = setup(&a.flags, USAGE)?;
    let dir = require(a.desc_dir, &s.config.paths.desc_dir, "desc-dir", USAGE)?;
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .with_context(|| format!("cannot read descriptor directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::Input(anyhow!(
            "no *.json descriptors in {}",
            dir.display()
        )));
    }
    let descriptors = files
        .into_iter()
        .map(|p| load_named(&p).map(|d| (p, d)))
        .collect::<Result<Vec<_>, _>>()?;
    let only: Vec<AffordanceDescriptor> = descriptors.iter().map(|(_, d)| d.clone()).collect();
    let run = run_all(&only, &s)?;
    let groups = descriptors
        .iter()
        .zip(&run.groups)
        .map(|((path, d), g)| GroupSummary {
            descriptor: d.name.clone(),
            file: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            detections: g.len(),
        })
        .collect();
    let report = DetectionsReport {
        scene_file: s.scene_path.display().to_string(),
        params: s.params,
        groups: Some(groups),
        results: run.groups.iter().flatten().map(DetectionRecord::from).collect(),
        timing: run.timing,
    };
    write_outputs(&s, &report, &run, &descriptors)
}
