//! JSON run configuration. Every section is optional; missing fields take the
//! library defaults and command-line flags override whatever the file sets.

use std::fs;
use std::path::{Path, PathBuf};

use afford::descriptor::MatchThresholds;
use afford::detection::DetectionParams;
use afford::ibs::IbsParams;
use afford::keypoints::KeypointParams;
use afford::synth::TableParams;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub ibs: IbsParams,
    pub keypoints: KeypointParams,
    pub thresholds: MatchThresholds,
    pub detection: DetectionParams,
    pub table: TableParams,
    pub paths: Paths,
}

/// Input and output locations; a flag naming the same file wins.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub query: Option<PathBuf>,
    pub scene: Option<PathBuf>,
    pub pose: Option<PathBuf>,
    pub desc: Option<PathBuf>,
    pub desc_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub viz: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: Config = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        config
            .validate()
            .with_context(|| format!("invalid config {}", path.display()))?;
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Config> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }

    pub fn validate(&self) -> Result<()> {
        self.ibs.validate()?;
        self.thresholds.validate()?;
        self.detection.validate()?;
        self.table.validate()?;
        if self.keypoints.count == 0 {
            bail!("keypoints.count must be at least 1");
        }
        Ok(())
    }
}

/// The flag if given, else the config entry, else an error naming the flag.
pub fn require(
    flag: Option<PathBuf>,
    configured: &Option<PathBuf>,
    name: &str,
    usage: &str,
) -> Result<PathBuf> {
    match flag.or_else(|| configured.clone()) {
        Some(p) => Ok(p),
        None => bail!("missing required argument --{name}\n{usage}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let c: Config = serde_json::from_str("{}").unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<Config>(r#"{"detection": {"points": 3}}"#).is_err());
        assert!(serde_json::from_str::<Config>(r#"{"verbose": true}"#).is_err());
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let c: Config = serde_json::from_str(r#"{"ibs": {"grid_resolution": 32}}"#).unwrap();
        assert_eq!(c.ibs.grid_resolution, 32);
        assert_eq!(c.ibs.bbox_expand, IbsParams::default().bbox_expand);
    }

    #[test]
    fn module_invariants_are_rechecked() {
        let c: Config = serde_json::from_str(r#"{"ibs": {"grid_resolution": 4}}"#).unwrap();
        assert!(c.validate().is_err());
        let c: Config = serde_json::from_str(r#"{"detection": {"score_threshold": 2.0}}"#).unwrap();
        assert!(c.validate().is_err());
    }
}
