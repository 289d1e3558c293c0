//! Run configuration shared by every command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detect::DetectConfig;
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::forgery::{CorpusParams, SynthParams};
use crate::localize::{ScorerSpec, DEFAULT_LAMBDA, DEFAULT_WIND};
use crate::media::{ColorMode, DEFAULT_FPS};

/// Corpus generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub n_manipulated: usize,
    pub n_pristine: usize,
    /// Synthetic source clips rendered when no inputs are given.
    pub n_sources: usize,
    pub synth: SynthParams,
    pub corpus: CorpusParams,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            n_manipulated: 10,
            n_pristine: 10,
            n_sources: 4,
            synth: SynthParams::default(),
            corpus: CorpusParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub detect: DetectConfig,
    pub scorer: ScorerSpec,
    pub lambda: f64,
    pub wind: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses every available core.
    pub jobs: Option<usize>,
    /// Frame rate assumed for image sequences.
    pub fps: f64,
    pub color_mode: ColorMode,
    /// File-name glob for image sequence directories.
    pub pattern: String,
    /// Video counts as manipulated when its score exceeds this.
    pub threshold: Option<f64>,
    pub heatmaps: bool,
    pub generate: GenerateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            detect: DetectConfig::default(),
            scorer: ScorerSpec::default(),
            lambda: DEFAULT_LAMBDA,
            wind: DEFAULT_WIND,
            seed: 0,
            out_dir: PathBuf::from("out"),
            jobs: None,
            fps: DEFAULT_FPS,
            color_mode: ColorMode::default(),
            pattern: "*".into(),
            threshold: None,
            heatmaps: false,
            generate: GenerateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| Error::Schema {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.detect.validate()?;
        self.generate.corpus.validate()?;
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be >= 0");
        }
        if self.wind == 0 {
            return bad("wind must be >= 1");
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1");
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad("fps must be positive");
        }
        if matches!(self.threshold, Some(t) if t.is_nan()) {
            return bad("threshold must be a number");
        }
        Ok(())
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            detect: self.detect.clone(),
            scorer: self.scorer.clone(),
            lambda: self.lambda,
            wind: self.wind,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(c.detect.window_length, 64);
        assert_eq!(c.detect.overlap, 16);
        assert_eq!((c.lambda, c.wind), (0.1, 3));
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_and_out_of_range() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lamda":0.2}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"detect":{"eps2":1}}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"jobs":0}"#).unwrap();
        assert!(c.validate().is_err());
        let c: RunConfig = serde_json::from_str(r#"{"detect":{"t2":2.0}}"#).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn bad_file_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, "{not json").unwrap();
        assert!(matches!(RunConfig::from_file(&p), Err(Error::Schema { .. })));
    }
}
