use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{apply_duplication, ManipulationSpec, TruthMask};
use crate::error::{Error, Result};
use crate::media::{read_y4m, write_y4m, ColorMode, VideoClip};

/// How far apart the copy is placed from its source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapPlacement {
    /// Uniform gap in `[min_gap, max_gap]`, copy before or after the source.
    #[default]
    Random,
    /// The copy directly abuts its source.
    Adjacent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusParams {
    /// Candidate duplication lengths in seconds.
    pub durations_s: Vec<f64>,
    pub noise_sigma: f64,
    pub min_gap: usize,
    pub max_gap: Option<usize>,
    pub placement: GapPlacement,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            durations_s: vec![0.5, 1.0, 2.0, 5.0, 10.0],
            noise_sigma: 0.0,
            min_gap: 1,
            max_gap: None,
            placement: GapPlacement::Random,
        }
    }
}

impl CorpusParams {
    pub fn validate(&self) -> Result<()> {
        if self.durations_s.is_empty() || self.durations_s.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter("durations_s must be non-empty and positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter("noise_sigma must be >= 0".into()));
        }
        if matches!(self.max_gap, Some(m) if m < self.min_gap) {
            return Err(Error::InvalidParameter("max_gap must be >= min_gap".into()));
        }
        Ok(())
    }
}

/// One manifest row. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusItem {
    pub id: String,
    pub path: PathBuf,
    pub truth_path: PathBuf,
    pub source_id: String,
    pub spec: Option<ManipulationSpec>,
    pub pristine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    pub params: CorpusParams,
    pub items: Vec<CorpusItem>,
}

/// A corpus item with its frames and labels in memory.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub item: CorpusItem,
    pub clip: VideoClip,
    pub truth: TruthMask,
}

fn pick_spec(
    clip: &VideoClip,
    params: &CorpusParams,
    rng: &mut ChaCha8Rng,
) -> Result<ManipulationSpec> {
    let n = clip.len();
    let seconds = params.durations_s[rng.random_range(0..params.durations_s.len())];
    let length = ((seconds * clip.fps()).round() as usize).max(1);
    let min_gap = match params.placement {
        GapPlacement::Random => params.min_gap,
        GapPlacement::Adjacent => 0,
    };
    if length + min_gap > n {
        return Err(Error::InsufficientFrames {
            required: length + min_gap,
            available: n,
        });
    }
    let gap = match params.placement {
        GapPlacement::Adjacent => 0,
        GapPlacement::Random => {
            let hi = params.max_gap.unwrap_or(usize::MAX).min(n - length);
            rng.random_range(min_gap..=hi)
        }
    };
    // copy after the source: s + L + g = p; copy before: p + g = s
    let slack = n - length - gap;
    let (source_start, insert_at) = if rng.random_bool(0.5) {
        let s = rng.random_range(0..=slack);
        (s, s + length + gap)
    } else {
        let p = rng.random_range(0..=slack);
        (p + gap, p)
    };
    Ok(ManipulationSpec {
        source_start,
        length,
        insert_at,
        noise_sigma: params.noise_sigma,
        seed: rng.next_u64(),
    })
}

/// Builds `n_manipulated` forgeries and `n_pristine` untouched clips, cycling
/// through `sources`. Deterministic in `seed`.
pub fn build_corpus(
    sources: &[VideoClip],
    n_manipulated: usize,
    n_pristine: usize,
    params: &CorpusParams,
    seed: u64,
) -> Result<Vec<CorpusEntry>> {
    params.validate()?;
    if sources.is_empty() && n_manipulated + n_pristine > 0 {
        return Err(Error::InvalidParameter("no source clips".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_manipulated + n_pristine);
    let item = |id: String, source: &VideoClip, spec: Option<ManipulationSpec>| CorpusItem {
        path: PathBuf::from("clips").join(format!("{id}.y4m")),
        truth_path: PathBuf::from("truth").join(format!("{id}.json")),
        source_id: source.source_id().to_string(),
        pristine: spec.is_none(),
        spec,
        id,
    };
    for k in 0..n_manipulated {
        let source = &sources[k % sources.len()];
        let spec = pick_spec(source, params, &mut rng)?;
        let (clip, truth) = apply_duplication(source, &spec)?;
        let id = format!("manip-{k:04}");
        out.push(CorpusEntry {
            clip: clip.with_source_id(id.clone()),
            item: item(id, source, Some(spec)),
            truth,
        });
    }
    for k in 0..n_pristine {
        let source = &sources[(n_manipulated + k) % sources.len()];
        let id = format!("pristine-{k:04}");
        out.push(CorpusEntry {
            clip: source.clone().with_source_id(id.clone()),
            truth: TruthMask::pristine(source.len()),
            item: item(id, source, None),
        });
    }
    Ok(out)
}

/// Builds a corpus and writes `clips/`, `truth/` and `manifest.json` under
/// `out_dir`.
pub fn generate_corpus(
    sources: &[VideoClip],
    n_manipulated: usize,
    n_pristine: usize,
    params: &CorpusParams,
    seed: u64,
    out_dir: &Path,
) -> Result<Manifest> {
    let entries = build_corpus(sources, n_manipulated, n_pristine, params, seed)?;
    for sub in ["clips", "truth"] {
        let dir = out_dir.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    for e in &entries {
        write_y4m(&out_dir.join(&e.item.path), &e.clip)?;
        write_json(&out_dir.join(&e.item.truth_path), &e.truth)?;
    }
    let manifest = Manifest {
        seed,
        params: params.clone(),
        items: entries.into_iter().map(|e| e.item).collect(),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Schema {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    read_json(path)
}

pub fn read_truth(path: &Path) -> Result<TruthMask> {
    read_json(path)
}

/// Loads every clip and truth mask listed in a manifest file.
pub fn load_corpus(manifest_path: &Path, mode: ColorMode) -> Result<Vec<CorpusEntry>> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    manifest
        .items
        .into_iter()
        .map(|item| {
            let clip = read_y4m(&base.join(&item.path), mode)?.with_source_id(item.id.clone());
            let truth = read_truth(&base.join(&item.truth_path))?;
            if truth.len() != clip.len() {
                return Err(Error::CountMismatch {
                    expected: clip.len(),
                    got: truth.len(),
                });
            }
            Ok(CorpusEntry { item, clip, truth })
        })
        .collect()
}
