//! Datasets: the synthetic benchmark, OFF ingestion, on-disk caches and the
//! JSON manifest that ties them together.

pub mod cache;
pub mod off;
pub mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{farthest_point_sample, normalize, PointCloud};
use crate::rng;

pub use synth::{synth_generate, Family, SynthClassSpec};

pub const DEFAULT_POINTS: usize = 256;
pub const DEFAULT_TRAIN_PER_CLASS: usize = 20;
pub const DEFAULT_TEST_PER_CLASS: usize = 10;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic,
    OffFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub train: SynthClassSpec,
    pub test: SynthClassSpec,
    pub train_seed: u64,
    pub test_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestClass {
    pub class_id: String,
    /// Paths relative to the manifest's directory.
    pub train: Vec<String>,
    pub test: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub provenance: Provenance,
    pub n: usize,
    pub classes: Vec<ManifestClass>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.classes {
            if !seen.insert(c.class_id.as_str()) {
                return Err(Error::Config(format!("duplicate class `{}`", c.class_id)));
            }
            if c.train.len() < 2 || c.test.is_empty() {
                return Err(Error::Config(format!(
                    "class `{}` needs >= 2 train and >= 1 test samples",
                    c.class_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassData {
    pub class_id: String,
    pub train: Vec<PointCloud>,
    pub test: Vec<PointCloud>,
}

/// Clouds in memory, normalized and resampled to `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub classes: Vec<ClassData>,
}

impl Dataset {
    pub fn class_ids(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.class_id.clone()).collect()
    }

    pub fn class(&self, id: &str) -> Option<&ClassData> {
        self.classes.iter().find(|c| c.class_id == id)
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub manifest: DatasetManifest,
    pub dataset: Dataset,
}

fn cache_name(class: &str, split: &str, i: usize) -> String {
    format!("{class}/{split}_{i:03}.mirp")
}

/// One family per class, train and test drawn from separate seed streams.
pub fn build_benchmark(
    n_classes: usize,
    per_class_train: usize,
    per_class_test: usize,
    n: usize,
    seed: u64,
) -> Result<Benchmark> {
    if n_classes > Family::ALL.len() {
        return Err(Error::TooManyClasses {
            requested: n_classes,
            available: Family::ALL.len(),
        });
    }
    if n_classes == 0 || per_class_train == 0 || per_class_test == 0 {
        return Err(Error::BadSpec("benchmark counts must be >= 1".into()));
    }
    let mut classes = Vec::with_capacity(n_classes);
    let mut entries = Vec::with_capacity(n_classes);
    for (ci, family) in Family::ALL.into_iter().take(n_classes).enumerate() {
        let train_spec = SynthClassSpec::with_defaults(family, per_class_train);
        let test_spec = SynthClassSpec::with_defaults(family, per_class_test);
        let train_seed = rng::derive(seed, "train", ci as u64);
        let test_seed = rng::derive(seed, "test", ci as u64);
        let id = family.name().to_string();
        entries.push(ManifestClass {
            class_id: id.clone(),
            train: (0..per_class_train)
                .map(|i| cache_name(&id, "train", i))
                .collect(),
            test: (0..per_class_test)
                .map(|i| cache_name(&id, "test", i))
                .collect(),
            generator: Some(GeneratorRecord {
                train: train_spec.clone(),
                test: test_spec.clone(),
                train_seed,
                test_seed,
            }),
        });
        classes.push(ClassData {
            class_id: id,
            train: synth_generate(&train_spec, n, train_seed)?,
            test: synth_generate(&test_spec, n, test_seed)?,
        });
    }
    Ok(Benchmark {
        manifest: DatasetManifest {
            provenance: Provenance::Synthetic,
            n,
            classes: entries,
        },
        dataset: Dataset { n, classes },
    })
}

pub fn manifest_to_json(manifest: &DatasetManifest) -> String {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    s.push('\n');
    s
}

/// Write every cloud as a `MIRP` cache plus `manifest.json`; returns the
/// manifest path.
pub fn write_benchmark(bench: &Benchmark, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    for (entry, data) in bench.manifest.classes.iter().zip(&bench.dataset.classes) {
        let class_dir = dir.join(&entry.class_id);
        fs::create_dir_all(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
        for (rel, pc) in entry
            .train
            .iter()
            .zip(&data.train)
            .chain(entry.test.iter().zip(&data.test))
        {
            cache::save_cloud(pc, dir.join(rel))?;
        }
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest_to_json(&bench.manifest)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    manifest.validate()?;
    Ok(manifest)
}

/// Normalize, subsample to `n` points by FPS, and normalize again.
pub fn prepare_cloud(raw: &PointCloud, n: usize) -> Result<PointCloud> {
    let unit = normalize(raw)?;
    if unit.len() == n {
        return Ok(unit);
    }
    normalize(&farthest_point_sample(&unit, n)?)
}

/// Load every cloud listed in a manifest. Synthetic manifests point at `MIRP`
/// caches, OFF manifests at mesh files that are resampled on load.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Dataset> {
    let manifest_path = manifest_path.as_ref();
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let load = |rel: &String, class_id: &str| -> Result<PointCloud> {
        let path = base.join(rel);
        let mut pc = match manifest.provenance {
            Provenance::Synthetic => cache::load_cloud(&path)?,
            Provenance::OffFiles => prepare_cloud(&off::read_off(&path)?, manifest.n)?,
        };
        if pc.len() != manifest.n {
            return Err(Error::DimensionMismatch(format!(
                "{} has {} points, manifest says {}",
                path.display(),
                pc.len(),
                manifest.n
            )));
        }
        pc.label = Some(class_id.to_string());
        Ok(pc)
    };
    let classes = manifest
        .classes
        .iter()
        .map(|c| {
            Ok(ClassData {
                class_id: c.class_id.clone(),
                train: c
                    .train
                    .iter()
                    .map(|p| load(p, &c.class_id))
                    .collect::<Result<_>>()?,
                test: c
                    .test
                    .iter()
                    .map(|p| load(p, &c.class_id))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        n: manifest.n,
        classes,
    })
}
