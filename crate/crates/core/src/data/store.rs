//! On-disk containers.
//!
//! A *sample store* is a directory holding `samples.npy` (`<f4`, shape
//! `[n, 128, 9, 9]`) and a `samples.json` sidecar with per-sample metadata plus
//! a manifest (count, layout, label distribution, config hash).
//!
//! A *trial archive* is a directory holding `trials.json` and one pair of
//! `.npy` files per trial (`[channels, samples]` signal and baseline).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

use super::npy;
use super::sample::{EEGSample, Labels, Level, SampleMeta, TrialRecord, WINDOW};
use super::layout::GRID;

pub const SAMPLES_NPY: &str = "samples.npy";
pub const SAMPLES_JSON: &str = "samples.json";
pub const TRIALS_JSON: &str = "trials.json";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub valence: BTreeMap<String, usize>,
    pub arousal: BTreeMap<String, usize>,
    pub four_class: [usize; 4],
}

impl LabelDistribution {
    pub fn of(samples: &[EEGSample]) -> Self {
        let mut d = Self::default();
        let name = |l: Level| if l == Level::High { "high" } else { "low" }.to_string();
        for s in samples {
            *d.valence.entry(name(s.labels.valence)).or_default() += 1;
            *d.arousal.entry(name(s.labels.arousal)).or_default() += 1;
            d.four_class[s.labels.four_class()] += 1;
        }
        d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub format: String,
    pub version: u32,
    pub sample_count: usize,
    pub layout: String,
    pub label_distribution: LabelDistribution,
    pub config_hash: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SampleRecord {
    #[serde(flatten)]
    meta: SampleMeta,
    labels: Labels,
}

#[derive(Serialize, Deserialize)]
struct StoreSidecar {
    manifest: StoreManifest,
    samples: Vec<SampleRecord>,
}

pub fn write_samples(dir: &Path, samples: &[EEGSample], layout: &str, config_hash: &str) -> Result<StoreManifest> {
    std::fs::create_dir_all(dir).at(dir)?;
    let mut flat = Vec::with_capacity(samples.len() * WINDOW * GRID * GRID);
    for s in samples {
        flat.extend(s.grid.iter().copied());
    }
    npy::write_f32(&dir.join(SAMPLES_NPY), &[samples.len(), WINDOW, GRID, GRID], &flat)?;
    let manifest = StoreManifest {
        format: "ganser-samples".into(),
        version: 1,
        sample_count: samples.len(),
        layout: layout.to_string(),
        label_distribution: LabelDistribution::of(samples),
        config_hash: config_hash.to_string(),
    };
    let sidecar = StoreSidecar {
        manifest: manifest.clone(),
        samples: samples.iter().map(|s| SampleRecord { meta: s.meta.clone(), labels: s.labels }).collect(),
    };
    let path = dir.join(SAMPLES_JSON);
    std::fs::write(&path, serde_json::to_vec_pretty(&sidecar)?).at(&path)?;
    Ok(manifest)
}

pub fn read_samples(dir: &Path) -> Result<(Vec<EEGSample>, StoreManifest)> {
    let json_path = dir.join(SAMPLES_JSON);
    let text = std::fs::read_to_string(&json_path).map_err(|e| Error::Ingestion {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    let sidecar: StoreSidecar = serde_json::from_str(&text)
        .map_err(|e| Error::Ingestion { path: json_path.clone(), reason: e.to_string() })?;
    let npy_path = dir.join(SAMPLES_NPY);
    let arr = npy::read(&npy_path)?;
    let n = sidecar.samples.len();
    if arr.shape != [n, WINDOW, GRID, GRID] {
        return Err(Error::Schema(format!(
            "{}: shape {:?} does not match {n} samples of [128, 9, 9]",
            npy_path.display(),
            arr.shape
        )));
    }
    let flat = arr.into_f32();
    let per = WINDOW * GRID * GRID;
    let samples = sidecar
        .samples
        .into_iter()
        .enumerate()
        .map(|(i, rec)| {
            let grid = Array3::from_shape_vec((WINDOW, GRID, GRID), flat[i * per..(i + 1) * per].to_vec())
                .expect("grid shape");
            EEGSample { grid, labels: rec.labels, meta: rec.meta }
        })
        .collect();
    Ok((samples, sidecar.manifest))
}

#[derive(Serialize, Deserialize)]
struct TrialEntry {
    subject_id: String,
    trial_id: String,
    ratings: BTreeMap<String, f64>,
    signal: PathBuf,
    baseline: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct TrialIndex {
    format: String,
    version: u32,
    trials: Vec<TrialEntry>,
}

pub fn write_trial_archive(dir: &Path, trials: &[TrialRecord]) -> Result<()> {
    std::fs::create_dir_all(dir).at(dir)?;
    let mut entries = Vec::new();
    for (i, t) in trials.iter().enumerate() {
        let stem = format!("{i:05}");
        let signal = PathBuf::from(format!("{stem}_signal.npy"));
        let baseline = PathBuf::from(format!("{stem}_baseline.npy"));
        write_matrix(&dir.join(&signal), &t.signal)?;
        write_matrix(&dir.join(&baseline), &t.baseline)?;
        entries.push(TrialEntry {
            subject_id: t.subject_id.clone(),
            trial_id: t.trial_id.clone(),
            ratings: t.ratings.clone(),
            signal,
            baseline,
        });
    }
    let index = TrialIndex { format: "ganser-trials".into(), version: 1, trials: entries };
    let path = dir.join(TRIALS_JSON);
    std::fs::write(&path, serde_json::to_vec_pretty(&index)?).at(&path)
}

fn write_matrix(path: &Path, m: &Array2<f32>) -> Result<()> {
    let data: Vec<f32> = m.iter().copied().collect();
    npy::write_f32(path, &[m.nrows(), m.ncols()], &data)
}

fn read_matrix(path: &Path) -> Result<Array2<f32>> {
    let arr = npy::read(path)?;
    if arr.shape.len() != 2 {
        return Err(Error::Ingestion { path: path.to_path_buf(), reason: format!("expected a matrix, got shape {:?}", arr.shape) });
    }
    let (r, c) = (arr.shape[0], arr.shape[1]);
    Ok(Array2::from_shape_vec((r, c), arr.into_f32()).expect("matrix shape"))
}

pub fn read_trial_archive(dir: &Path) -> Result<Vec<TrialRecord>> {
    let path = dir.join(TRIALS_JSON);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Ingestion { path: path.clone(), reason: e.to_string() })?;
    let index: TrialIndex =
        serde_json::from_str(&text).map_err(|e| Error::Ingestion { path: path.clone(), reason: e.to_string() })?;
    index
        .trials
        .into_iter()
        .map(|e| {
            Ok(TrialRecord {
                signal: read_matrix(&dir.join(&e.signal))?,
                baseline: read_matrix(&dir.join(&e.baseline))?,
                subject_id: e.subject_id,
                trial_id: e.trial_id,
                ratings: e.ratings,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{synth_dataset, synth_trials, SyntheticSpec};

    #[test]
    fn sample_store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let samples = synth_dataset(&SyntheticSpec::new(4, 3, 0.2), 5).unwrap();
        let m = write_samples(dir.path(), &samples, "deap32", "abc").unwrap();
        assert_eq!(m.sample_count, 12);
        assert_eq!(m.label_distribution.four_class, [3, 3, 3, 3]);
        let (back, manifest) = read_samples(dir.path()).unwrap();
        assert_eq!(back, samples);
        assert_eq!(manifest, m);
    }

    #[test]
    fn trial_archive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let trials = synth_trials(&SyntheticSpec::new(2, 1, 0.3), 2, 3, 9).unwrap();
        write_trial_archive(dir.path(), &trials).unwrap();
        assert_eq!(read_trial_archive(dir.path()).unwrap(), trials);
    }

    #[test]
    fn missing_store_is_an_ingestion_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_samples(dir.path()), Err(Error::Ingestion { .. })));
        assert!(matches!(read_trial_archive(dir.path()), Err(Error::Ingestion { .. })));
    }
}
