//! Dataset ingestion into [`TrialRecord`]s.
//!
//! * DEAP: the preprocessed MATLAB release, one `sNN.mat` per subject with
//!   `data` (trials × 40 channels × samples) and `labels` (trials × 4). The
//!   first 32 channels are EEG; the first 3 s of every trial are the baseline.
//! * DREAMER: the single `DREAMER.mat` release (`DREAMER.Data{subject}.EEG`
//!   with `baseline`/`stimuli` cells, `ScoreValence`/`ScoreArousal`).
//! * Synthetic: a trial archive written by [`super::store::write_trial_archive`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};

use super::mat5::{read_mat, MatValue};
use super::sample::{DatasetKind, TrialRecord, SAMPLE_RATE};
use super::store::read_trial_archive;

pub const DEAP_EEG_CHANNELS: usize = 32;
pub const DEAP_BASELINE_SECONDS: usize = 3;
pub const DREAMER_EEG_CHANNELS: usize = 14;

pub fn load_trials(kind: DatasetKind, path: &Path) -> Result<Vec<TrialRecord>> {
    if !path.exists() {
        return Err(Error::Ingestion { path: path.to_path_buf(), reason: "path does not exist".into() });
    }
    let trials = match kind {
        DatasetKind::Deap => load_deap(path)?,
        DatasetKind::Dreamer => load_dreamer(path)?,
        DatasetKind::Synthetic => read_trial_archive(path)?,
    };
    if trials.is_empty() {
        return Err(Error::Ingestion { path: path.to_path_buf(), reason: "no trials found".into() });
    }
    Ok(trials)
}

fn mat_files(path: &Path, pick: impl Fn(&str) -> bool) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = std::fs::read_dir(path)
        .map_err(|e| Error::Ingestion { path: path.to_path_buf(), reason: e.to_string() })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mat"))
        .filter(|p| p.file_stem().and_then(|s| s.to_str()).is_some_and(&pick))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Ingestion { path: path.to_path_buf(), reason: "no .mat files found".into() });
    }
    Ok(files)
}

fn ingest(path: &Path, reason: impl Into<String>) -> Error {
    Error::Ingestion { path: path.to_path_buf(), reason: reason.into() }
}

pub fn load_deap(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for file in mat_files(path, |stem| stem.starts_with('s'))? {
        let subject = file.file_stem().and_then(|s| s.to_str()).unwrap_or("s").to_string();
        let vars = read_mat(&file)?;
        let (dims, data) = vars
            .get("data")
            .and_then(MatValue::numeric)
            .ok_or_else(|| ingest(&file, "missing numeric `data` variable"))?;
        let (ldims, labels) = vars
            .get("labels")
            .and_then(MatValue::numeric)
            .ok_or_else(|| ingest(&file, "missing numeric `labels` variable"))?;
        if dims.len() != 3 {
            return Err(ingest(&file, format!("`data` has dims {dims:?}, expected trials×channels×samples")));
        }
        let (n_trials, n_channels, n_samples) = (dims[0], dims[1], dims[2]);
        if n_channels < DEAP_EEG_CHANNELS {
            return Err(Error::Schema(format!(
                "{}: {n_channels} channels, DEAP EEG needs {DEAP_EEG_CHANNELS}",
                file.display()
            )));
        }
        let base = DEAP_BASELINE_SECONDS * SAMPLE_RATE;
        if n_samples <= base {
            return Err(ingest(&file, format!("{n_samples} samples per trial leaves no signal after the baseline")));
        }
        if ldims.len() != 2 || ldims[0] != n_trials || ldims[1] < 2 {
            return Err(ingest(&file, format!("`labels` has dims {ldims:?} for {n_trials} trials")));
        }
        // Column-major: data[t + T·(c + C·s)].
        let at = |t: usize, c: usize, s: usize| data[t + n_trials * (c + n_channels * s)] as f32;
        for t in 0..n_trials {
            let baseline = Array2::from_shape_fn((DEAP_EEG_CHANNELS, base), |(c, s)| at(t, c, s));
            let signal = Array2::from_shape_fn((DEAP_EEG_CHANNELS, n_samples - base), |(c, s)| at(t, c, base + s));
            let ratings = BTreeMap::from([
                ("valence".to_string(), labels[t]),
                ("arousal".to_string(), labels[t + n_trials]),
            ]);
            out.push(TrialRecord {
                subject_id: subject.clone(),
                trial_id: format!("{subject}t{:02}", t + 1),
                signal,
                baseline,
                ratings,
            });
        }
    }
    Ok(out)
}

/// `[samples, channels]` column-major matrix → `[channels, samples]`.
fn channel_major(v: &MatValue, file: &Path, what: &str) -> Result<Array2<f32>> {
    let (dims, data) = v.numeric().ok_or_else(|| ingest(file, format!("{what} is not numeric")))?;
    if dims.len() != 2 {
        return Err(ingest(file, format!("{what} has dims {dims:?}")));
    }
    let (n, ch) = (dims[0], dims[1]);
    if ch != DREAMER_EEG_CHANNELS {
        return Err(Error::Schema(format!("{}: {what} has {ch} channels, DREAMER has {DREAMER_EEG_CHANNELS}", file.display())));
    }
    Ok(Array2::from_shape_fn((ch, n), |(c, s)| data[s + n * c] as f32))
}

pub fn load_dreamer(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for file in mat_files(path, |stem| stem.to_ascii_lowercase().contains("dreamer"))? {
        let vars = read_mat(&file)?;
        let root = vars.get("DREAMER").ok_or_else(|| ingest(&file, "missing `DREAMER` struct"))?;
        let subjects = root
            .field("Data")
            .and_then(MatValue::cells)
            .ok_or_else(|| ingest(&file, "missing `DREAMER.Data` cell array"))?;
        for (si, subject) in subjects.iter().enumerate() {
            let sid = format!("subject{:02}", si + 1);
            let eeg = subject.field("EEG").ok_or_else(|| ingest(&file, format!("{sid}: missing EEG")))?;
            let stimuli = eeg.field("stimuli").and_then(MatValue::cells).ok_or_else(|| ingest(&file, format!("{sid}: missing EEG.stimuli")))?;
            let baselines = eeg.field("baseline").and_then(MatValue::cells).ok_or_else(|| ingest(&file, format!("{sid}: missing EEG.baseline")))?;
            let score = |name: &str| -> Result<Vec<f64>> {
                subject
                    .field(name)
                    .and_then(MatValue::numeric)
                    .map(|(_, d)| d.to_vec())
                    .ok_or_else(|| ingest(&file, format!("{sid}: missing {name}")))
            };
            let (valence, arousal) = (score("ScoreValence")?, score("ScoreArousal")?);
            if stimuli.len() != baselines.len() || stimuli.len() != valence.len() || stimuli.len() != arousal.len() {
                return Err(ingest(&file, format!("{sid}: trial counts disagree")));
            }
            for t in 0..stimuli.len() {
                out.push(TrialRecord {
                    subject_id: sid.clone(),
                    trial_id: format!("{sid}t{:02}", t + 1),
                    signal: channel_major(&stimuli[t], &file, "stimuli")?,
                    baseline: channel_major(&baselines[t], &file, "baseline")?,
                    ratings: BTreeMap::from([
                        ("valence".to_string(), valence[t]),
                        ("arousal".to_string(), arousal[t]),
                    ]),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_is_an_ingestion_error() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [DatasetKind::Deap, DatasetKind::Dreamer, DatasetKind::Synthetic] {
            assert!(matches!(load_trials(kind, dir.path()), Err(Error::Ingestion { .. })), "{kind:?}");
        }
    }

    #[test]
    fn missing_path_names_the_file() {
        let err = load_trials(DatasetKind::Deap, Path::new("/nonexistent/s01.mat")).unwrap_err();
        assert!(err.to_string().contains("s01.mat"));
    }
}
