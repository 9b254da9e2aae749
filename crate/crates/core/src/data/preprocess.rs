//! Trial → sample preprocessing: baseline removal, one-second windowing, grid
//! mapping and rating binarization.

use ndarray::{s, Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};

use super::layout::{ElectrodeLayout, GRID};
use super::sample::{DatasetKind, Dimension, EEGSample, Labels, Level, SampleMeta, TrialRecord, WINDOW};

/// Subtracts the mean baseline second from every experimental second.
///
/// The baseline is cut into 1-s chunks and averaged elementwise into a
/// `[channels, 128]` template; each experimental chunk has the template
/// subtracted. A trailing partial experimental chunk is corrected with the
/// template's leading columns. The baseline itself is kept untouched.
pub fn remove_baseline(trial: &TrialRecord) -> Result<TrialRecord> {
    let n_base = trial.baseline.ncols();
    if n_base == 0 {
        return Err(Error::Preprocessing(format!("trial {}: empty baseline", trial.trial_id)));
    }
    if !n_base.is_multiple_of(WINDOW) {
        return Err(Error::Preprocessing(format!(
            "trial {}: baseline length {n_base} is not a multiple of {WINDOW}",
            trial.trial_id
        )));
    }
    let template = baseline_template(trial.baseline.view());
    let mut signal = trial.signal.clone();
    for mut chunk in signal.axis_chunks_iter_mut(Axis(1), WINDOW) {
        let w = chunk.ncols();
        chunk -= &template.slice(s![.., ..w]);
    }
    Ok(TrialRecord { signal, ..trial.clone() })
}

fn baseline_template(baseline: ArrayView2<f32>) -> Array2<f32> {
    let chunks = baseline.ncols() / WINDOW;
    let mut acc = Array2::<f64>::zeros((baseline.nrows(), WINDOW));
    for chunk in baseline.axis_chunks_iter(Axis(1), WINDOW) {
        acc.zip_mut_with(&chunk, |a, &b| *a += b as f64);
    }
    acc.mapv(|v| (v / chunks as f64) as f32)
}

/// Non-overlapping 1-s windows `[channels, 128]`; trailing samples are dropped.
pub fn segment_windows(trial: &TrialRecord) -> Vec<Array2<f32>> {
    let n = trial.signal.ncols();
    if n < WINDOW {
        log::warn!("trial {}/{}: {n} samples is shorter than one window", trial.subject_id, trial.trial_id);
        return Vec::new();
    }
    (0..n / WINDOW)
        .map(|w| trial.signal.slice(s![.., w * WINDOW..(w + 1) * WINDOW]).to_owned())
        .collect()
}

/// Scatters a `[channels, 128]` window onto the `[128, 9, 9]` grid.
pub fn map_to_grid(window: ArrayView2<f32>, layout: &ElectrodeLayout) -> Result<Array3<f32>> {
    layout.validate()?;
    if window.nrows() != layout.channel_count() {
        return Err(Error::Schema(format!(
            "window has {} channels, layout {} has {}",
            window.nrows(),
            layout.name,
            layout.channel_count()
        )));
    }
    let t = window.ncols();
    let mut grid = Array3::<f32>::zeros((t, GRID, GRID));
    for (ch, (r, c)) in layout.positions().enumerate() {
        grid.slice_mut(s![.., r, c]).assign(&window.row(ch));
    }
    Ok(grid)
}

/// `rating ≤ threshold` is low, anything above is high.
pub fn binarize_rating(rating: f64, threshold: f64) -> Level {
    if rating <= threshold {
        Level::Low
    } else {
        Level::High
    }
}

/// Per-channel z-scoring of a trial's signal (optional, off by default).
pub fn zscore_channels(signal: &mut Array2<f32>) {
    for mut row in signal.rows_mut() {
        let n = row.len() as f64;
        let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        row.mapv_inplace(|v| if std > 0.0 { ((v as f64 - mean) / std) as f32 } else { 0.0 });
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PreprocessOptions {
    pub zscore: bool,
}

/// Full trial pipeline: baseline removal, windowing, grid mapping, labeling.
pub fn preprocess_trial(
    trial: &TrialRecord,
    layout: &ElectrodeLayout,
    kind: DatasetKind,
    options: PreprocessOptions,
) -> Result<Vec<EEGSample>> {
    trial.validate(layout.channel_count(), kind)?;
    let mut corrected = remove_baseline(trial)?;
    if options.zscore {
        zscore_channels(&mut corrected.signal);
    }
    let threshold = kind.rating_threshold();
    let labels = Labels {
        valence: binarize_rating(trial.rating(Dimension::Valence)?, threshold),
        arousal: binarize_rating(trial.rating(Dimension::Arousal)?, threshold),
    };
    segment_windows(&corrected)
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let meta = SampleMeta {
                subject_id: trial.subject_id.clone(),
                trial_id: trial.trial_id.clone(),
                window_index: i,
                fold_index: None,
            };
            EEGSample::new(map_to_grid(w.view(), layout)?, labels, meta)
        })
        .collect()
}

pub fn preprocess_trials(
    trials: &[TrialRecord],
    layout: &ElectrodeLayout,
    kind: DatasetKind,
    options: PreprocessOptions,
) -> Result<Vec<EEGSample>> {
    let mut out = Vec::new();
    for t in trials {
        out.extend(preprocess_trial(t, layout, kind, options)?);
    }
    Ok(out)
}
