use std::collections::BTreeMap;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::layout::GRID;

pub const SAMPLE_RATE: usize = 128;
/// Time steps per sample: one second at 128 Hz.
pub const WINDOW: usize = SAMPLE_RATE;
pub const GRID_CELLS: usize = WINDOW * GRID * GRID;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Deap,
    Dreamer,
    Synthetic,
}

impl DatasetKind {
    /// Inclusive rating scale.
    pub fn rating_scale(self) -> (f64, f64) {
        match self {
            DatasetKind::Deap | DatasetKind::Synthetic => (1.0, 9.0),
            DatasetKind::Dreamer => (1.0, 5.0),
        }
    }

    /// Median split: ratings at or below the threshold are "low".
    pub fn rating_threshold(self) -> f64 {
        match self {
            DatasetKind::Deap | DatasetKind::Synthetic => 5.0,
            DatasetKind::Dreamer => 3.0,
        }
    }

    pub fn default_layout(self) -> &'static str {
        match self {
            DatasetKind::Deap | DatasetKind::Synthetic => "deap32",
            DatasetKind::Dreamer => "dreamer14",
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deap" => Ok(Self::Deap),
            "dreamer" => Ok(Self::Dreamer),
            "synth" | "synthetic" | "synthetic-archive" => Ok(Self::Synthetic),
            other => Err(Error::Argument(format!("unknown dataset kind `{other}`"))),
        }
    }
}

/// One recorded trial: experimental signal, resting baseline and self-ratings.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub subject_id: String,
    pub trial_id: String,
    /// `[channels, samples]` at 128 Hz.
    pub signal: Array2<f32>,
    /// `[channels, baseline_samples]` at 128 Hz.
    pub baseline: Array2<f32>,
    pub ratings: BTreeMap<String, f64>,
}

impl TrialRecord {
    pub fn channel_count(&self) -> usize {
        self.signal.nrows()
    }

    pub fn rating(&self, dimension: Dimension) -> Result<f64> {
        self.ratings
            .get(dimension.key())
            .copied()
            .ok_or_else(|| Error::Schema(format!("trial {} has no {} rating", self.trial_id, dimension.key())))
    }

    /// Checks channel agreement with the layout and ratings against the scale.
    pub fn validate(&self, channels: usize, kind: DatasetKind) -> Result<()> {
        if self.signal.nrows() != channels || self.baseline.nrows() != channels {
            return Err(Error::Schema(format!(
                "trial {}/{}: {} signal and {} baseline channels, layout expects {channels}",
                self.subject_id,
                self.trial_id,
                self.signal.nrows(),
                self.baseline.nrows()
            )));
        }
        let (lo, hi) = kind.rating_scale();
        for (k, &v) in &self.ratings {
            if !(lo..=hi).contains(&v) {
                return Err(Error::Schema(format!("trial {}: rating {k}={v} outside [{lo}, {hi}]", self.trial_id)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Valence,
    Arousal,
}

impl Dimension {
    pub fn key(self) -> &'static str {
        match self {
            Dimension::Valence => "valence",
            Dimension::Arousal => "arousal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub valence: Level,
    pub arousal: Level,
}

impl Labels {
    pub fn get(&self, dimension: Dimension) -> Level {
        match dimension {
            Dimension::Valence => self.valence,
            Dimension::Arousal => self.arousal,
        }
    }

    /// Quadrant index `2·[valence high] + [arousal high]`: LVLA=0, LVHA=1, HVLA=2, HVHA=3.
    pub fn four_class(&self) -> usize {
        2 * (self.valence == Level::High) as usize + (self.arousal == Level::High) as usize
    }

    pub fn from_four_class(class: usize) -> Self {
        let lvl = |b: bool| if b { Level::High } else { Level::Low };
        Self { valence: lvl(class & 2 != 0), arousal: lvl(class & 1 != 0) }
    }
}

/// Which label a classifier is trained to predict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Valence,
    Arousal,
    FourClass,
}

impl Protocol {
    pub fn n_classes(self) -> usize {
        match self {
            Protocol::FourClass => 4,
            _ => 2,
        }
    }

    pub fn target(self, labels: &Labels) -> usize {
        match self {
            Protocol::Valence => (labels.valence == Level::High) as usize,
            Protocol::Arousal => (labels.arousal == Level::High) as usize,
            Protocol::FourClass => labels.four_class(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Protocol::Valence => "valence",
            Protocol::Arousal => "arousal",
            Protocol::FourClass => "four-class",
        }
    }
}

impl From<Dimension> for Protocol {
    fn from(d: Dimension) -> Self {
        match d {
            Dimension::Valence => Protocol::Valence,
            Dimension::Arousal => Protocol::Arousal,
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valence" => Ok(Self::Valence),
            "arousal" => Ok(Self::Arousal),
            "four-class" | "four" => Ok(Self::FourClass),
            other => Err(Error::Argument(format!("unknown protocol `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub subject_id: String,
    pub trial_id: String,
    pub window_index: usize,
    #[serde(default)]
    pub fold_index: Option<usize>,
}

/// One second of EEG on the scalp grid, `[time=128, row=9, col=9]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EEGSample {
    pub grid: Array3<f32>,
    pub labels: Labels,
    pub meta: SampleMeta,
}

impl EEGSample {
    pub fn new(grid: Array3<f32>, labels: Labels, meta: SampleMeta) -> Result<Self> {
        if grid.shape() != [WINDOW, GRID, GRID] {
            return Err(Error::Schema(format!("sample grid has shape {:?}, expected [128, 9, 9]", grid.shape())));
        }
        Ok(Self { grid, labels, meta })
    }
}

/// Packs grids into a `[batch, 128, 9, 9]` network input.
pub fn grids_to_tensor<'a>(grids: impl IntoIterator<Item = &'a Array3<f32>>) -> Tensor {
    let mut data = Vec::new();
    let mut n = 0;
    for g in grids {
        assert_eq!(g.shape(), [WINDOW, GRID, GRID], "grid shape");
        data.extend(g.iter().map(|&v| v as f64));
        n += 1;
    }
    Tensor::new(vec![n, WINDOW, GRID, GRID], data)
}

/// Splits a `[batch, t, 9, 9]` tensor back into grids (rounded to `f32`).
pub fn tensor_to_grids(t: &Tensor) -> Vec<Array3<f32>> {
    let s = t.shape();
    let per: usize = s[1..].iter().product();
    t.data()
        .chunks(per)
        .map(|c| Array3::from_shape_vec((s[1], s[2], s[3]), c.iter().map(|&v| v as f32).collect()).expect("shape"))
        .collect()
}


/// Grids stored compactly as `f32`, converted to `f64` batches on demand.
pub trait BatchSource {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// `[idx.len(), 128, 9, 9]` batch in the given order.
    fn batch(&self, idx: &[usize]) -> Tensor;
}

impl BatchSource for Tensor {
    fn len(&self) -> usize {
        self.shape()[0]
    }

    fn batch(&self, idx: &[usize]) -> Tensor {
        self.gather(idx)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    data: Vec<f32>,
    count: usize,
}

impl GridSet {
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a EEGSample>) -> Self {
        let mut data = Vec::new();
        let mut count = 0;
        for s in samples {
            data.extend(s.grid.iter().copied());
            count += 1;
        }
        Self { data, count }
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * GRID_CELLS);
        for &i in idx {
            data.extend_from_slice(&self.data[i * GRID_CELLS..(i + 1) * GRID_CELLS]);
        }
        Self { data, count: idx.len() }
    }
}

impl BatchSource for GridSet {
    fn len(&self) -> usize {
        self.count
    }

    fn batch(&self, idx: &[usize]) -> Tensor {
        let mut out = Vec::with_capacity(idx.len() * GRID_CELLS);
        for &i in idx {
            out.extend(self.data[i * GRID_CELLS..(i + 1) * GRID_CELLS].iter().map(|&v| f64::from(v)));
        }
        Tensor::new(vec![idx.len(), WINDOW, GRID, GRID], out)
    }
}
