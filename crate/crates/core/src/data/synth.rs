//! Desk-scale synthetic EEG: per-class spatial patterns driving a sinusoid.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::layout::ElectrodeLayout;
use super::preprocess::map_to_grid;
use super::sample::{EEGSample, Labels, SampleMeta, TrialRecord, SAMPLE_RATE, WINDOW};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassPattern {
    /// One weight per layout channel.
    pub weights: Vec<f64>,
    pub frequency_hz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub samples_per_class: usize,
    pub layout: String,
    pub noise_std: f64,
    pub amplitude: f64,
    /// Phases are drawn from `U[0, phase_jitter)` radians.
    pub phase_jitter: f64,
    pub class_patterns: Vec<ClassPattern>,
}

impl SyntheticSpec {
    /// Classes peak at distinct scalp regions and oscillate at 6, 14, 22 and 30 Hz.
    pub fn new(n_classes: usize, samples_per_class: usize, noise_std: f64) -> Self {
        let layout = ElectrodeLayout::deap32();
        let centers = [(2.0, 2.0), (6.0, 6.0), (2.0, 6.0), (6.0, 2.0)];
        let class_patterns = (0..n_classes.min(4))
            .map(|c| {
                let (cr, cc) = centers[c];
                let weights = layout
                    .positions()
                    .map(|(r, col)| {
                        let d2 = (r as f64 - cr).powi(2) + (col as f64 - cc).powi(2);
                        0.2 + (-d2 / 8.0).exp()
                    })
                    .collect();
                ClassPattern { weights, frequency_hz: 6.0 + 8.0 * c as f64 }
            })
            .collect();
        Self {
            n_classes,
            samples_per_class,
            layout: layout.name,
            noise_std,
            amplitude: 1.0,
            phase_jitter: std::f64::consts::FRAC_PI_4,
            class_patterns,
        }
    }

    pub fn validate(&self) -> Result<ElectrodeLayout> {
        if self.n_classes != 2 && self.n_classes != 4 {
            return Err(Error::Argument(format!("synthetic data supports 2 or 4 classes, got {}", self.n_classes)));
        }
        if self.class_patterns.len() != self.n_classes {
            return Err(Error::Argument("one class pattern per class is required".into()));
        }
        let layout = ElectrodeLayout::resolve(&self.layout)?;
        for p in &self.class_patterns {
            if !(4.0..=45.0).contains(&p.frequency_hz) {
                return Err(Error::Argument(format!("frequency {} Hz outside [4, 45]", p.frequency_hz)));
            }
            if p.weights.len() != layout.channel_count() {
                return Err(Error::Argument("class pattern size differs from the layout".into()));
            }
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Argument("noise_std must be non-negative".into()));
        }
        Ok(layout)
    }

    /// Class `c` of a 2-class set is LVLA (c=0) or HVHA (c=1); 4-class sets use quadrants.
    pub fn labels_for(&self, class: usize) -> Labels {
        if self.n_classes == 2 {
            Labels::from_four_class(if class == 0 { 0 } else { 3 })
        } else {
            Labels::from_four_class(class)
        }
    }

    fn signal(&self, class: usize, samples: usize, phase: f64, noise: &Normal<f64>, rng: &mut seed::Rng) -> Array2<f32> {
        let p = &self.class_patterns[class];
        let omega = 2.0 * std::f64::consts::PI * p.frequency_hz / SAMPLE_RATE as f64;
        Array2::from_shape_fn((p.weights.len(), samples), |(ch, t)| {
            let clean = self.amplitude * p.weights[ch] * (omega * t as f64 + phase).sin();
            (clean + noise.sample(rng)) as f32
        })
    }
}

/// Class-balanced samples, class-major order, deterministic under `seed`.
pub fn synth_dataset(spec: &SyntheticSpec, seed: u64) -> Result<Vec<EEGSample>> {
    let layout = spec.validate()?;
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Argument(e.to_string()))?;
    let mut rng = seed::stream(seed, "synth", 0);
    let mut out = Vec::with_capacity(spec.n_classes * spec.samples_per_class);
    for class in 0..spec.n_classes {
        for i in 0..spec.samples_per_class {
            let phase = rng.random::<f64>() * spec.phase_jitter;
            let window = spec.signal(class, WINDOW, phase, &noise, &mut rng);
            let meta = SampleMeta {
                subject_id: "synth".into(),
                trial_id: format!("class{class}"),
                window_index: i,
                fold_index: None,
            };
            out.push(EEGSample::new(map_to_grid(window.view(), &layout)?, spec.labels_for(class), meta)?);
        }
    }
    Ok(out)
}

/// Raw trials for the synthetic archive: a 3-s baseline of noise plus a
/// per-channel DC offset shared with the experimental signal, so baseline
/// removal has something to remove.
pub fn synth_trials(spec: &SyntheticSpec, trials_per_class: usize, seconds: usize, seed: u64) -> Result<Vec<TrialRecord>> {
    let layout = spec.validate()?;
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Argument(e.to_string()))?;
    let mut rng = seed::stream(seed, "synth-trials", 0);
    let mut out = Vec::new();
    for class in 0..spec.n_classes {
        let labels = spec.labels_for(class);
        let rating = |high: bool| if high { 7.0 } else { 3.0 };
        for t in 0..trials_per_class {
            let offsets: Vec<f32> = (0..layout.channel_count()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let phase = rng.random::<f64>() * spec.phase_jitter;
            let mut signal = spec.signal(class, seconds * SAMPLE_RATE, phase, &noise, &mut rng);
            let mut baseline = Array2::from_shape_fn((layout.channel_count(), 3 * SAMPLE_RATE), |_| noise.sample(&mut rng) as f32);
            for (ch, off) in offsets.iter().enumerate() {
                signal.row_mut(ch).mapv_inplace(|v| v + off);
                baseline.row_mut(ch).mapv_inplace(|v| v + off);
            }
            let ratings = BTreeMap::from([
                ("valence".to_string(), rating(labels.valence == super::sample::Level::High)),
                ("arousal".to_string(), rating(labels.arousal == super::sample::Level::High)),
            ]);
            out.push(TrialRecord {
                subject_id: "synth".into(),
                trial_id: format!("c{class}t{t:03}"),
                signal,
                baseline,
                ratings,
            });
        }
    }
    Ok(out)
}
