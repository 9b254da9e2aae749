//! EEG ingestion, preprocessing, synthetic data and on-disk stores.

pub mod folds;
pub mod layout;
pub mod loaders;
pub mod mat5;
pub mod npy;
pub mod preprocess;
pub mod sample;
pub mod store;
pub mod synth;

pub use folds::{holdout_split, make_folds, FoldAssignment};
pub use layout::{ElectrodeLayout, GRID};
pub use loaders::load_trials;
pub use preprocess::{preprocess_trial, preprocess_trials, PreprocessOptions};
pub use sample::{
    grids_to_tensor, tensor_to_grids, BatchSource, DatasetKind, GridSet, Dimension, EEGSample, Labels, Level, Protocol, SampleMeta,
    TrialRecord, GRID_CELLS, SAMPLE_RATE, WINDOW,
};
pub use store::{read_samples, read_trial_archive, write_samples, write_trial_archive, StoreManifest};
pub use synth::{synth_dataset, synth_trials, SyntheticSpec};
