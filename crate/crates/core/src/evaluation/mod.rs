//! Cross-validated accuracy, FSTD, the ablation harness and topographic maps.

pub mod ablation;
pub mod fstd;
pub mod protocol;
pub mod topomap;

pub use ablation::Variant;
pub use fstd::{fstd, train_fstd_extractor, Extractor, FstdReport, FstdSummary};
pub use protocol::{
    ablation_run, aan_split, cross_validate, run_aan_stage, run_fold, targets, AanStage, AblationReport, AccuracyReport,
};
pub use topomap::{topomap_export, ColorScale, TopomapFrame, DEFAULT_TIMES};
