//! The evaluation protocol: an AAN trained once on a random share of the
//! samples, then per fold a classifier pretrained on the training folds,
//! fine-tuned against the frozen generator and scored on the held-out fold.

use serde::{Deserialize, Serialize};

use crate::aan::{train_aan, AanModels, AanOutcome, AanOutput};
use crate::augmentation::ChannelMask;
use crate::config::PipelineConfig;
use crate::data::{holdout_split, BatchSource, EEGSample, FoldAssignment, GridSet, Protocol};
use crate::error::{Error, Result};
use crate::models::{Generator, StNet};
use crate::mtn::{accuracy, finetune_mtn, pretrain_classifier};
use crate::seed;

use super::ablation::Variant;
use super::fstd::{Extractor, FstdSummary};

pub fn targets(samples: &[EEGSample], protocol: Protocol) -> Vec<usize> {
    samples.iter().map(|s| protocol.target(&s.labels)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub protocol: String,
    pub variant: Variant,
    pub fold_sizes: Vec<usize>,
    /// Held-out accuracy after pretraining, before fine-tuning.
    pub pretrain_accuracies: Vec<f64>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub config_hash: String,
}

impl AccuracyReport {
    pub fn table(&self) -> String {
        let mut out = format!("{} / {}\nfold  size  pretrain  final\n", self.protocol, self.variant.name());
        for (k, ((n, p), a)) in self.fold_sizes.iter().zip(&self.pretrain_accuracies).zip(&self.fold_accuracies).enumerate() {
            out.push_str(&format!("{k:>4}  {n:>4}  {:>8.2}  {:>5.2}\n", 100.0 * p, 100.0 * a));
        }
        out.push_str(&format!("mean              {:>5.2}\n", 100.0 * self.mean_accuracy));
        out
    }
}

/// Indices the AAN (and the FSTD extractors) train on, and the rest.
pub fn aan_split(n: usize, config: &PipelineConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    holdout_split(n, config.aan_fraction, config.derived_seeds().holdout)
}

pub struct AanStage {
    pub outcome: AanOutcome,
    pub train_idx: Vec<usize>,
    pub rest_idx: Vec<usize>,
}

/// Trains the AAN on the configured share of `data`.
pub fn run_aan_stage(data: &GridSet, mask: ChannelMask, config: &PipelineConfig, out: Option<&AanOutput>) -> Result<AanStage> {
    let cfg = config.effective();
    cfg.validate()?;
    let (train_idx, rest_idx) = aan_split(data.len(), &cfg)?;
    let aan = cfg.aan_config();
    let models = AanModels::init(cfg.generator_spec(), cfg.critic_spec(), mask, aan.seed)?;
    let outcome = train_aan(&data.subset(&train_idx), models, &aan, out)?;
    Ok(AanStage { outcome, train_idx, rest_idx })
}

/// Pretrain, fine-tune and score one fold. Returns `(pretrain, final)`
/// held-out accuracies and the fine-tuned classifier.
pub fn run_fold(
    data: &GridSet,
    targets: &[usize],
    folds: &FoldAssignment,
    fold: usize,
    config: &PipelineConfig,
    generator: Option<&Generator>,
) -> Result<(f64, f64, StNet)> {
    let cfg = config.effective();
    let (train, test) = (folds.train_indices(fold), folds.test_indices(fold));
    if train.is_empty() || test.is_empty() {
        return Err(Error::Argument(format!("fold {fold} has an empty train or test split")));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| targets[i]).collect::<Vec<_>>();
    let (train_set, test_set) = (data.subset(&train), data.subset(&test));
    let (y_train, y_test) = (pick(&train), pick(&test));
    let mtn = cfg.mtn_config(fold);
    let init = StNet::new(cfg.classifier_spec(), &mut seed::stream(mtn.seed, "init-c", 0))?;
    let pre = pretrain_classifier(init, &train_set, &y_train, &mtn, mtn.pretrain_epochs)?;
    let pre_acc = accuracy(&pre.classifier, &test_set, &y_test, mtn.batch_size)?;
    let tuned = finetune_mtn(pre.classifier, generator, &train_set, &y_train, &mtn)?;
    let acc = accuracy(&tuned.classifier, &test_set, &y_test, mtn.batch_size)?;
    log::info!("fold {fold}: pretrain {pre_acc:.4}, fine-tuned {acc:.4}");
    Ok((pre_acc, acc, tuned.classifier))
}

/// Cross-validated accuracy for `config.protocol`.
pub fn cross_validate(
    data: &GridSet,
    targets: &[usize],
    folds: &FoldAssignment,
    config: &PipelineConfig,
    generator: Option<&Generator>,
) -> Result<AccuracyReport> {
    let cfg = config.effective();
    cfg.validate()?;
    if folds.len() != data.len() || targets.len() != data.len() {
        return Err(Error::Argument(format!(
            "fold assignment covers {} samples, data has {} and targets {}",
            folds.len(),
            data.len(),
            targets.len()
        )));
    }
    if let Some(&y) = targets.iter().find(|&&y| y >= cfg.protocol.n_classes()) {
        return Err(Error::Argument(format!("target {y} for a {}-class protocol", cfg.protocol.n_classes())));
    }
    let mut pretrain_accuracies = Vec::new();
    let mut fold_accuracies = Vec::new();
    for k in 0..folds.k {
        let (p, a, _) = run_fold(data, targets, folds, k, &cfg, generator)?;
        pretrain_accuracies.push(p);
        fold_accuracies.push(a);
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / folds.k as f64;
    Ok(AccuracyReport {
        protocol: cfg.protocol.tag().to_string(),
        variant: cfg.variant,
        fold_sizes: folds.fold_sizes(),
        pretrain_accuracies,
        fold_accuracies,
        mean_accuracy,
        config_hash: cfg.hash(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub variant: Variant,
    pub accuracy: AccuracyReport,
    pub fstd: Option<FstdSummary>,
}

/// Runs the whole protocol with one component removed. When an extractor is
/// given, the variant's generator is also scored by FSTD on the samples
/// outside the AAN split.
pub fn ablation_run(
    variant: Variant,
    data: &GridSet,
    targets: &[usize],
    folds: &FoldAssignment,
    mask: ChannelMask,
    config: &PipelineConfig,
    extractor: Option<&Extractor>,
) -> Result<AblationReport> {
    let cfg = variant.apply(config);
    let stage = if variant.uses_generator() { Some(run_aan_stage(data, mask, &cfg, None)?) } else { None };
    let generator = stage.as_ref().map(|s| &s.outcome.generator);
    let accuracy = cross_validate(data, targets, folds, &cfg, generator)?;
    let fstd = match (extractor, &stage) {
        (Some(ex), Some(s)) if s.rest_idx.len() >= 2 => {
            let seed = seed::derive(cfg.seed, "fstd", 0);
            let r = ex.score_generator(&s.outcome.generator, data, &s.rest_idx, cfg.aan.tau(), seed, cfg.mtn.batch_size)?;
            Some(r.summary(s.rest_idx.len(), s.rest_idx.len()))
        }
        _ => None,
    };
    Ok(AblationReport { variant, accuracy, fstd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augmentation::build_channel_mask;
    use crate::data::{make_folds, synth_dataset, ElectrodeLayout, SyntheticSpec};
    use crate::models::{weights_sha256, GeneratorSpec, ModelScale};

    fn tiny_config() -> PipelineConfig {
        let mut c = PipelineConfig { folds: 3, scale: ModelScale::Tiny, classifier_dropout: 0.0, ..Default::default() };
        c.aan.epochs = 1;
        c.aan.batch_size = 8;
        c.aan.n_critic = 2;
        c.mtn.pretrain_epochs = 2;
        c.mtn.finetune_epochs = 1;
        c.mtn.batch_size = 8;
        c.mtn.lr_c = 1e-2;
        c
    }

    fn tiny_setup() -> (GridSet, Vec<usize>, FoldAssignment) {
        let samples = synth_dataset(&SyntheticSpec::new(2, 9, 0.3), 1).unwrap();
        let y = targets(&samples, Protocol::Valence);
        let folds = make_folds(samples.len(), 3, 5).unwrap();
        (GridSet::from_samples(&samples), y, folds)
    }

    fn tiny_generator() -> Generator {
        let mask = build_channel_mask(&ElectrodeLayout::deap32());
        Generator::new(GeneratorSpec::tiny(128), mask, &mut seed::stream(1, "g", 0)).unwrap()
    }

    #[test]
    fn folds_partition_the_samples() {
        let (data, _, folds) = tiny_setup();
        assert_eq!(folds.fold_sizes().iter().sum::<usize>(), data.len());
        for k in 0..3 {
            let (train, test) = (folds.train_indices(k), folds.test_indices(k));
            assert!(test.iter().all(|i| !train.contains(i)));
            assert_eq!(train.len() + test.len(), data.len());
        }
    }

    #[test]
    fn mismatched_folds_are_rejected() {
        let (data, y, _) = tiny_setup();
        let folds = make_folds(10, 2, 0).unwrap();
        let err = cross_validate(&data, &y, &folds, &tiny_config(), None).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn no_gan_diverges_from_the_full_pipeline() {
        let (data, y, folds) = tiny_setup();
        let g = tiny_generator();
        let full = tiny_config();
        let no_gan = Variant::NoGan.apply(&full);
        let (pa, _, a) = run_fold(&data, &y, &folds, 0, &full, Some(&g)).unwrap();
        let (pb, _, b) = run_fold(&data, &y, &folds, 0, &no_gan, Some(&g)).unwrap();
        // Pretraining is shared, so only the fine-tuning inputs differ.
        assert_eq!(pa, pb);
        assert_ne!(weights_sha256(&a), weights_sha256(&b));
    }

    #[test]
    fn cross_validation_report_is_consistent() {
        let (data, y, folds) = tiny_setup();
        let g = tiny_generator();
        let r = cross_validate(&data, &y, &folds, &tiny_config(), Some(&g)).unwrap();
        assert_eq!(r.fold_sizes, folds.fold_sizes());
        assert_eq!(r.fold_accuracies.len(), 3);
        assert!(r.fold_accuracies.iter().all(|a| (0.0..=1.0).contains(a)));
        let mean = r.fold_accuracies.iter().sum::<f64>() / 3.0;
        assert!((r.mean_accuracy - mean).abs() < 1e-15);
        assert_eq!(r, cross_validate(&data, &y, &folds, &tiny_config(), Some(&g)).unwrap());
    }

    #[test]
    fn ablation_runs_end_to_end() {
        let (data, y, folds) = tiny_setup();
        let mask = build_channel_mask(&ElectrodeLayout::deap32());
        for v in [Variant::NoGan, Variant::NoUnet, Variant::NoStnet] {
            let r = ablation_run(v, &data, &y, &folds, mask.clone(), &tiny_config(), None).unwrap();
            assert_eq!(r.accuracy.variant, v);
            assert!(r.fstd.is_none());
        }
    }

    #[test]
    fn accuracy_report_bookkeeping() {
        let r = AccuracyReport {
            protocol: "valence".into(),
            variant: Variant::Full,
            fold_sizes: vec![3, 3],
            pretrain_accuracies: vec![0.5, 1.0],
            fold_accuracies: vec![1.0, 0.5],
            mean_accuracy: 0.75,
            config_hash: "x".into(),
        };
        assert!(r.table().contains("75.00"));
    }

    #[test]
    fn aan_split_uses_the_configured_fraction() {
        let (train, rest) = aan_split(100, &PipelineConfig::default()).unwrap();
        assert_eq!((train.len(), rest.len()), (80, 20));
    }
}
