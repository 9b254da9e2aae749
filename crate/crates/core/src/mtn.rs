//! Multi-factor training network: cross-entropy pretraining of the STNet
//! classifier `C`, then fine-tuning with the multi-factor self-supervised
//! loss against a frozen generator:
//!
//! `L = −(1/n) Σ log C(e_i)[y_i] + (λ_a/n) Σ (1−τ_i) ‖C_x(G(δ(e_i,τ_i))) − C_x(e_i)‖²`
//!
//! Augmented samples are synthesized in-line for every batch and never stored.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augmentation::{mask_batch, sample_tau, TauRange};
use crate::autograd::{add, grad, log_softmax, mean_all, mul, no_grad, scale, square, sub, sum_all, sum_inner, Var};
use crate::data::BatchSource;
use crate::error::{Error, Result};
use crate::models::{Generator, StNet};
use crate::nn::{Adam, AdamConfig, AdamState, Module};
use crate::seed::{self, Rng};
use crate::tensor::Tensor;

/// How generated samples enter fine-tuning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinetuneMode {
    /// Feature-distance term weighted by surrogate confidence.
    #[default]
    Msl,
    /// Generated samples carry their source labels and join the
    /// cross-entropy term (the no-MSL ablation).
    AugmentedCrossEntropy,
    /// No generated samples; plain continued training (the no-GAN ablation).
    CrossEntropyOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MtnConfig {
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub lr_c: f64,
    pub lambda_a: f64,
    pub tau_range: [f64; 2],
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub mode: FinetuneMode,
    /// Off for the no-masking-transform ablation: `G` then sees `e` itself.
    pub masking: bool,
}

impl Default for MtnConfig {
    fn default() -> Self {
        Self {
            pretrain_epochs: 300,
            finetune_epochs: 300,
            lr_c: 1e-5,
            lambda_a: 0.5,
            tau_range: [0.5, 0.9],
            batch_size: 64,
            beta1: 0.9,
            beta2: 0.99,
            weight_decay: 5e-4,
            seed: 0,
            mode: FinetuneMode::Msl,
            masking: true,
        }
    }
}

impl MtnConfig {
    pub fn tau(&self) -> TauRange {
        TauRange { min: self.tau_range[0], max: self.tau_range[1] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr_c > 0.0) {
            return Err(Error::Config("mtn: lr_c must be positive".into()));
        }
        if !(self.lambda_a >= 0.0) {
            return Err(Error::Config("mtn: lambda_a must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("mtn: batch_size must be positive".into()));
        }
        self.tau().validate().map_err(|e| Error::Config(format!("mtn: {e}")))
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr_c, beta1: self.beta1, beta2: self.beta2, eps: 1e-8, weight_decay: self.weight_decay }
    }
}

fn one_hot(targets: &[usize], classes: usize) -> Result<Tensor> {
    let mut t = Tensor::zeros(&[targets.len(), classes]);
    for (i, &y) in targets.iter().enumerate() {
        if y >= classes {
            return Err(Error::Argument(format!("label {y} for a {classes}-class head")));
        }
        t.data_mut()[i * classes + y] = 1.0;
    }
    Ok(t)
}

/// Mean negative log-likelihood of `targets` under `softmax(logits)`.
pub fn cross_entropy(logits: &Var, targets: &[usize]) -> Result<Var> {
    let s = logits.shape();
    if s.len() != 2 || s[0] != targets.len() {
        return Err(Error::Argument(format!("logits {s:?} for {} targets", targets.len())));
    }
    let picked = mul(&log_softmax(logits), &Var::constant(one_hot(targets, s[1])?));
    Ok(scale(&sum_all(&picked), -1.0 / targets.len() as f64))
}

pub struct MslLoss {
    pub total: Var,
    pub cross_entropy: f64,
    /// `(1/n) Σ (1−τ_i) ‖ΔC_x‖²`, before the `λ_a` factor.
    pub feature_term: f64,
    /// Real-branch logits from the same forward pass.
    pub logits: Tensor,
}

/// Multi-factor self-supervised loss. `generated` is `G(δ(e,τ))`, already
/// produced by the frozen generator; gradients reach `C` only. `τ_i = 1` is
/// accepted as the degenerate zero-confidence weight. Each branch takes its
/// own dropout RNG (`None` for evaluation mode).
#[allow(clippy::too_many_arguments)]
pub fn msl_loss(
    classifier: &StNet,
    real: &Tensor,
    generated: &Tensor,
    targets: &[usize],
    taus: &[f64],
    lambda_a: f64,
    real_rng: Option<&mut Rng>,
    generated_rng: Option<&mut Rng>,
) -> Result<MslLoss> {
    let n = real.shape()[0];
    if !(lambda_a >= 0.0) {
        return Err(Error::Argument(format!("lambda_a must be non-negative, got {lambda_a}")));
    }
    if taus.len() != n || targets.len() != n || generated.shape() != real.shape() {
        return Err(Error::Argument("real, generated, targets and taus must agree in batch size".into()));
    }
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Argument(format!("tau {t} outside [0, 1]")));
    }
    let f_real = classifier.features(&Var::constant(real.clone()), real_rng);
    let logits = classifier.head.forward(&f_real);
    let ce = cross_entropy(&logits, targets)?;
    let f_gen = classifier.features(&Var::constant(generated.clone()), generated_rng);
    let weights = Var::constant(Tensor::new(vec![n], taus.iter().map(|t| 1.0 - t).collect()));
    let dist = sum_inner(&square(&sub(&f_gen, &f_real)), 1);
    let feature = mean_all(&mul(&weights, &dist));
    let (cross_entropy, feature_term) = (ce.item(), feature.item());
    Ok(MslLoss { total: add(&ce, &scale(&feature, lambda_a)), cross_entropy, feature_term, logits: logits.value() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
}

/// Evaluation-mode accuracy.
pub fn accuracy(classifier: &StNet, data: &dyn BatchSource, targets: &[usize], batch_size: usize) -> Result<f64> {
    if data.len() != targets.len() || data.is_empty() {
        return Err(Error::Argument("accuracy needs one target per sample and at least one sample".into()));
    }
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut correct = 0;
    for chunk in idx.chunks(batch_size.max(1)) {
        let p = classifier.predict(&data.batch(chunk))?;
        let k = p.shape()[1];
        for (row, &i) in p.data().chunks(k).zip(chunk) {
            let arg = (0..k).max_by(|&a, &b| row[a].total_cmp(&row[b])).expect("non-empty head");
            correct += usize::from(arg == targets[i]);
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

fn check_finite(v: f64, what: &str, epoch: usize, batch: usize) -> Result<()> {
    if v.is_finite() { Ok(()) } else { Err(Error::Numeric(format!("non-finite {what} at epoch {epoch}, batch {batch}"))) }
}

fn check_targets(data: &dyn BatchSource, targets: &[usize]) -> Result<()> {
    if data.len() != targets.len() {
        return Err(Error::Argument(format!("{} samples but {} targets", data.len(), targets.len())));
    }
    if data.is_empty() {
        return Err(Error::Argument("empty training set".into()));
    }
    Ok(())
}

pub struct TrainedClassifier {
    pub classifier: StNet,
    pub optimizer: AdamState,
    pub history: Vec<EpochStats>,
}

/// Cross-entropy training for `epochs` epochs.
pub fn pretrain_classifier(
    classifier: StNet,
    data: &dyn BatchSource,
    targets: &[usize],
    config: &MtnConfig,
    epochs: usize,
) -> Result<TrainedClassifier> {
    config.validate()?;
    check_targets(data, targets)?;
    let params = classifier.parameters();
    let mut opt = Adam::new(config.adam(), &params);
    let mut history = Vec::new();
    let n = data.len();
    for epoch in 0..epochs {
        let mut rng = seed::stream(config.seed, "pretrain", epoch as u64);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let y: Vec<usize> = idx.iter().map(|&i| targets[i]).collect();
            let logits = classifier.logits(&Var::constant(data.batch(idx)), Some(&mut rng));
            correct += count_correct(&logits.value(), &y);
            let loss = cross_entropy(&logits, &y)?;
            check_finite(loss.item(), "cross-entropy", epoch, b)?;
            loss_sum += loss.item() * idx.len() as f64;
            opt.step(&params, &grad(&loss, &params, false));
        }
        let stats = EpochStats { epoch, loss: loss_sum / n as f64, train_accuracy: correct as f64 / n as f64 };
        log::info!("pretrain epoch {}/{epochs}: loss {:.4}, train acc {:.3}", epoch + 1, stats.loss, stats.train_accuracy);
        history.push(stats);
    }
    Ok(TrainedClassifier { classifier, optimizer: opt.state().clone(), history })
}

fn count_correct(logits: &Tensor, targets: &[usize]) -> usize {
    let k = logits.shape()[1];
    logits
        .data()
        .chunks(k)
        .zip(targets)
        .filter(|(row, &y)| (0..k).max_by(|&a, &b| row[a].total_cmp(&row[b])) == Some(y))
        .count()
}

/// One augmented batch: masks (unless disabled) then runs the frozen generator.
pub fn synthesize(generator: &Generator, real: &Tensor, taus: &[f64], masking: bool, rng: &mut Rng) -> Result<Tensor> {
    let input = if masking { mask_batch(real, taus, rng)? } else { real.clone() };
    no_grad(|| Ok(generator.forward(&Var::constant(input)).value()))
}

/// Fresh `τ_i` per sample, then the augmented batch, all from `aug_rng`.
pub fn augmented_batch(
    generator: &Generator,
    real: &Tensor,
    config: &MtnConfig,
    aug_rng: &mut Rng,
) -> Result<(Vec<f64>, Tensor)> {
    let n = real.shape()[0];
    let taus = (0..n).map(|_| sample_tau(config.tau(), aug_rng).map(|t| t.value())).collect::<Result<Vec<_>>>()?;
    let generated = synthesize(generator, real, &taus, config.masking, aug_rng)?;
    Ok((taus, generated))
}

/// Per-epoch streams: shuffling plus real-branch dropout, and augmentation.
pub fn finetune_streams(seed: u64, epoch: usize) -> (Rng, Rng) {
    (seed::stream(seed, "finetune", epoch as u64), seed::stream(seed, "finetune-aug", epoch as u64))
}

/// Fine-tunes `classifier` against the frozen `generator`.
///
/// Two RNG streams per epoch keep the real branch (shuffle and its dropout)
/// independent of augmentation draws, so `λ_a = 0` follows the
/// cross-entropy-only trajectory exactly.
pub fn finetune_mtn(
    classifier: StNet,
    generator: Option<&Generator>,
    data: &dyn BatchSource,
    targets: &[usize],
    config: &MtnConfig,
) -> Result<TrainedClassifier> {
    config.validate()?;
    check_targets(data, targets)?;
    let generator = match (config.mode, generator) {
        (FinetuneMode::CrossEntropyOnly, _) => None,
        (_, Some(g)) => Some(g),
        (_, None) => return Err(Error::Config("fine-tuning with generated samples needs a generator checkpoint".into())),
    };
    let params = classifier.parameters();
    let mut opt = Adam::new(config.adam(), &params);
    let mut history = Vec::new();
    let n = data.len();
    for epoch in 0..config.finetune_epochs {
        let (mut rng, mut aug_rng) = finetune_streams(config.seed, epoch);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let y: Vec<usize> = idx.iter().map(|&i| targets[i]).collect();
            let real = data.batch(idx);
            let loss = match generator {
                None => {
                    let logits = classifier.logits(&Var::constant(real), Some(&mut rng));
                    correct += count_correct(&logits.value(), &y);
                    cross_entropy(&logits, &y)?
                }
                Some(g) => {
                    let (taus, generated) = augmented_batch(g, &real, config, &mut aug_rng)?;
                    if config.mode == FinetuneMode::Msl {
                        let l = msl_loss(&classifier, &real, &generated, &y, &taus, config.lambda_a, Some(&mut rng), Some(&mut aug_rng))?;
                        correct += count_correct(&l.logits, &y);
                        l.total
                    } else {
                        let both = Tensor::stack(&[real, generated]);
                        let s = both.shape();
                        let both = both.reshape(&[s[0] * s[1], s[2], s[3], s[4]]);
                        let y2: Vec<usize> = y.iter().chain(&y).copied().collect();
                        let logits = classifier.logits(&Var::constant(both), Some(&mut rng));
                        correct += count_correct(&logits.value().slice_outer(0, y.len()), &y);
                        cross_entropy(&logits, &y2)?
                    }
                }
            };
            check_finite(loss.item(), "fine-tuning loss", epoch, b)?;
            loss_sum += loss.item() * idx.len() as f64;
            opt.step(&params, &grad(&loss, &params, false));
        }
        let stats = EpochStats { epoch, loss: loss_sum / n as f64, train_accuracy: correct as f64 / n as f64 };
        log::info!("finetune epoch {}/{}: loss {:.4}", epoch + 1, config.finetune_epochs, stats.loss);
        history.push(stats);
    }
    Ok(TrainedClassifier { classifier, optimizer: opt.state().clone(), history })
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::augmentation::build_channel_mask;
    use crate::data::{synth_dataset, ElectrodeLayout, GridSet, Protocol, SyntheticSpec};
    use crate::models::{GeneratorSpec, StNetSpec};

    fn random(shape: &[usize], seed: u64) -> Tensor {
        let mut rng = seed::stream(seed, "mtn-test", 0);
        Tensor::from_fn(shape, |_| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn classifier(seed: u64, dropout: f64) -> StNet {
        StNet::new(StNetSpec::tiny(4, 2, dropout), &mut seed::stream(seed, "c", 0)).unwrap()
    }

    fn generator(seed: u64) -> Generator {
        let mask = build_channel_mask(&ElectrodeLayout::deap32());
        Generator::new(GeneratorSpec::tiny(4), mask, &mut seed::stream(seed, "g", 0)).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-12)
    }

    #[test]
    fn unit_tau_reduces_to_cross_entropy() {
        let c = classifier(1, 0.0);
        let (real, gen) = (random(&[4, 4, 9, 9], 1), random(&[4, 4, 9, 9], 2));
        let y = [0, 1, 1, 0];
        let l = msl_loss(&c, &real, &gen, &y, &[1.0; 4], 0.5, None, None).unwrap();
        let ce = cross_entropy(&c.logits(&Var::constant(real), None), &y).unwrap().item();
        assert_eq!(l.feature_term, 0.0);
        assert!(rel(l.total.item(), ce) < 1e-12);
    }

    #[test]
    fn self_distance_is_zero() {
        let c = classifier(2, 0.0);
        let real = random(&[3, 4, 9, 9], 3);
        let l = msl_loss(&c, &real, &real, &[1, 0, 1], &[0.6, 0.7, 0.8], 0.5, None, None).unwrap();
        assert_eq!(l.feature_term, 0.0);
        assert_eq!(l.total.item(), l.cross_entropy);
    }

    #[test]
    fn matches_naive_two_loop_recomputation() {
        for trial in 0..5 {
            let c = classifier(10 + trial, 0.0);
            let (real, gen) = (random(&[4, 4, 9, 9], 20 + trial), random(&[4, 4, 9, 9], 30 + trial));
            let y = [0, 1, 0, 1];
            let taus = [0.5, 0.62, 0.77, 0.9];
            let lambda = 0.5;
            let l = msl_loss(&c, &real, &gen, &y, &taus, lambda, None, None).unwrap();

            let p = c.predict(&real).unwrap();
            let (fr, fg) = (c.extract(&real).unwrap(), c.extract(&gen).unwrap());
            let h = fr.shape()[1];
            let (mut ce, mut feat) = (0.0, 0.0);
            for i in 0..4 {
                ce -= p.data()[i * 2 + y[i]].ln();
                let mut d2 = 0.0;
                for j in 0..h {
                    d2 += (fg.data()[i * h + j] - fr.data()[i * h + j]).powi(2);
                }
                feat += (1.0 - taus[i]) * d2;
            }
            let (ce, feat) = (ce / 4.0, feat / 4.0);
            assert!(rel(l.cross_entropy, ce) < 1e-9, "{} vs {ce}", l.cross_entropy);
            assert!(rel(l.feature_term, feat) < 1e-9, "{} vs {feat}", l.feature_term);
            assert!(rel(l.total.item(), ce + lambda * feat) < 1e-9);
            assert!(l.cross_entropy >= 0.0 && l.feature_term >= 0.0);
        }
    }

    #[test]
    fn feature_term_is_nonincreasing_in_tau() {
        let c = classifier(4, 0.0);
        let (real, gen) = (random(&[2, 4, 9, 9], 5), random(&[2, 4, 9, 9], 6));
        let terms: Vec<f64> = [0.5, 0.7, 0.9]
            .iter()
            .map(|&t| msl_loss(&c, &real, &gen, &[0, 1], &[t, t], 1.0, None, None).unwrap().feature_term)
            .collect();
        assert!(terms[0] > terms[1] && terms[1] > terms[2], "{terms:?}");
        assert!(rel(terms[0] / terms[2], 5.0) < 1e-9);
    }

    #[test]
    fn generator_receives_no_gradient() {
        let (c, g) = (classifier(5, 0.0), generator(5));
        let real = random(&[2, 4, 9, 9], 7);
        let gen = synthesize(&g, &real, &[0.5, 0.8], true, &mut seed::stream(1, "m", 0)).unwrap();
        let l = msl_loss(&c, &real, &gen, &[0, 1], &[0.5, 0.8], 0.5, None, None).unwrap();
        for gr in grad(&l.total, &g.parameters(), false) {
            assert!(gr.value().data().iter().all(|&v| v == 0.0));
        }
        assert!(grad(&l.total, &c.parameters(), false).iter().any(|gr| gr.value().data().iter().any(|&v| v != 0.0)));
    }

    #[test]
    fn rejects_bad_arguments() {
        let c = classifier(6, 0.0);
        let x = random(&[2, 4, 9, 9], 8);
        assert!(msl_loss(&c, &x, &x, &[0, 1], &[0.5, 0.5], -0.1, None, None).is_err());
        assert!(msl_loss(&c, &x, &x, &[0, 1], &[0.5, 1.2], 0.5, None, None).is_err());
        assert!(msl_loss(&c, &x, &x, &[0, 1], &[0.5], 0.5, None, None).is_err());
        assert!(msl_loss(&c, &x, &x, &[0, 2], &[0.5, 0.5], 0.5, None, None).is_err());
    }

    fn toy_set(n: usize, seed: u64) -> (Tensor, Vec<usize>) {
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut x = random(&[n, 4, 9, 9], seed);
        for (i, chunk) in x.data_mut().chunks_mut(4 * 81).enumerate() {
            chunk[..81].iter_mut().for_each(|v| *v += if y[i] == 1 { 1.5 } else { -1.5 });
        }
        (x, y)
    }

    fn config(epochs: usize) -> MtnConfig {
        MtnConfig { pretrain_epochs: epochs, finetune_epochs: epochs, lr_c: 1e-2, batch_size: 8, seed: 3, ..Default::default() }
    }

    fn weights(c: &StNet) -> Vec<Vec<u64>> {
        c.parameters().iter().map(|p| p.value().data().iter().map(|v| v.to_bits()).collect()).collect()
    }

    #[test]
    fn zero_lambda_follows_cross_entropy_trajectory() {
        let (x, y) = toy_set(20, 9);
        let g = generator(7);
        let msl = MtnConfig { lambda_a: 0.0, ..config(3) };
        let ce = MtnConfig { mode: FinetuneMode::CrossEntropyOnly, ..msl.clone() };
        let a = finetune_mtn(classifier(8, 0.3), Some(&g), &x, &y, &msl).unwrap();
        let b = finetune_mtn(classifier(8, 0.3), None, &x, &y, &ce).unwrap();
        assert_eq!(weights(&a.classifier), weights(&b.classifier));
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn augmented_batches_are_regenerated_each_epoch() {
        let g = generator(9);
        let real = toy_set(4, 10).0;
        let cfg = config(2);
        let (_, mut aug0) = finetune_streams(cfg.seed, 0);
        let (_, mut aug1) = finetune_streams(cfg.seed, 1);
        let (t0, b0) = augmented_batch(&g, &real, &cfg, &mut aug0).unwrap();
        let (t1, b1) = augmented_batch(&g, &real, &cfg, &mut aug1).unwrap();
        assert_ne!(t0, t1);
        assert!(b0.max_abs_diff(&b1) > 0.0);
        assert!(t0.iter().all(|t| (0.5..0.9).contains(t)));
    }

    #[test]
    fn missing_generator_is_a_config_error() {
        let (x, y) = toy_set(4, 11);
        for mode in [FinetuneMode::Msl, FinetuneMode::AugmentedCrossEntropy] {
            let cfg = MtnConfig { mode, ..config(1) };
            assert!(matches!(finetune_mtn(classifier(1, 0.0), None, &x, &y, &cfg), Err(Error::Config(_))));
        }
        let bad = MtnConfig { tau_range: [0.5, 1.0], ..config(1) };
        assert!(matches!(pretrain_classifier(classifier(1, 0.0), &x, &y, &bad, 1), Err(Error::Config(_))));
    }

    #[test]
    fn zero_epochs_return_the_initial_classifier() {
        let (x, y) = toy_set(4, 12);
        let before = weights(&classifier(13, 0.2));
        let out = pretrain_classifier(classifier(13, 0.2), &x, &y, &config(0), 0).unwrap();
        assert!(out.history.is_empty());
        assert_eq!(weights(&out.classifier), before);
    }

    #[test]
    fn every_mode_trains_deterministically() {
        let (x, y) = toy_set(12, 14);
        let g = generator(15);
        for mode in [FinetuneMode::Msl, FinetuneMode::AugmentedCrossEntropy, FinetuneMode::CrossEntropyOnly] {
            let cfg = MtnConfig { mode, ..config(2) };
            let a = finetune_mtn(classifier(16, 0.2), Some(&g), &x, &y, &cfg).unwrap();
            let b = finetune_mtn(classifier(16, 0.2), Some(&g), &x, &y, &cfg).unwrap();
            assert_eq!(a.history, b.history, "{mode:?}");
            assert_eq!(weights(&a.classifier), weights(&b.classifier));
            assert!(a.history.iter().all(|s| s.loss.is_finite()));
        }
    }

    #[test]
    fn pretraining_separates_the_synthetic_set() {
        let samples = synth_dataset(&SyntheticSpec::new(2, 32, 0.3), 4).unwrap();
        let targets: Vec<usize> = samples.iter().map(|s| Protocol::Valence.target(&s.labels)).collect();
        let data = GridSet::from_samples(&samples);
        let c = StNet::new(StNetSpec::tiny(128, 2, 0.0), &mut seed::stream(2, "c", 0)).unwrap();
        let cfg = MtnConfig { lr_c: 1e-2, batch_size: 16, ..Default::default() };
        let out = pretrain_classifier(c, &data, &targets, &cfg, 30).unwrap();
        let last = out.history.last().unwrap().train_accuracy;
        assert!(last >= 0.95, "{last}");
        assert!(accuracy(&out.classifier, &data, &targets, 16).unwrap() >= 0.95);
    }
}
