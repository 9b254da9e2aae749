//! Adversarial augmentation network: WGAN-GP training of the generator `G`
//! against the STNet critic `D` over masked inputs `δ(e, τ)`.
//!
//! `L_G = −mean D(G(δ))`
//! `L_D = mean D(G(δ)) − mean D(δ) + λ_p · mean (‖∇_ê D(ê)‖₂ − 1)²`
//! with `ê = ε·δ + (1−ε)·G(δ)` and one `ε ~ U[0,1)` per sample.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::augmentation::{mask_batch, sample_tau, ChannelMask, TauRange};
use crate::autograd::{add_scalar, enable_grad, grad, mean_all, neg, no_grad, scale, sqrt, square, sub, sum_all, sum_inner, Var};
use crate::data::BatchSource;
use crate::error::{Error, IoContext, Result};
use crate::models::checkpoint::{load_generator, load_stnet, save_generator, save_stnet, CheckpointMeta, Role};
use crate::models::{Generator, GeneratorSpec, StNet, StNetSpec};
use crate::nn::{Adam, AdamConfig, AdamState, Module};
use crate::seed::{self, Rng};
use crate::tensor::Tensor;

/// Which signal the critic sees as "real" and uses as the penalty endpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RealBranch {
    /// The masked input `δ(e, τ)`, as the objective is written.
    #[default]
    Masked,
    /// The clean sample `e`.
    Unmasked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AanConfig {
    pub epochs: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub lambda_p: f64,
    pub tau_range: [f64; 2],
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    /// Critic steps per generator step.
    pub n_critic: usize,
    pub seed: u64,
    pub checkpoint_every: usize,
    pub real_branch: RealBranch,
}

impl Default for AanConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            lr_g: 1e-5,
            lr_d: 1e-5,
            lambda_p: 1.0,
            tau_range: [0.0, 0.5],
            batch_size: 64,
            beta1: 0.9,
            beta2: 0.99,
            weight_decay: 5e-4,
            n_critic: 5,
            seed: 0,
            checkpoint_every: 25,
            real_branch: RealBranch::Masked,
        }
    }
}

impl AanConfig {
    pub fn tau(&self) -> TauRange {
        TauRange { min: self.tau_range[0], max: self.tau_range[1] }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("aan: {m}")));
        if !(self.lr_g > 0.0 && self.lr_d > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.lambda_p >= 0.0) {
            return bad("lambda_p must be non-negative");
        }
        if self.batch_size == 0 || self.n_critic == 0 || self.checkpoint_every == 0 {
            return bad("batch_size, n_critic and checkpoint_every must be positive");
        }
        self.tau().validate().map_err(|e| Error::Config(format!("aan: {e}")))
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig { lr, beta1: self.beta1, beta2: self.beta2, eps: 1e-8, weight_decay: self.weight_decay }
    }
}

/// `−mean D(G(x))`.
pub fn generator_loss(generator: impl Fn(&Var) -> Var, critic: impl Fn(&Var) -> Var, masked: &Var) -> Var {
    neg(&mean_all(&critic(&generator(masked))))
}

/// `λ_p · mean_i (‖∇ D(ê_i)‖₂ − 1)²` with `ê_i = ε_i·real_i + (1−ε_i)·fake_i`.
/// The result stays differentiable with respect to the critic's parameters.
pub fn gradient_penalty(critic: impl Fn(&Var) -> Var, real: &Tensor, fake: &Tensor, eps: &[f64], lambda_p: f64) -> Var {
    let n = real.shape()[0];
    assert_eq!(real.shape(), fake.shape(), "penalty endpoints differ in shape");
    assert_eq!(eps.len(), n, "one epsilon per sample");
    let per = real.len() / n.max(1);
    let hat = Tensor::new(
        real.shape().to_vec(),
        real.data()
            .iter()
            .zip(fake.data())
            .enumerate()
            .map(|(j, (r, f))| {
                let e = eps[j / per];
                e * r + (1.0 - e) * f
            })
            .collect(),
    );
    // The penalty is itself a gradient, so the graph is needed even when the
    // caller only wants its value.
    enable_grad(|| {
        let x = Var::param(hat);
        let total = sum_all(&critic(&x));
        let g = grad(&total, std::slice::from_ref(&x), true).remove(0);
        let norms = sqrt(&sum_inner(&square(&g), 1));
        scale(&mean_all(&square(&add_scalar(&norms, -1.0))), lambda_p)
    })
}

pub struct CriticLoss {
    pub total: Var,
    pub penalty: f64,
    pub d_real: f64,
    pub d_fake: f64,
}

/// `mean D(fake) − mean D(real) + penalty`, where `fake = G(masked)` is
/// treated as a constant and `real` is the critic's real branch.
pub fn discriminator_loss(
    generator: impl Fn(&Var) -> Var,
    critic: impl Fn(&Var) -> Var,
    masked: &Tensor,
    real: &Tensor,
    eps: &[f64],
    lambda_p: f64,
) -> CriticLoss {
    let fake = no_grad(|| generator(&Var::constant(masked.clone())).value());
    let s_fake = mean_all(&critic(&Var::constant(fake.clone())));
    let s_real = mean_all(&critic(&Var::constant(real.clone())));
    let gp = gradient_penalty(&critic, real, &fake, eps, lambda_p);
    let (d_real, d_fake, penalty) = (s_real.item(), s_fake.item(), gp.item());
    CriticLoss { total: crate::autograd::add(&sub(&s_fake, &s_real), &gp), penalty, d_real, d_fake }
}

/// Confirms second-order gradients work before any training starts:
/// for `f(x) = Σx³`, `∂/∂x ‖∇f‖²` is `36x³`.
pub fn check_double_backward() -> Result<()> {
    let x = Var::param(Tensor::new(vec![2], vec![0.5, -1.0]));
    let cube = crate::autograd::mul(&square(&x), &x);
    let g = grad(&sum_all(&cube), std::slice::from_ref(&x), true).remove(0);
    let gg = grad(&sum_all(&square(&g)), std::slice::from_ref(&x), false).remove(0).value();
    let ok = gg.data().iter().zip([0.5f64, -1.0]).all(|(v, x)| (v - 36.0 * x.powi(3)).abs() < 1e-9);
    if ok { Ok(()) } else { Err(Error::Numeric("autodiff backend lacks double-backward support".into())) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AanStep {
    pub epoch: usize,
    /// Global critic-step index.
    pub step: usize,
    pub samples_seen: usize,
    pub l_d: f64,
    pub penalty: f64,
    pub d_real: f64,
    pub d_fake: f64,
    /// Set when a generator step followed this critic step.
    pub l_g: Option<f64>,
}

pub struct AanModels {
    pub generator: Generator,
    pub critic: StNet,
    pub g_optimizer: Option<AdamState>,
    pub d_optimizer: Option<AdamState>,
    /// Completed epochs.
    pub epoch: usize,
}

impl AanModels {
    pub fn init(g_spec: GeneratorSpec, d_spec: StNetSpec, mask: ChannelMask, seed: u64) -> Result<Self> {
        let generator = Generator::new(g_spec, mask, &mut seed::stream(seed, "init-g", 0))?;
        let critic = StNet::new(d_spec.discriminator(), &mut seed::stream(seed, "init-d", 0))?;
        Ok(Self { generator, critic, g_optimizer: None, d_optimizer: None, epoch: 0 })
    }

    /// Loads a generator checkpoint and its sibling critic (`g_*` → `d_*`).
    pub fn resume(g_path: &Path) -> Result<Self> {
        let g = load_generator(g_path)?;
        let d = load_stnet(&critic_path(g_path)?)?;
        if d.manifest.epoch != g.manifest.epoch {
            return Err(Error::Checkpoint("generator and critic checkpoints are from different epochs".into()));
        }
        Ok(Self {
            generator: g.model,
            critic: d.model,
            g_optimizer: g.optimizer,
            d_optimizer: d.optimizer,
            epoch: g.manifest.epoch,
        })
    }
}

fn critic_path(g_path: &Path) -> Result<PathBuf> {
    let name = g_path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    match name.strip_prefix('g') {
        Some(rest) => Ok(g_path.with_file_name(format!("d{rest}"))),
        None => Err(Error::Checkpoint(format!("{} does not look like a generator checkpoint (g*.json)", g_path.display()))),
    }
}

/// Where and how checkpoints and the trace are written.
pub struct AanOutput {
    pub dir: PathBuf,
    pub meta: CheckpointMeta,
}

pub struct AanOutcome {
    pub generator: Generator,
    pub critic: StNet,
    pub trace: Vec<AanStep>,
    pub checkpoints: Vec<PathBuf>,
}

pub const TRACE_FILE: &str = "aan_trace.jsonl";

fn save_pair(out: &AanOutput, tag: &str, epoch: usize, g: &Generator, d: &StNet, go: &Adam, dopt: &Adam, n_critic: usize) -> Result<PathBuf> {
    let mut meta = out.meta.clone();
    meta.epoch = epoch;
    meta.extra.insert("n_critic".into(), n_critic.into());
    let gp = out.dir.join(format!("g{tag}.json"));
    save_generator(&gp, g, &meta, Some(go.state()))?;
    save_stnet(&out.dir.join(format!("d{tag}.json")), Role::D, d, &meta, Some(dopt.state()))?;
    Ok(gp)
}

fn append_trace(out: Option<&AanOutput>, steps: &[AanStep]) -> Result<()> {
    let Some(out) = out else { return Ok(()) };
    std::fs::create_dir_all(&out.dir).at(&out.dir)?;
    let path = out.dir.join(TRACE_FILE);
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&path).at(&path)?;
    for s in steps {
        writeln!(f, "{}", serde_json::to_string(s)?).at(&path)?;
    }
    Ok(())
}

fn masked_batch(batch: &Tensor, range: TauRange, rng: &mut Rng) -> Result<Tensor> {
    let taus = (0..batch.shape()[0]).map(|_| sample_tau(range, rng).map(|t| t.value())).collect::<Result<Vec<_>>>()?;
    mask_batch(batch, &taus, rng)
}

/// Trains `G` and `D` from `models.epoch` up to `config.epochs`.
///
/// Each epoch draws from its own RNG stream (shuffle, `τ`, masks, `ε`), so a
/// run resumed from an epoch checkpoint replays the uninterrupted run exactly.
pub fn train_aan(data: &dyn BatchSource, models: AanModels, config: &AanConfig, out: Option<&AanOutput>) -> Result<AanOutcome> {
    config.validate()?;
    check_double_backward()?;
    let n = data.len();
    if n == 0 {
        return Err(Error::Argument("AAN training set is empty".into()));
    }
    let AanModels { generator: g, critic: d, g_optimizer, d_optimizer, epoch: start } = models;
    let (g_params, d_params) = (g.parameters(), d.parameters());
    let mut g_opt = match g_optimizer {
        Some(s) => Adam::with_state(config.adam(config.lr_g), s),
        None => Adam::new(config.adam(config.lr_g), &g_params),
    };
    let mut d_opt = match d_optimizer {
        Some(s) => Adam::with_state(config.adam(config.lr_d), s),
        None => Adam::new(config.adam(config.lr_d), &d_params),
    };
    let batches = n.div_ceil(config.batch_size);
    let range = config.tau();
    let mut trace = Vec::new();
    let mut checkpoints = Vec::new();

    for epoch in start..config.epochs {
        let mut rng = seed::stream(config.seed, "aan-epoch", epoch as u64);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let epoch_start = trace.len();
        for b in 0..batches {
            let step = epoch * batches + b;
            let idx = &order[b * config.batch_size..((b + 1) * config.batch_size).min(n)];
            let real = data.batch(idx);
            let masked = masked_batch(&real, range, &mut rng)?;
            let eps: Vec<f64> = (0..idx.len()).map(|_| rng.random::<f64>()).collect();
            let real_branch = match config.real_branch {
                RealBranch::Masked => &masked,
                RealBranch::Unmasked => &real,
            };
            let loss = discriminator_loss(|x| g.forward(x), |x| d.score(x), &masked, real_branch, &eps, config.lambda_p);
            let l_d = loss.total.item();
            let mut record = AanStep {
                epoch,
                step,
                samples_seen: epoch * n + (b * config.batch_size + idx.len()),
                l_d,
                penalty: loss.penalty,
                d_real: loss.d_real,
                d_fake: loss.d_fake,
                l_g: None,
            };
            if ![l_d, loss.penalty, loss.d_real, loss.d_fake].iter().all(|v| v.is_finite()) {
                trace.push(record);
                append_trace(out, &trace[epoch_start..])?;
                return Err(Error::Numeric(format!("non-finite critic loss at step {step} (epoch {epoch})")));
            }
            let grads = grad(&loss.total, &d_params, false);
            d_opt.step(&d_params, &grads);

            if (step + 1).is_multiple_of(config.n_critic) {
                let masked = Var::constant(masked_batch(&real, range, &mut rng)?);
                let lg = generator_loss(|x| g.forward(x), |x| d.score(x), &masked);
                let l_g = lg.item();
                record.l_g = Some(l_g);
                if !l_g.is_finite() {
                    trace.push(record);
                    append_trace(out, &trace[epoch_start..])?;
                    return Err(Error::Numeric(format!("non-finite generator loss at step {step} (epoch {epoch})")));
                }
                let grads = grad(&lg, &g_params, false);
                g_opt.step(&g_params, &grads);
            }
            trace.push(record);
        }
        append_trace(out, &trace[epoch_start..])?;
        let done = epoch + 1;
        if let Some(o) = out {
            if done % config.checkpoint_every == 0 {
                checkpoints.push(save_pair(o, &format!("_epoch{done:04}"), done, &g, &d, &g_opt, &d_opt, config.n_critic)?);
            }
        }
        log::info!("aan epoch {done}/{}: L_D {:.4}", config.epochs, trace.last().map_or(f64::NAN, |s| s.l_d));
    }
    if let Some(o) = out {
        checkpoints.push(save_pair(o, "", config.epochs.max(start), &g, &d, &g_opt, &d_opt, config.n_critic)?);
    }
    Ok(AanOutcome { generator: g, critic: d, trace, checkpoints })
}
