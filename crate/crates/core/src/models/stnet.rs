use serde::{Deserialize, Serialize};

use crate::autograd::{concat_channels, reshape, selu, softmax, Var};
use crate::data::GRID;
use crate::error::{Error, Result};
use crate::nn::{dropout, Conv2d, Init, Linear, Module};
use crate::seed::Rng;
use crate::tensor::Tensor;

use super::generator::check_grid_batch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StNetKind {
    /// Separable stage followed by an Inception block.
    StNet,
    /// Ablation swap: a standard 3×3 conv in place of the separable stage and
    /// another in place of the Inception block, same widths.
    PlainConv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StNetSpec {
    pub kind: StNetKind,
    pub in_channels: usize,
    pub conv: Vec<usize>,
    pub conv_kernels: Vec<usize>,
    /// Output widths of the 1×1, 3×3 and 5×5 branches.
    pub inception: [usize; 3],
    pub hidden: usize,
    /// 1 for the critic, 2 or 4 for the classifier.
    pub head: usize,
    /// Applied after every convolutional activation; 0 disables.
    pub dropout: f64,
}

impl StNetSpec {
    pub fn paper(head: usize, dropout: f64) -> Self {
        Self {
            kind: StNetKind::StNet,
            in_channels: 128,
            conv: vec![64, 32, 16],
            conv_kernels: vec![3, 5, 5],
            inception: [16, 8, 8],
            hidden: 1024,
            head,
            dropout,
        }
    }

    pub fn desk(head: usize, dropout: f64) -> Self {
        Self { conv: vec![16, 8, 8], inception: [4, 2, 2], hidden: 64, ..Self::paper(head, dropout) }
    }

    pub fn tiny(in_channels: usize, head: usize, dropout: f64) -> Self {
        Self { in_channels, conv: vec![3, 2, 2], inception: [1, 1, 1], hidden: 4, ..Self::paper(head, dropout) }
    }

    pub fn discriminator(self) -> Self {
        Self { head: 1, dropout: 0.0, ..self }
    }

    pub fn separable_width(&self) -> usize {
        *self.conv.last().expect("validated")
    }

    pub fn flatten_dim(&self) -> usize {
        self.inception.iter().sum::<usize>() * GRID * GRID
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("STNet spec: {m}")));
        if self.conv.is_empty() || self.conv.len() != self.conv_kernels.len() {
            return bad("conv widths and kernels must match and be non-empty".into());
        }
        if self.conv_kernels.iter().any(|k| k % 2 == 0) {
            return bad("kernels must be odd".into());
        }
        if ![1, 2, 4].contains(&self.head) {
            return bad(format!("head width {} is not 1, 2 or 4", self.head));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}

pub struct StNet {
    pub spec: StNetSpec,
    pub conv: Vec<Conv2d>,
    /// Depthwise 3×3 then pointwise 1×1 (or a single 3×3 conv for `PlainConv`).
    pub separable: Vec<Conv2d>,
    /// Three branches (or one 3×3 conv for `PlainConv`).
    pub inception: Vec<Conv2d>,
    pub fc: Linear,
    pub head: Linear,
}

impl StNet {
    pub fn new(spec: StNetSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        let init = Init::LeCun;
        let mut prev = spec.in_channels;
        let mut conv = Vec::new();
        for (&w, &k) in spec.conv.iter().zip(&spec.conv_kernels) {
            conv.push(Conv2d::new(prev, w, k, 1, init, rng));
            prev = w;
        }
        let cat: usize = spec.inception.iter().sum();
        let (separable, inception) = match spec.kind {
            StNetKind::StNet => (
                vec![Conv2d::new(prev, prev, 3, prev, init, rng), Conv2d::new(prev, prev, 1, 1, init, rng)],
                [1, 3, 5].iter().zip(spec.inception).map(|(&k, w)| Conv2d::new(prev, w, k, 1, init, rng)).collect(),
            ),
            StNetKind::PlainConv => {
                (vec![Conv2d::new(prev, prev, 3, 1, init, rng)], vec![Conv2d::new(prev, cat, 3, 1, init, rng)])
            }
        };
        let fc = Linear::new(spec.flatten_dim(), spec.hidden, init, rng);
        let head = Linear::new(spec.hidden, spec.head, init, rng);
        Ok(Self { spec, conv, separable, inception, fc, head })
    }

    /// Convolutional trunk, `[n, C, 9, 9] → [n, flatten_dim]`. `rng` enables dropout.
    pub fn trunk(&self, x: &Var, mut rng: Option<&mut Rng>) -> Var {
        let p = self.spec.dropout;
        let act = |h: Var, rng: &mut Option<&mut Rng>| dropout(&selu(&h), p, rng.as_deref_mut());
        let mut h = x.clone();
        for c in &self.conv {
            h = act(c.forward(&h), &mut rng);
        }
        h = match self.spec.kind {
            StNetKind::StNet => self.separable[1].forward(&self.separable[0].forward(&h)),
            StNetKind::PlainConv => self.separable[0].forward(&h),
        };
        h = act(h, &mut rng);
        let branches: Vec<Var> = self.inception.iter().map(|c| c.forward(&h)).collect();
        h = act(concat_channels(&branches), &mut rng);
        let n = h.shape()[0];
        reshape(&h, &[n, self.spec.flatten_dim()])
    }

    /// Penultimate activation `C_x`, `[n, hidden]`.
    pub fn features(&self, x: &Var, rng: Option<&mut Rng>) -> Var {
        selu(&self.fc.forward(&self.trunk(x, rng)))
    }

    /// Head output without any terminal nonlinearity, `[n, head]`.
    pub fn logits(&self, x: &Var, rng: Option<&mut Rng>) -> Var {
        self.head.forward(&self.features(x, rng))
    }

    /// Critic scores, `[n]`.
    pub fn score(&self, x: &Var) -> Var {
        let s = self.logits(x, None);
        let n = s.shape()[0];
        reshape(&s, &[n])
    }

    /// Class probabilities, `[n, head]`.
    pub fn probs(&self, x: &Var, rng: Option<&mut Rng>) -> Var {
        softmax(&self.logits(x, rng))
    }

    /// Checked evaluation-mode forward on tensors: scores for a critic,
    /// probabilities for a classifier.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        check_grid_batch(x, self.spec.in_channels)?;
        Ok(crate::autograd::no_grad(|| {
            let v = Var::constant(x.clone());
            if self.spec.head == 1 { self.score(&v).value() } else { self.probs(&v, None).value() }
        }))
    }

    /// Evaluation-mode `C_x` on tensors.
    pub fn extract(&self, x: &Tensor) -> Result<Tensor> {
        check_grid_batch(x, self.spec.in_channels)?;
        Ok(crate::autograd::no_grad(|| self.features(&Var::constant(x.clone()), None).value()))
    }
}

impl Module for StNet {
    fn named_parameters(&self) -> Vec<(String, Var)> {
        let mut out = Vec::new();
        for (i, c) in self.conv.iter().enumerate() {
            out.extend(c.named(&format!("conv{i}")));
        }
        for (i, c) in self.separable.iter().enumerate() {
            out.extend(c.named(&format!("sep{i}")));
        }
        for (i, c) in self.inception.iter().enumerate() {
            out.extend(c.named(&format!("incep{i}")));
        }
        out.extend(self.fc.named("fc"));
        out.extend(self.head.named("head"));
        out
    }
}
