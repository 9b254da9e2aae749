use serde::{Deserialize, Serialize};

use crate::augmentation::ChannelMask;
use crate::autograd::{concat_channels, leaky_relu, mul, Var};
use crate::data::GRID;
use crate::error::{Error, Result};
use crate::nn::{Conv2d, Init, Module};
use crate::seed::Rng;
use crate::tensor::Tensor;

/// UNet layout. Encoder stage `i` maps `encoder[i-1] → encoder[i]`; decoder
/// stage `j` consumes the previous output concatenated with the mirror
/// encoder map (when `skip_connections` is set).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub in_channels: usize,
    pub encoder: Vec<usize>,
    pub encoder_kernels: Vec<usize>,
    pub decoder: Vec<usize>,
    pub decoder_kernel: usize,
    pub leaky_slope: f64,
    /// Off for the plain encoder–decoder ablation.
    pub skip_connections: bool,
    /// Off for the no-channel-mask ablation.
    pub channel_masking: bool,
}

impl GeneratorSpec {
    pub fn paper() -> Self {
        Self {
            in_channels: 128,
            encoder: vec![64, 32, 16, 8],
            encoder_kernels: vec![3, 5, 5, 3],
            decoder: vec![16, 32, 128],
            decoder_kernel: 3,
            leaky_slope: 0.2,
            skip_connections: true,
            channel_masking: true,
        }
    }

    pub fn desk() -> Self {
        Self { encoder: vec![16, 8, 8, 4], decoder: vec![8, 16, 128], ..Self::paper() }
    }

    /// Small enough for finite-difference checks.
    pub fn tiny(in_channels: usize) -> Self {
        Self { in_channels, encoder: vec![3, 2, 2, 2], decoder: vec![2, 3, in_channels], ..Self::paper() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("generator spec: {m}")));
        if self.encoder.len() != self.encoder_kernels.len() || self.encoder.len() < 2 {
            return bad("encoder widths and kernels must match and have at least two stages");
        }
        if self.decoder.len() != self.encoder.len() - 1 {
            return bad("decoder needs one stage fewer than the encoder");
        }
        if self.decoder.last() != Some(&self.in_channels) {
            return bad("last decoder stage must restore the input channel count");
        }
        if self.encoder_kernels.iter().chain([&self.decoder_kernel]).any(|k| k % 2 == 0) {
            return bad("kernels must be odd to preserve the 9x9 plane");
        }
        Ok(())
    }

    /// Input width of each decoder stage.
    pub fn decoder_inputs(&self) -> Vec<usize> {
        let n = self.encoder.len();
        (0..self.decoder.len())
            .map(|j| {
                let prev = if j == 0 { self.encoder[n - 1] } else { self.decoder[j - 1] };
                prev + if self.skip_connections { self.encoder[n - 2 - j] } else { 0 }
            })
            .collect()
    }
}

pub struct Generator {
    pub spec: GeneratorSpec,
    pub encoder: Vec<Conv2d>,
    pub decoder: Vec<Conv2d>,
    pub mask: ChannelMask,
}

impl Generator {
    pub fn new(spec: GeneratorSpec, mask: ChannelMask, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        mask.validate()?;
        let init = Init::KaimingLeaky(spec.leaky_slope);
        let mut prev = spec.in_channels;
        let mut encoder = Vec::new();
        for (&w, &k) in spec.encoder.iter().zip(&spec.encoder_kernels) {
            encoder.push(Conv2d::new(prev, w, k, 1, init, rng));
            prev = w;
        }
        let decoder = spec
            .decoder_inputs()
            .into_iter()
            .zip(&spec.decoder)
            .map(|(i, &o)| Conv2d::new(i, o, spec.decoder_kernel, 1, init, rng))
            .collect();
        Ok(Self { spec, encoder, decoder, mask })
    }

    /// `[n, C, 9, 9] → [n, C, 9, 9]`, zero at every off-electrode cell.
    pub fn forward(&self, x: &Var) -> Var {
        let slope = self.spec.leaky_slope;
        let mut skips = Vec::with_capacity(self.encoder.len());
        let mut h = x.clone();
        for conv in &self.encoder {
            h = leaky_relu(&conv.forward(&h), slope);
            skips.push(h.clone());
        }
        let n = skips.len();
        for (j, conv) in self.decoder.iter().enumerate() {
            let input = if self.spec.skip_connections { concat_channels(&[h, skips[n - 2 - j].clone()]) } else { h };
            h = leaky_relu(&conv.forward(&input), slope);
        }
        if self.spec.channel_masking {
            let s = h.shape();
            h = mul(&h, &Var::constant(self.mask.broadcast(s[0], s[1])));
        }
        h
    }

    /// Checked forward on plain tensors, without building a graph.
    pub fn generate(&self, x: &Tensor) -> Result<Tensor> {
        check_grid_batch(x, self.spec.in_channels)?;
        if !x.all_finite() {
            return Err(Error::Numeric("generator input contains non-finite values".into()));
        }
        let y = crate::autograd::no_grad(|| self.forward(&Var::constant(x.clone())).value());
        if !y.all_finite() {
            return Err(Error::Numeric("generator produced non-finite values".into()));
        }
        Ok(y)
    }
}

impl Module for Generator {
    fn named_parameters(&self) -> Vec<(String, Var)> {
        let mut out = Vec::new();
        for (i, c) in self.encoder.iter().enumerate() {
            out.extend(c.named(&format!("enc{i}")));
        }
        for (i, c) in self.decoder.iter().enumerate() {
            out.extend(c.named(&format!("dec{i}")));
        }
        out
    }
}

pub(crate) fn check_grid_batch(x: &Tensor, channels: usize) -> Result<()> {
    let s = x.shape();
    if s.len() != 4 || s[1] != channels || s[2] != GRID || s[3] != GRID {
        return Err(Error::Argument(format!("expected input [n, {channels}, 9, 9], got {s:?}")));
    }
    Ok(())
}
