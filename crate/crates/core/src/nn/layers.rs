use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::autograd::{add_bias, conv2d, matmul, mul, Var};
use crate::seed::Rng;
use crate::tensor::Tensor;

/// Anything that owns trainable parameters.
pub trait Module {
    /// Parameters in a fixed order with stable, checkpoint-facing names.
    fn named_parameters(&self) -> Vec<(String, Var)>;

    fn parameters(&self) -> Vec<Var> {
        self.named_parameters().into_iter().map(|(_, v)| v).collect()
    }

    fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.value().len()).sum()
    }
}

/// Variance-scaling schemes, zero-mean normal with `std = gain / sqrt(fan_in)`.
#[derive(Clone, Copy, Debug)]
pub enum Init {
    /// He initialization corrected for a leaky rectifier of the given slope.
    KaimingLeaky(f64),
    /// LeCun normal, the fixed point for self-normalizing (SELU) stacks.
    LeCun,
}

impl Init {
    fn sample(self, shape: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor {
        let gain = match self {
            Init::KaimingLeaky(slope) => (2.0 / (1.0 + slope * slope)).sqrt(),
            Init::LeCun => 1.0,
        };
        let normal = Normal::new(0.0, gain / (fan_in as f64).sqrt()).expect("finite std");
        Tensor::from_fn(shape, |_| normal.sample(rng))
    }
}

pub struct Conv2d {
    pub weight: Var,
    pub bias: Var,
    pub groups: usize,
}

impl Conv2d {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, groups: usize, init: Init, rng: &mut Rng) -> Self {
        assert!(in_channels.is_multiple_of(groups) && out_channels.is_multiple_of(groups), "channels must divide into groups");
        let shape = [out_channels, in_channels / groups, kernel, kernel];
        let fan_in = shape[1] * kernel * kernel;
        Self {
            weight: Var::param(init.sample(&shape, fan_in, rng)),
            bias: Var::param(Tensor::zeros(&[out_channels])),
            groups,
        }
    }

    pub fn forward(&self, x: &Var) -> Var {
        add_bias(&conv2d(x, &self.weight, self.groups), &self.bias)
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn named(&self, prefix: &str) -> Vec<(String, Var)> {
        vec![(format!("{prefix}.weight"), self.weight.clone()), (format!("{prefix}.bias"), self.bias.clone())]
    }
}

/// `y = x·Wᵀ + b` with `W: [out, in]`.
pub struct Linear {
    pub weight: Var,
    pub bias: Var,
}

impl Linear {
    pub fn new(in_features: usize, out_features: usize, init: Init, rng: &mut Rng) -> Self {
        Self {
            weight: Var::param(init.sample(&[out_features, in_features], in_features, rng)),
            bias: Var::param(Tensor::zeros(&[out_features])),
        }
    }

    pub fn forward(&self, x: &Var) -> Var {
        add_bias(&matmul(x, &self.weight, false, true), &self.bias)
    }

    pub fn named(&self, prefix: &str) -> Vec<(String, Var)> {
        vec![(format!("{prefix}.weight"), self.weight.clone()), (format!("{prefix}.bias"), self.bias.clone())]
    }
}

/// Inverted dropout: zeroes each element with probability `p` and rescales the
/// survivors by `1/(1-p)`. Identity when `rng` is `None` (evaluation mode).
pub fn dropout(x: &Var, p: f64, rng: Option<&mut Rng>) -> Var {
    match rng {
        Some(rng) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            let mask = Tensor::from_fn(&x.shape(), |_| if rng.random::<f64>() < p { 0.0 } else { keep });
            mul(x, &Var::constant(mask))
        }
        _ => x.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn kaiming_std_matches_gain() {
        let mut rng = seed::stream(1, "init", 0);
        let t = Init::KaimingLeaky(0.2).sample(&[200, 50], 50, &mut rng);
        let var = t.data().iter().map(|v| v * v).sum::<f64>() / t.len() as f64;
        let expected = 2.0 / (1.0 + 0.04) / 50.0;
        assert!((var / expected - 1.0).abs() < 0.05, "{var} vs {expected}");
    }

    #[test]
    fn dropout_zeroes_about_half_and_rescales() {
        let mut rng = seed::stream(2, "dropout", 0);
        let x = Var::constant(Tensor::ones(&[10_000]));
        let y = dropout(&x, 0.5, Some(&mut rng)).value();
        let zeros = y.data().iter().filter(|&&v| v == 0.0).count() as f64 / 1e4;
        assert!((zeros - 0.5).abs() < 0.03);
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
        assert_eq!(dropout(&x, 0.5, None).value(), x.value());
    }
}
