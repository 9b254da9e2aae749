use crate::autograd::Var;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Classic L2 penalty: `wd·θ` is added to the gradient before the moment updates.
    pub weight_decay: f64,
}

/// Serializable optimizer state, kept alongside checkpoints for exact resumes.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
}

pub struct Adam {
    config: AdamConfig,
    state: AdamState,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &[Var]) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(&p.shape())).collect();
        Self { config, state: AdamState { step: 0, first_moment: zeros.clone(), second_moment: zeros } }
    }

    pub fn with_state(config: AdamConfig, state: AdamState) -> Self {
        Self { config, state }
    }

    pub fn state(&self) -> &AdamState {
        &self.state
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    pub fn step(&mut self, params: &[Var], grads: &[Var]) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.state.first_moment.len(), "optimizer built for a different parameter list");
        let AdamConfig { lr, beta1, beta2, eps, weight_decay } = self.config;
        self.state.step += 1;
        let t = self.state.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            let g = g.value();
            let m = self.state.first_moment[i].data_mut();
            let v = self.state.second_moment[i].data_mut();
            p.update(|theta| {
                for j in 0..theta.len() {
                    let gj = g.data()[j] + weight_decay * theta[j];
                    m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
                    v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
                    let m_hat = m[j] / bc1;
                    let v_hat = v[j] / bc2;
                    theta[j] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let p = Var::param(Tensor::new(vec![2], vec![1.0, -1.0]));
        let g = Var::constant(Tensor::new(vec![2], vec![0.5, -3.0]));
        let cfg = AdamConfig { lr: 0.1, beta1: 0.9, beta2: 0.99, eps: 0.0, weight_decay: 0.0 };
        let mut opt = Adam::new(cfg, std::slice::from_ref(&p));
        opt.step(std::slice::from_ref(&p), &[g]);
        // Bias-corrected first step is lr·sign(g).
        let v = p.value();
        assert!((v.data()[0] - 0.9).abs() < 1e-12);
        assert!((v.data()[1] + 0.9).abs() < 1e-12);
    }

    #[test]
    fn minimizes_a_quadratic() {
        use crate::autograd::{grad, square, sub, sum_all};
        let target = Var::constant(Tensor::new(vec![3], vec![1.0, -2.0, 0.5]));
        let p = Var::param(Tensor::zeros(&[3]));
        let cfg = AdamConfig { lr: 0.01, beta1: 0.9, beta2: 0.99, eps: 1e-8, weight_decay: 0.0 };
        let mut opt = Adam::new(cfg, std::slice::from_ref(&p));
        for _ in 0..2000 {
            let loss = sum_all(&square(&sub(&p, &target)));
            let g = grad(&loss, std::slice::from_ref(&p), false);
            opt.step(std::slice::from_ref(&p), &g);
        }
        assert!(p.value().max_abs_diff(&target.value()) < 1e-2);
    }
}
