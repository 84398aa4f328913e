//! Adaptive-moment optimizer with decoupled weight decay.

use cayley_nn::Tensor;

use crate::config::TrainConfig;

/// Adam state: one first- and second-moment tensor per parameter, in the
/// canonical parameter order.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    weight_decay: f64,
    t: u32,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    /// Fresh optimizer state shaped like `params`.
    pub fn new(config: &TrainConfig, params: &[&Tensor]) -> Self {
        Self {
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            weight_decay: config.weight_decay,
            t: 0,
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    /// Applies one update. `grads[i]` pairs with `params[i]`; `None` means
    /// the loss did not touch that tensor (treated as an all-zero gradient).
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Option<&Tensor>]) {
        assert_eq!(params.len(), self.m.len(), "optimizer/parameter count mismatch");
        assert_eq!(params.len(), grads.len(), "gradient/parameter count mismatch");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((param, grad), (m, v)) in
            params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let m = m.data_mut();
            let v = v.data_mut();
            let grad = grad.map(|g| g.data());
            for (i, x) in param.data_mut().iter_mut().enumerate() {
                let g = grad.map_or(0.0, |g| g[i]);
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                *x -= self.lr * (m_hat / (v_hat.sqrt() + self.epsilon) + self.weight_decay * *x);
            }
        }
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u32 {
        self.t
    }
}
