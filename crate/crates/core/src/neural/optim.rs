use serde::{Deserialize, Serialize};

use super::model::Params;

/// Learning rate for `epoch` (0-based): `lr * (1 - epoch / max_epochs)`.
pub fn linear_lr(lr: f64, epoch: usize, max_epochs: usize) -> f64 {
    lr * (1.0 - epoch as f64 / max_epochs as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain mini-batch gradient descent.
    #[default]
    Sgd,
    /// Adam with the usual moment decay rates.
    Adam,
}

pub enum Optimizer {
    Sgd,
    Adam {
        m: Params,
        v: Params,
        step: i32,
    },
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(kind: OptimizerKind, like: &Params) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam {
                m: like.zeros_like(),
                v: like.zeros_like(),
                step: 0,
            },
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params, lr: f64) {
        match self {
            Optimizer::Sgd => params.add_scaled(grads, -lr),
            Optimizer::Adam { m, v, step } => {
                *step += 1;
                let c1 = 1.0 - Self::BETA1.powi(*step);
                let c2 = 1.0 - Self::BETA2.powi(*step);
                let g = grads.tensors();
                for (((p, m), v), g) in params
                    .tensors_mut()
                    .into_iter()
                    .zip(m.tensors_mut())
                    .zip(v.tensors_mut())
                    .zip(g)
                {
                    for i in 0..p.len() {
                        let gi = g.data[i];
                        m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * gi;
                        v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * gi * gi;
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
                    }
                }
            }
        }
    }
}
