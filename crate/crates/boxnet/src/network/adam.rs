//! Adam optimizer with the exponential learning-rate and batch-norm
//! momentum schedules used for training.

use super::params::NetworkParams;
use super::{Gradients, NetworkError, TrainConfig};

/// First and second moment accumulators, one scalar each per trainable
/// parameter in canonical flat order.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        let n = params.trainable_len();
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// Learning rate after `step` optimizer steps:
/// `lr0 * rate^(step / decay_steps)`.
pub fn learning_rate(cfg: &TrainConfig, step: u64) -> f64 {
    cfg.lr0 * cfg.lr_decay_rate.powf(step as f64 / cfg.lr_decay_steps)
}

/// Batch-norm running-average momentum after `step` optimizer steps. It
/// starts at `bn_decay_start`, rises as `1 - (1 - start) * 0.5^(step /
/// decay_steps)`, and is capped at `bn_decay_end`.
pub fn bn_momentum(cfg: &TrainConfig, step: u64) -> f64 {
    let raw = 1.0 - (1.0 - cfg.bn_decay_start) * 0.5_f64.powf(step as f64 / cfg.lr_decay_steps);
    raw.min(cfg.bn_decay_end)
}

/// One Adam update over every trainable tensor. Rejects non-finite
/// gradients before touching the parameters and non-finite parameters
/// after, naming the offending tensor; advances the step counter.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<(), NetworkError> {
    let flat = grads.flat();
    if flat.len() != state.len() || state.len() != params.trainable_len() {
        return Err(NetworkError::InvalidInput(format!(
            "gradient has {} values, optimizer state {}, parameters {}",
            flat.len(),
            state.len(),
            params.trainable_len()
        )));
    }
    let step = params.step();
    let lr = learning_rate(cfg, step);
    let t = (step + 1) as i32;
    let corr1 = 1.0 - BETA1.powi(t);
    let corr2 = 1.0 - BETA2.powi(t);

    let mut offset = 0usize;
    let mut bad: Option<(String, bool)> = None;
    params.for_each_trainable_mut(|name, values| {
        if bad.is_some() {
            offset += values.len();
            return;
        }
        for (i, p) in values.iter_mut().enumerate() {
            let g = flat[offset + i];
            if !g.is_finite() {
                bad = Some((name.to_string(), true));
                return;
            }
            let m = &mut state.m[offset + i];
            let v = &mut state.v[offset + i];
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            let mhat = *m / corr1;
            let vhat = *v / corr2;
            *p -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
            if !p.is_finite() {
                bad = Some((name.to_string(), false));
                return;
            }
        }
        offset += values.len();
    });
    if let Some((name, grad_side)) = bad {
        return Err(if grad_side {
            NetworkError::NonFiniteGradient { name }
        } else {
            NetworkError::NonFiniteParam { name }
        });
    }
    params.step += 1;
    Ok(())
}
