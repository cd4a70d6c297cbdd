//! Forward and backward passes.
//!
//! A cache exists only for train-mode forwards, so backward cannot be fed
//! inference activations by construction. Batch-norm statistics run over all
//! B*N point rows in the shared stack and over the B cloud rows in the
//! heads. The global max pool records each feature's argmax row (ties go to
//! the lowest row index) so the backward routing is deterministic.

use ndarray::{Array1, Array2, Axis};

use super::params::{
    Activation, BatchNorm, DenseLayer, Gradients, LayerGrads, NetworkParams, BN_EPS,
};
use super::{CenterMode, NetworkConfig, NetworkError};
use crate::dataset::{cloud_mean, cloud_median};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Raw head outputs for a batch, plus the per-cloud anchor that absolute
/// centers are measured against.
#[derive(Debug, Clone)]
pub struct Predictions {
    /// B x angle_dim, in (-out_scale, out_scale) per component.
    pub angle: Array2<f64>,
    /// B x 2, (w, l), non-negative.
    pub size: Array2<f64>,
    /// B x 2, center relative to the anchor.
    pub center: Array2<f64>,
    /// Cloud mean/median per sample; zero when center_mode is none.
    pub anchors: Vec<Point2>,
}

/// Gradients of the loss with respect to the three head outputs.
#[derive(Debug, Clone)]
pub struct HeadGrads {
    pub angle: Array2<f64>,
    pub size: Array2<f64>,
    pub center: Array2<f64>,
}

pub(crate) struct BnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    pub(crate) mean: Array1<f64>,
    /// Biased (population) batch variance.
    pub(crate) var: Array1<f64>,
}

pub(crate) struct LayerCache {
    x: Array2<f64>,
    pub(crate) bn: Option<BnCache>,
}

/// Train-mode activations needed by [`backward`] and
/// [`update_running_stats`].
pub struct ForwardCache {
    pub(crate) shared: Vec<LayerCache>,
    shared_out: Array2<f64>,
    /// Row index (into the B*N point rows) feeding each pooled feature.
    argmax: Vec<usize>,
    pub(crate) angle: Vec<LayerCache>,
    pub(crate) size: Vec<LayerCache>,
    pub(crate) center: Vec<LayerCache>,
    out_angle: Array2<f64>,
    out_size: Array2<f64>,
    out_center: Array2<f64>,
    batch: usize,
    points_per_cloud: usize,
}

/// Runs the network on `clouds` (all the same length). Train mode returns
/// the cache backward needs; infer mode uses batch-norm running statistics
/// and returns no cache.
pub fn forward(
    params: &NetworkParams,
    cfg: &NetworkConfig,
    clouds: &[&[Point2]],
    mode: Mode,
) -> Result<(Predictions, Option<ForwardCache>), NetworkError> {
    let plan = params.check_matches(cfg)?;
    if clouds.is_empty() {
        return Err(NetworkError::InvalidInput("empty batch".into()));
    }
    let n = clouds[0].len();
    if n == 0 {
        return Err(NetworkError::InvalidInput("empty cloud in batch".into()));
    }
    for (i, cloud) in clouds.iter().enumerate() {
        if cloud.len() != n {
            return Err(NetworkError::InvalidInput(format!(
                "cloud {i} has {} points, cloud 0 has {n}",
                cloud.len()
            )));
        }
        if cloud.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(NetworkError::InvalidInput(format!(
                "cloud {i} contains a non-finite coordinate"
            )));
        }
    }
    let b = clouds.len();

    let mut anchors = Vec::with_capacity(b);
    let mut x0 = Array2::zeros((b * n, 2));
    for (ci, cloud) in clouds.iter().enumerate() {
        let anchor = match cfg.center_mode {
            CenterMode::None => Point2::default(),
            CenterMode::Mean => cloud_mean(cloud),
            CenterMode::Median => cloud_median(cloud),
        };
        anchors.push(anchor);
        for (pi, p) in cloud.iter().enumerate() {
            x0[[ci * n + pi, 0]] = p.x - anchor.x;
            x0[[ci * n + pi, 1]] = p.y - anchor.y;
        }
    }

    let (shared_out, shared_cache) = stack_forward(&params.shared, x0, mode);

    // Global max pool across each cloud's rows, tracking argmax rows.
    let f = plan.feature;
    let mut pooled = Array2::from_elem((b, f), f64::NEG_INFINITY);
    let mut argmax = vec![0usize; b * f];
    for r in 0..b * n {
        let bi = r / n;
        for (fi, &v) in shared_out.row(r).iter().enumerate() {
            if v > pooled[[bi, fi]] {
                pooled[[bi, fi]] = v;
                argmax[bi * f + fi] = r;
            }
        }
    }

    let (out_angle, angle_cache) = stack_forward(&params.angle, pooled.clone(), mode);
    let (out_size, size_cache) = stack_forward(&params.size, pooled.clone(), mode);
    let center_in = if cfg.concat_enabled {
        let mut m = Array2::zeros((b, plan.center_in));
        m.slice_mut(ndarray::s![.., 0..f]).assign(&pooled);
        m.slice_mut(ndarray::s![.., f..f + plan.angle_dim])
            .assign(&out_angle);
        m.slice_mut(ndarray::s![.., f + plan.angle_dim..])
            .assign(&out_size);
        m
    } else {
        pooled
    };
    let (out_center, center_cache) = stack_forward(&params.center, center_in, mode);

    let predictions = Predictions {
        angle: out_angle.clone(),
        size: out_size.clone(),
        center: out_center.clone(),
        anchors,
    };
    let cache = match mode {
        Mode::Infer => None,
        Mode::Train => Some(ForwardCache {
            shared: shared_cache.expect("train mode caches"),
            shared_out,
            argmax,
            angle: angle_cache.expect("train mode caches"),
            size: size_cache.expect("train mode caches"),
            center: center_cache.expect("train mode caches"),
            out_angle,
            out_size,
            out_center,
            batch: b,
            points_per_cloud: n,
        }),
    };
    Ok((predictions, cache))
}

/// Exact analytic gradients for every trainable parameter, from a train-mode
/// cache and the loss gradients at the three head outputs.
pub fn backward(
    params: &NetworkParams,
    cfg: &NetworkConfig,
    cache: ForwardCache,
    d_out: &HeadGrads,
) -> Result<Gradients, NetworkError> {
    let plan = params.check_matches(cfg)?;
    let b = cache.batch;
    let n = cache.points_per_cloud;
    let f = plan.feature;
    for (name, g, rows, cols) in [
        ("angle", &d_out.angle, b, plan.angle_dim),
        ("size", &d_out.size, b, 2),
        ("center", &d_out.center, b, 2),
    ] {
        if g.dim() != (rows, cols) {
            return Err(NetworkError::InvalidInput(format!(
                "{name} output gradient is {:?}, expected ({rows}, {cols})",
                g.dim()
            )));
        }
    }

    let (center_grads, d_center_in) = stack_backward(
        &params.center,
        cache.center,
        &cache.out_center,
        d_out.center.clone(),
    );
    let mut d_pooled: Array2<f64>;
    let mut d_angle_out = d_out.angle.clone();
    let mut d_size_out = d_out.size.clone();
    if cfg.concat_enabled {
        d_pooled = d_center_in.slice(ndarray::s![.., 0..f]).to_owned();
        d_angle_out += &d_center_in.slice(ndarray::s![.., f..f + plan.angle_dim]);
        d_size_out += &d_center_in.slice(ndarray::s![.., f + plan.angle_dim..]);
    } else {
        d_pooled = d_center_in;
    }
    let (angle_grads, d_pooled_a) =
        stack_backward(&params.angle, cache.angle, &cache.out_angle, d_angle_out);
    let (size_grads, d_pooled_s) =
        stack_backward(&params.size, cache.size, &cache.out_size, d_size_out);
    d_pooled += &d_pooled_a;
    d_pooled += &d_pooled_s;

    // Unpool: each pooled feature's gradient flows only to its argmax row.
    let mut d_shared_out = Array2::zeros((b * n, f));
    for bi in 0..b {
        for fi in 0..f {
            d_shared_out[[cache.argmax[bi * f + fi], fi]] += d_pooled[[bi, fi]];
        }
    }
    let (shared_grads, _d_input) = stack_backward(
        &params.shared,
        cache.shared,
        &cache.shared_out,
        d_shared_out,
    );

    Ok(Gradients {
        shared: shared_grads,
        angle: angle_grads,
        size: size_grads,
        center: center_grads,
    })
}

/// Folds the cached batch statistics into the running statistics:
/// `running = momentum * running + (1 - momentum) * batch`.
pub fn update_running_stats(
    params: &mut NetworkParams,
    cache: &ForwardCache,
    momentum: f64,
) -> Result<(), NetworkError> {
    if !(0.0..1.0).contains(&momentum) {
        return Err(NetworkError::InvalidInput(format!(
            "batch-norm momentum must be in [0, 1), got {momentum}"
        )));
    }
    let caches = [&cache.shared, &cache.angle, &cache.size, &cache.center];
    for (stack, caches) in params.stacks_mut().into_iter().zip(caches) {
        for (layer, lc) in stack.iter_mut().zip(caches) {
            if let (Some(bn), Some(bc)) = (&mut layer.bn, &lc.bn) {
                bn.running_mean.zip_mut_with(&bc.mean, |r, &m| {
                    *r = momentum * *r + (1.0 - momentum) * m;
                });
                bn.running_var.zip_mut_with(&bc.var, |r, &v| {
                    *r = momentum * *r + (1.0 - momentum) * v;
                });
            }
        }
    }
    Ok(())
}

fn stack_forward(
    layers: &[DenseLayer],
    input: Array2<f64>,
    mode: Mode,
) -> (Array2<f64>, Option<Vec<LayerCache>>) {
    let mut caches = match mode {
        Mode::Train => Some(Vec::with_capacity(layers.len())),
        Mode::Infer => None,
    };
    let mut x = input;
    for layer in layers {
        let mut z = x.dot(&layer.w) + &layer.b;
        let bn_cache = match (&layer.bn, mode) {
            (None, _) => None,
            (Some(bn), Mode::Infer) => {
                apply_running_bn(&mut z, bn);
                None
            }
            (Some(bn), Mode::Train) => Some(apply_batch_bn(&mut z, bn)),
        };
        apply_activation(&mut z, layer.act);
        if let Some(caches) = &mut caches {
            caches.push(LayerCache { x, bn: bn_cache });
        }
        x = z;
    }
    (x, caches)
}

/// In place: `z <- gamma * (z - running_mean) / sqrt(running_var + eps) + beta`.
fn apply_running_bn(z: &mut Array2<f64>, bn: &BatchNorm) {
    let inv_std = bn.running_var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
    *z -= &bn.running_mean;
    *z *= &inv_std;
    *z *= &bn.gamma;
    *z += &bn.beta;
}

/// In place batch normalization with batch statistics; returns the cache.
fn apply_batch_bn(z: &mut Array2<f64>, bn: &BatchNorm) -> BnCache {
    let rows = z.nrows() as f64;
    let mean = z.mean_axis(Axis(0)).expect("non-empty batch");
    let mut var = Array1::zeros(z.ncols());
    for row in z.rows() {
        for (j, &v) in row.iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    var /= rows;
    let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
    *z -= &mean;
    *z *= &inv_std;
    let xhat = z.clone();
    *z *= &bn.gamma;
    *z += &bn.beta;
    BnCache {
        xhat,
        inv_std,
        mean,
        var,
    }
}

fn apply_activation(z: &mut Array2<f64>, act: Activation) {
    match act {
        Activation::Identity => {}
        Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
        Activation::Tanh { out_scale } => z.mapv_inplace(|v| out_scale * v.tanh()),
    }
}

/// Derivative of the activation expressed through its output value.
fn activation_grad_from_output(a: f64, act: Activation) -> f64 {
    match act {
        Activation::Identity => 1.0,
        Activation::Relu => {
            if a > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Tanh { out_scale } => {
            let t = a / out_scale;
            out_scale * (1.0 - t * t)
        }
    }
}

/// Walks a stack in reverse. `caches[i].x` is layer i's input; layer i's
/// output is `caches[i + 1].x`, or `stack_out` for the last layer.
fn stack_backward(
    layers: &[DenseLayer],
    caches: Vec<LayerCache>,
    stack_out: &Array2<f64>,
    d_stack_out: Array2<f64>,
) -> (Vec<LayerGrads>, Array2<f64>) {
    assert_eq!(layers.len(), caches.len());
    let mut grads: Vec<Option<LayerGrads>> = (0..layers.len()).map(|_| None).collect();
    let mut d = d_stack_out;
    for i in (0..layers.len()).rev() {
        let layer = &layers[i];
        let out = if i + 1 < layers.len() {
            &caches[i + 1].x
        } else {
            stack_out
        };
        // d is dL/d(activation output); convert to dL/d(pre-activation).
        let mut du = d;
        du.zip_mut_with(out, |g, &a| *g *= activation_grad_from_output(a, layer.act));

        let (dz, dgamma, dbeta) = match (&layer.bn, &caches[i].bn) {
            (Some(bn), Some(bc)) => {
                let (dz, dg, db) = batch_bn_backward(du, bn, bc);
                (dz, Some(dg), Some(db))
            }
            (None, None) => (du, None, None),
            _ => unreachable!("cache layout always mirrors layer layout"),
        };
        let dw = caches[i].x.t().dot(&dz);
        let db = dz.sum_axis(Axis(0));
        d = dz.dot(&layer.w.t());
        grads[i] = Some(LayerGrads {
            w: dw,
            b: db,
            gamma: dgamma,
            beta: dbeta,
        });
    }
    (
        grads.into_iter().map(|g| g.expect("filled")).collect(),
        d,
    )
}

/// Backward through train-mode batch norm. With `du` = dL/d(bn output):
/// dxhat = du * gamma, and per column with batch size n:
/// dz = inv_std / n * (n * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat)).
fn batch_bn_backward(
    du: Array2<f64>,
    bn: &BatchNorm,
    bc: &BnCache,
) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let n = du.nrows() as f64;
    let dbeta = du.sum_axis(Axis(0));
    let dgamma = (&du * &bc.xhat).sum_axis(Axis(0));
    let mut dxhat = du;
    dxhat *= &bn.gamma;
    let sum_dxhat = dxhat.sum_axis(Axis(0));
    let sum_dxhat_xhat = (&dxhat * &bc.xhat).sum_axis(Axis(0));
    let mut dz = dxhat;
    dz *= n;
    dz -= &sum_dxhat;
    dz -= &(&bc.xhat * &sum_dxhat_xhat);
    dz *= &bc.inv_std.mapv(|v| v / n);
    (dz, dgamma, dbeta)
}
