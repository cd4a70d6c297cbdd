//! Parameter containers, the width plan derived from a config, and
//! initialization.
//!
//! Tensors have a canonical order (stacks shared, angle, size, center; per
//! layer: weights, bias, then batch-norm gamma/beta) shared by the gradient
//! container, the optimizer state, and the checkpoint format, so a flat
//! index addresses the same scalar everywhere.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AngleMode, NetworkConfig, NetworkError};

pub(crate) const INPUT_DIM: usize = 2;
pub(crate) const SHARED_BASE: [usize; 3] = [64, 128, 1024];
pub(crate) const HEAD_HIDDEN_BASE: [usize; 2] = [512, 128];
pub(crate) const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Activation {
    Relu,
    Identity,
    /// `out_scale * tanh(u)`; the angle head uses scale 1 for sinusoidal
    /// encodings and pi/2 for direct angle output.
    Tanh { out_scale: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    fn identity(n: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(n),
            beta: Array1::zeros(n),
            running_mean: Array1::zeros(n),
            running_var: Array1::ones(n),
        }
    }
}

/// One fully connected layer: `act(bn(x W + b))`, batch-norm optional.
#[derive(Debug, Clone)]
pub(crate) struct DenseLayer {
    /// `in x out`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub bn: Option<BatchNorm>,
    pub act: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.ncols()
    }
}

/// All network parameters plus the global optimizer step counter.
#[derive(Debug, Clone)]
pub struct NetworkParams {
    pub(crate) shared: Vec<DenseLayer>,
    pub(crate) angle: Vec<DenseLayer>,
    pub(crate) size: Vec<DenseLayer>,
    pub(crate) center: Vec<DenseLayer>,
    pub(crate) step: u64,
}

/// Per-parameter gradients, mirroring [`NetworkParams`] structurally.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) shared: Vec<LayerGrads>,
    pub(crate) angle: Vec<LayerGrads>,
    pub(crate) size: Vec<LayerGrads>,
    pub(crate) center: Vec<LayerGrads>,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerGrads {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub gamma: Option<Array1<f64>>,
    pub beta: Option<Array1<f64>>,
}

/// Widths after applying the scale rule to the base architecture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Plan {
    pub shared: Vec<usize>,
    pub head_hidden: Vec<usize>,
    pub feature: usize,
    pub angle_dim: usize,
    pub center_in: usize,
}

/// A base width scaled and rounded; widths that land at or below 1 remove
/// their layer entirely.
fn scaled_width(base: usize, scale: f64) -> Option<usize> {
    let w = (base as f64 * scale).round() as usize;
    (w > 1).then_some(w)
}

pub(crate) fn plan(cfg: &NetworkConfig) -> Result<Plan, NetworkError> {
    cfg.validate()?;
    let shared: Vec<usize> = SHARED_BASE
        .iter()
        .filter_map(|&b| scaled_width(b, cfg.scale))
        .collect();
    let Some(&feature) = shared.last() else {
        return Err(NetworkError::InvalidConfig(format!(
            "scale {} removes every shared layer",
            cfg.scale
        )));
    };
    let head_hidden: Vec<usize> = HEAD_HIDDEN_BASE
        .iter()
        .filter_map(|&b| scaled_width(b, cfg.scale))
        .collect();
    let angle_dim = cfg.angle_mode.dim();
    let center_in = feature + if cfg.concat_enabled { angle_dim + 2 } else { 0 };
    Ok(Plan {
        shared,
        head_hidden,
        feature,
        angle_dim,
        center_in,
    })
}

/// Head output widths never scale: 2 for size/center, `angle_dim` for angle.
fn stack_dims(in_dim: usize, hidden: &[usize], out: usize) -> Vec<(usize, usize)> {
    let mut dims = Vec::with_capacity(hidden.len() + 1);
    let mut prev = in_dim;
    for &h in hidden {
        dims.push((prev, h));
        prev = h;
    }
    dims.push((prev, out));
    dims
}

fn build_stack(
    dims: &[(usize, usize)],
    final_act: Activation,
    mut fill: impl FnMut(&mut Array2<f64>),
) -> Vec<DenseLayer> {
    let last = dims.len() - 1;
    dims.iter()
        .enumerate()
        .map(|(i, &(d_in, d_out))| {
            let mut w = Array2::zeros((d_in, d_out));
            fill(&mut w);
            if i == last {
                DenseLayer {
                    w,
                    b: Array1::zeros(d_out),
                    bn: None,
                    act: final_act,
                }
            } else {
                DenseLayer {
                    w,
                    b: Array1::zeros(d_out),
                    bn: Some(BatchNorm::identity(d_out)),
                    act: Activation::Relu,
                }
            }
        })
        .collect()
}

fn final_angle_act(mode: AngleMode) -> Activation {
    match mode {
        // Direct angle regression still ends in tanh, stretched to cover
        // the orientation range (-pi/2, pi/2).
        AngleMode::Direct => Activation::Tanh {
            out_scale: std::f64::consts::FRAC_PI_2,
        },
        AngleMode::SinCos | AngleMode::SinCos2 => Activation::Tanh { out_scale: 1.0 },
    }
}

/// Fresh parameters: weights uniform in +-1/sqrt(fan_in), zero biases,
/// identity batch-norm, step 0. Deterministic in the seed.
pub fn init_params(cfg: &NetworkConfig, seed: u64) -> Result<NetworkParams, NetworkError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fill = |w: &mut Array2<f64>| {
        let bound = 1.0 / (w.nrows() as f64).sqrt();
        for v in w.iter_mut() {
            *v = rng.random_range(-bound..bound);
        }
    };
    build_params(cfg, &mut fill)
}

/// Zero-weight parameters with the right shapes, for checkpoint loading.
pub(crate) fn empty_params(cfg: &NetworkConfig) -> Result<NetworkParams, NetworkError> {
    build_params(cfg, &mut |_| {})
}

fn build_params(
    cfg: &NetworkConfig,
    fill: &mut impl FnMut(&mut Array2<f64>),
) -> Result<NetworkParams, NetworkError> {
    let plan = plan(cfg)?;
    // Shared layers all carry batch-norm + rectification: build them as a
    // "hidden plus final" stack whose final is also rectified/normalized.
    let shared_dims = stack_dims(
        INPUT_DIM,
        &plan.shared[..plan.shared.len() - 1],
        plan.feature,
    );
    let mut shared = build_stack(&shared_dims, Activation::Relu, &mut *fill);
    if let Some(last) = shared.last_mut() {
        last.bn = Some(BatchNorm::identity(last.out_dim()));
    }
    let angle = build_stack(
        &stack_dims(plan.feature, &plan.head_hidden, plan.angle_dim),
        final_angle_act(cfg.angle_mode),
        &mut *fill,
    );
    let size = build_stack(
        &stack_dims(plan.feature, &plan.head_hidden, 2),
        Activation::Relu,
        &mut *fill,
    );
    let center = build_stack(
        &stack_dims(plan.center_in, &plan.head_hidden, 2),
        Activation::Identity,
        &mut *fill,
    );
    Ok(NetworkParams {
        shared,
        angle,
        size,
        center,
        step: 0,
    })
}

pub(crate) const STACK_NAMES: [&str; 4] = ["shared", "angle", "size", "center"];

impl NetworkParams {
    pub fn step(&self) -> u64 {
        self.step
    }

    pub(crate) fn stacks(&self) -> [&Vec<DenseLayer>; 4] {
        [&self.shared, &self.angle, &self.size, &self.center]
    }

    pub(crate) fn stacks_mut(&mut self) -> [&mut Vec<DenseLayer>; 4] {
        [
            &mut self.shared,
            &mut self.angle,
            &mut self.size,
            &mut self.center,
        ]
    }

    /// Errors unless the parameter shapes are exactly what `cfg` plans.
    pub(crate) fn check_matches(&self, cfg: &NetworkConfig) -> Result<Plan, NetworkError> {
        let plan = plan(cfg)?;
        let mismatch = |msg: String| Err(NetworkError::InvalidConfig(msg));
        let check_stack = |name: &str, stack: &[DenseLayer], dims: &[(usize, usize)]| {
            if stack.len() != dims.len() {
                return mismatch(format!(
                    "{name} stack has {} layers, config plans {}",
                    stack.len(),
                    dims.len()
                ));
            }
            for (i, (layer, &(d_in, d_out))) in stack.iter().zip(dims).enumerate() {
                if layer.in_dim() != d_in || layer.out_dim() != d_out {
                    return mismatch(format!(
                        "{name}{i} is {}x{}, config plans {d_in}x{d_out}",
                        layer.in_dim(),
                        layer.out_dim()
                    ));
                }
            }
            Ok(())
        };
        check_stack(
            "shared",
            &self.shared,
            &stack_dims(INPUT_DIM, &plan.shared[..plan.shared.len() - 1], plan.feature),
        )?;
        check_stack(
            "angle",
            &self.angle,
            &stack_dims(plan.feature, &plan.head_hidden, plan.angle_dim),
        )?;
        check_stack(
            "size",
            &self.size,
            &stack_dims(plan.feature, &plan.head_hidden, 2),
        )?;
        check_stack(
            "center",
            &self.center,
            &stack_dims(plan.center_in, &plan.head_hidden, 2),
        )?;
        Ok(plan)
    }

    /// Total count of trainable scalars (weights, biases, gamma, beta).
    pub fn trainable_len(&self) -> usize {
        self.stacks()
            .iter()
            .flat_map(|s| s.iter())
            .map(|l| {
                l.w.len()
                    + l.b.len()
                    + l.bn.as_ref().map_or(0, |bn| bn.gamma.len() + bn.beta.len())
            })
            .sum()
    }

    /// Visits every trainable tensor in canonical order.
    pub fn for_each_trainable_mut(&mut self, mut f: impl FnMut(&str, &mut [f64])) {
        for (stack, name) in self.stacks_mut().into_iter().zip(STACK_NAMES) {
            for (i, layer) in stack.iter_mut().enumerate() {
                f(
                    &format!("{name}{i}.w"),
                    layer.w.as_slice_mut().expect("contiguous"),
                );
                f(
                    &format!("{name}{i}.b"),
                    layer.b.as_slice_mut().expect("contiguous"),
                );
                if let Some(bn) = &mut layer.bn {
                    f(
                        &format!("{name}{i}.bn.gamma"),
                        bn.gamma.as_slice_mut().expect("contiguous"),
                    );
                    f(
                        &format!("{name}{i}.bn.beta"),
                        bn.beta.as_slice_mut().expect("contiguous"),
                    );
                }
            }
        }
    }

    /// Reads one trainable scalar by its canonical flat index.
    pub fn get_trainable(&self, index: usize) -> f64 {
        let mut found = None;
        let mut offset = 0usize;
        for stack in self.stacks() {
            for layer in stack {
                for slice in trainable_slices(layer) {
                    if found.is_none() && index < offset + slice.len() {
                        found = Some(slice[index - offset]);
                    }
                    offset += slice.len();
                }
            }
        }
        found.unwrap_or_else(|| panic!("trainable index {index} out of range {offset}"))
    }

    /// Writes one trainable scalar by its canonical flat index.
    pub fn set_trainable(&mut self, index: usize, value: f64) {
        let mut offset = 0usize;
        let mut done = false;
        self.for_each_trainable_mut(|_, slice| {
            if !done && index < offset + slice.len() {
                slice[index - offset] = value;
                done = true;
            }
            offset += slice.len();
        });
        assert!(done, "trainable index {index} out of range {offset}");
    }
}

fn trainable_slices(layer: &DenseLayer) -> Vec<&[f64]> {
    let mut v = vec![
        layer.w.as_slice().expect("contiguous"),
        layer.b.as_slice().expect("contiguous"),
    ];
    if let Some(bn) = &layer.bn {
        v.push(bn.gamma.as_slice().expect("contiguous"));
        v.push(bn.beta.as_slice().expect("contiguous"));
    }
    v
}

impl Gradients {
    pub(crate) fn stacks(&self) -> [&Vec<LayerGrads>; 4] {
        [&self.shared, &self.angle, &self.size, &self.center]
    }

    /// All gradient values in the canonical flat order of
    /// [`NetworkParams::get_trainable`]. Iterates in logical row-major
    /// order: matrix products can come back in column-major storage when
    /// a head output has a single column.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for stack in self.stacks() {
            for layer in stack {
                out.extend(layer.w.iter());
                out.extend(layer.b.iter());
                if let Some(g) = &layer.gamma {
                    out.extend(g.iter());
                }
                if let Some(b) = &layer.beta {
                    out.extend(b.iter());
                }
            }
        }
        out
    }
}
