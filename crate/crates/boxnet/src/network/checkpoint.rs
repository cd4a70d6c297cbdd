//! Plain-text checkpoints. A file carries the format version, the network
//! configuration, the optimizer step, and every tensor (weights, biases,
//! batch-norm affine and running statistics) printed with `{:.17e}` so a
//! save/load round trip is bit-exact for finite values.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::params::{empty_params, NetworkParams};
use super::{AngleMode, CenterMode, LossKind, NetworkConfig, NetworkError};
use crate::util::atomic_write;

const MAGIC: &str = "boxnet-ckpt";
const VERSION: u32 = 1;

/// Writes `params` and its configuration to `path` atomically.
pub fn save_checkpoint(
    params: &NetworkParams,
    cfg: &NetworkConfig,
    path: &Path,
) -> Result<(), NetworkError> {
    params.check_matches(cfg)?;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let w = cfg.loss_weights;
    let _ = writeln!(
        out,
        "config angle_mode={} center_mode={} concat={} scale={:.17e} loss={} huber_delta={:.17e} w0={:.17e} w1={:.17e} w2={:.17e}",
        cfg.angle_mode,
        cfg.center_mode,
        if cfg.concat_enabled { "on" } else { "off" },
        cfg.scale,
        cfg.loss_kind,
        cfg.huber_delta,
        w.w0,
        w.w1,
        w.w2,
    );
    let _ = writeln!(out, "step {}", params.step());
    for (name, rows, cols, values) in tensor_records(params) {
        let _ = writeln!(out, "param {name} {rows} {cols}");
        for r in 0..rows {
            let row = &values[r * cols..(r + 1) * cols];
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v:.17e}");
            }
            out.push('\n');
        }
    }
    out.push_str("end\n");
    atomic_write(path, out.as_bytes()).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<(NetworkParams, NetworkConfig), NetworkError> {
    let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let fail = |msg: String| NetworkError::Checkpoint {
        path: path.display().to_string(),
        msg,
    };
    let mut lines = text.lines().enumerate();
    let mut next = |want: &str| {
        lines
            .next()
            .ok_or_else(|| fail(format!("file ends before {want}")))
    };

    let (_, header) = next("the header")?;
    let mut h = header.split_whitespace();
    if h.next() != Some(MAGIC) {
        return Err(fail(format!("not a {MAGIC} file")));
    }
    match h.next().map(str::parse::<u32>) {
        Some(Ok(VERSION)) => {}
        Some(Ok(v)) => return Err(fail(format!("unsupported version {v}, expected {VERSION}"))),
        _ => return Err(fail("missing format version".into())),
    }

    let (ln, config_line) = next("the config line")?;
    let cfg = parse_config(config_line).map_err(|msg| fail(format!("line {}: {msg}", ln + 1)))?;

    let (ln, step_line) = next("the step line")?;
    let step = step_line
        .strip_prefix("step ")
        .and_then(|s| s.trim().parse::<u64>().ok())
        .ok_or_else(|| fail(format!("line {}: expected `step N`", ln + 1)))?;

    let mut params = empty_params(&cfg)?;
    params.step = step;

    // Tensors must appear in canonical order with matching names and shapes.
    let mut records: Vec<(String, usize, usize, Vec<f64>)> = Vec::new();
    loop {
        let (ln, line) = next("a param record or `end`")?;
        if line == "end" {
            break;
        }
        let mut parts = line.split_whitespace();
        let (tag, name, rows, cols) = (parts.next(), parts.next(), parts.next(), parts.next());
        let (name, rows, cols) = match (tag, name, rows, cols, parts.next()) {
            (Some("param"), Some(n), Some(r), Some(c), None) => {
                let r: usize = r
                    .parse()
                    .map_err(|_| fail(format!("line {}: bad row count", ln + 1)))?;
                let c: usize = c
                    .parse()
                    .map_err(|_| fail(format!("line {}: bad column count", ln + 1)))?;
                (n.to_string(), r, c)
            }
            _ => return Err(fail(format!("line {}: expected `param <name> <rows> <cols>`", ln + 1))),
        };
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, row) = next(&format!("a value row of {name}"))?;
            let before = values.len();
            for tok in row.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| fail(format!("line {}: bad number {tok:?}", ln + 1)))?;
                values.push(v);
            }
            if values.len() - before != cols {
                return Err(fail(format!(
                    "line {}: {name} row has {} values, expected {cols}",
                    ln + 1,
                    values.len() - before
                )));
            }
        }
        records.push((name, rows, cols, values));
    }

    let expected = tensor_records(&params);
    if records.len() != expected.len() {
        return Err(fail(format!(
            "{} tensors in file, configuration wants {}",
            records.len(),
            expected.len()
        )));
    }
    for ((name, rows, cols, values), (want_name, want_rows, want_cols, _)) in
        records.iter().zip(&expected)
    {
        if name != want_name {
            return Err(fail(format!("tensor {name:?} where {want_name:?} belongs")));
        }
        if (rows, cols) != (want_rows, want_cols) {
            return Err(fail(format!(
                "tensor {name} is {rows}x{cols}, expected {want_rows}x{want_cols}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(fail(format!("tensor {name} holds a non-finite value")));
        }
        if name.ends_with(".bn.running_var") && values.iter().any(|v| *v <= 0.0) {
            return Err(fail(format!("tensor {name} holds a non-positive variance")));
        }
    }
    drop(expected);
    store_records(&mut params, &records);
    Ok((params, cfg))
}

/// Every tensor in canonical order as (name, rows, cols, row-major values).
/// Vectors are written as one row.
fn tensor_records(params: &NetworkParams) -> Vec<(String, usize, usize, Vec<f64>)> {
    let mut out = Vec::new();
    for (stack, stack_name) in params.stacks().into_iter().zip(super::params::STACK_NAMES) {
        for (i, layer) in stack.iter().enumerate() {
            let (r, c) = layer.w.dim();
            out.push((
                format!("{stack_name}{i}.w"),
                r,
                c,
                layer.w.iter().copied().collect(),
            ));
            out.push((
                format!("{stack_name}{i}.b"),
                1,
                layer.b.len(),
                layer.b.to_vec(),
            ));
            if let Some(bn) = &layer.bn {
                for (part, arr) in [
                    ("gamma", &bn.gamma),
                    ("beta", &bn.beta),
                    ("running_mean", &bn.running_mean),
                    ("running_var", &bn.running_var),
                ] {
                    out.push((
                        format!("{stack_name}{i}.bn.{part}"),
                        1,
                        arr.len(),
                        arr.to_vec(),
                    ));
                }
            }
        }
    }
    out
}

fn store_records(params: &mut NetworkParams, records: &[(String, usize, usize, Vec<f64>)]) {
    let mut it = records.iter();
    let mut take = |dst: &mut [f64]| {
        let (_, _, _, values) = it.next().expect("record count checked");
        dst.copy_from_slice(values);
    };
    for stack in params.stacks_mut() {
        for layer in stack.iter_mut() {
            take(layer.w.as_slice_mut().expect("contiguous"));
            take(layer.b.as_slice_mut().expect("contiguous"));
            if let Some(bn) = &mut layer.bn {
                take(bn.gamma.as_slice_mut().expect("contiguous"));
                take(bn.beta.as_slice_mut().expect("contiguous"));
                take(bn.running_mean.as_slice_mut().expect("contiguous"));
                take(bn.running_var.as_slice_mut().expect("contiguous"));
            }
        }
    }
}

fn parse_config(line: &str) -> Result<NetworkConfig, String> {
    let body = line
        .strip_prefix("config ")
        .ok_or("expected a `config` line")?;
    let mut cfg = NetworkConfig::default();
    let mut seen = Vec::new();
    for pair in body.split_whitespace() {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| format!("bad config entry {pair:?}"))?;
        let bad = |_| format!("bad value for {key}: {value:?}");
        match key {
            "angle_mode" => cfg.angle_mode = AngleMode::from_str(value)?,
            "center_mode" => cfg.center_mode = CenterMode::from_str(value)?,
            "concat" => {
                cfg.concat_enabled = match value {
                    "on" => true,
                    "off" => false,
                    other => return Err(format!("bad value for concat: {other:?}")),
                }
            }
            "scale" => cfg.scale = value.parse().map_err(bad)?,
            "loss" => cfg.loss_kind = LossKind::from_str(value)?,
            "huber_delta" => cfg.huber_delta = value.parse().map_err(bad)?,
            "w0" => cfg.loss_weights.w0 = value.parse().map_err(bad)?,
            "w1" => cfg.loss_weights.w1 = value.parse().map_err(bad)?,
            "w2" => cfg.loss_weights.w2 = value.parse().map_err(bad)?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        seen.push(key.to_string());
    }
    for want in [
        "angle_mode",
        "center_mode",
        "concat",
        "scale",
        "loss",
        "huber_delta",
        "w0",
        "w1",
        "w2",
    ] {
        if !seen.iter().any(|s| s == want) {
            return Err(format!("missing config key {want}"));
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}
