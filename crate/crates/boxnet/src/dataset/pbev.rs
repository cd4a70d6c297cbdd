//! The `pbev` text interchange format for labeled bird's-eye-view clouds.
//!
//! ```text
//! pbev 1
//! sample <id> <car|pedestrian|cyclist>
//! box <cx> <cy> <w> <l> <theta>
//! points <n>
//! <x> <y>          (n lines)
//! end
//! ```
//!
//! UTF-8, newline-terminated lines, decimal numbers. `theta` must already be
//! in `(-pi/2, pi/2]`; out-of-range values are rejected rather than wrapped.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::Path;

use super::{check_unique_ids, ClassLabel, DatasetError, Sample};
use crate::geometry::{OrientedBox, Point2};
use crate::util::atomic_write;

const HEADER: &str = "pbev 1";

/// Serializes samples to the `pbev` text form.
pub fn write_pbev_string(samples: &[Sample]) -> Result<String, DatasetError> {
    check_unique_ids(samples)?;
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for s in samples {
        if s.id.is_empty() || s.id.chars().any(|c| c.is_whitespace()) {
            return Err(DatasetError::InvalidArgument(format!(
                "sample id {:?} must be non-empty and free of whitespace",
                s.id
            )));
        }
        writeln!(out, "sample {} {}", s.id, s.class_label).unwrap();
        writeln!(
            out,
            "box {:.9} {:.9} {:.9} {:.9} {}",
            s.gt.cx,
            s.gt.cy,
            s.gt.w,
            s.gt.l,
            format_theta(s.gt.theta)
        )
        .unwrap();
        writeln!(out, "points {}", s.points.len()).unwrap();
        for p in &s.points {
            writeln!(out, "{:.9} {:.9}", p.x, p.y).unwrap();
        }
        out.push_str("end\n");
    }
    Ok(out)
}

/// Formats an orientation so the printed value still parses into
/// `(-pi/2, pi/2]`: plain rounding can push values near the boundaries
/// just outside it.
fn format_theta(theta: f64) -> String {
    let s = format!("{theta:.9}");
    let parsed: f64 = s.parse().expect("formatted float");
    if parsed > FRAC_PI_2 || parsed <= -FRAC_PI_2 {
        let nudged = theta.clamp(-FRAC_PI_2 + 2e-9, FRAC_PI_2 - 2e-9);
        format!("{nudged:.9}")
    } else {
        s
    }
}

/// Writes samples to `path` atomically.
pub fn write_pbev(path: &Path, samples: &[Sample]) -> Result<(), DatasetError> {
    let text = write_pbev_string(samples)?;
    atomic_write(path, text.as_bytes()).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a `pbev` file. An entirely empty file parses as an empty dataset.
pub fn read_pbev(path: &Path) -> Result<Vec<Sample>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pbev(&text, &path.display().to_string())
}

fn parse_pbev(text: &str, path: &str) -> Result<Vec<Sample>, DatasetError> {
    let err = |line: usize, msg: String| DatasetError::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim_end() == HEADER => {}
        Some((i, l)) => {
            return Err(err(i + 1, format!("expected {HEADER:?}, got {l:?}")));
        }
        None => return Ok(Vec::new()),
    }

    let mut samples = Vec::new();
    while let Some((i, line)) = lines.next() {
        let lineno = i + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        if tok.next() != Some("sample") {
            return Err(err(lineno, format!("expected sample line, got {line:?}")));
        }
        let id = tok
            .next()
            .ok_or_else(|| err(lineno, "sample line missing id".into()))?
            .to_string();
        let class: ClassLabel = tok
            .next()
            .ok_or_else(|| err(lineno, "sample line missing class".into()))?
            .parse()
            .map_err(|e| err(lineno, e))?;
        if tok.next().is_some() {
            return Err(err(lineno, "trailing tokens on sample line".into()));
        }

        let (bno, bline) = lines
            .next()
            .ok_or_else(|| err(lineno, "unexpected end of file before box line".into()))?;
        let vals = parse_tagged_floats(bline, "box", 5).map_err(|m| err(bno + 1, m))?;
        let theta = vals[4];
        if !(theta > -FRAC_PI_2 && theta <= FRAC_PI_2) {
            return Err(err(
                bno + 1,
                format!("theta {theta} outside (-pi/2, pi/2]"),
            ));
        }
        let gt = OrientedBox::new(vals[0], vals[1], vals[2], vals[3], theta)
            .map_err(|e| err(bno + 1, e.to_string()))?;

        let (pno, pline) = lines
            .next()
            .ok_or_else(|| err(bno + 1, "unexpected end of file before points line".into()))?;
        let mut ptok = pline.split_whitespace();
        if ptok.next() != Some("points") {
            return Err(err(pno + 1, format!("expected points line, got {pline:?}")));
        }
        let n: usize = ptok
            .next()
            .ok_or_else(|| err(pno + 1, "points line missing count".into()))?
            .parse()
            .map_err(|e| err(pno + 1, format!("bad point count: {e}")))?;
        if ptok.next().is_some() {
            return Err(err(pno + 1, "trailing tokens on points line".into()));
        }

        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let (no, pl) = lines
                .next()
                .ok_or_else(|| err(pno + 1, format!("expected {n} point lines")))?;
            let xy = parse_floats(pl, 2).map_err(|m| err(no + 1, m))?;
            points.push(Point2::new(xy[0], xy[1]));
        }

        let (eno, eline) = lines
            .next()
            .ok_or_else(|| err(pno + 1, "unexpected end of file before end line".into()))?;
        if eline.trim_end() != "end" {
            return Err(err(eno + 1, format!("expected \"end\", got {eline:?}")));
        }

        samples.push(Sample {
            id,
            class_label: class,
            points,
            gt,
        });
    }

    check_unique_ids(&samples)?;
    Ok(samples)
}

fn parse_tagged_floats(line: &str, tag: &str, n: usize) -> Result<Vec<f64>, String> {
    let mut tok = line.split_whitespace();
    if tok.next() != Some(tag) {
        return Err(format!("expected {tag} line, got {line:?}"));
    }
    parse_float_tokens(tok, n)
}

fn parse_floats(line: &str, n: usize) -> Result<Vec<f64>, String> {
    parse_float_tokens(line.split_whitespace(), n)
}

fn parse_float_tokens<'a>(
    mut tok: impl Iterator<Item = &'a str>,
    n: usize,
) -> Result<Vec<f64>, String> {
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        let t = tok.next().ok_or_else(|| format!("expected {n} numbers"))?;
        let v: f64 = t.parse().map_err(|e| format!("bad number {t:?}: {e}"))?;
        if !v.is_finite() {
            return Err(format!("non-finite number {t:?}"));
        }
        vals.push(v);
    }
    if tok.next().is_some() {
        return Err("trailing tokens".into());
    }
    Ok(vals)
}
