//! Ingestion of KITTI-format frames: label txt, velodyne binary scan, and
//! calibration txt per frame.
//!
//! Scan points are lifted into the rectified camera frame (velodyne-to-camera
//! transform, then the rectifying rotation). The bird's-eye view keeps camera
//! x (right) and z (forward); camera y points down and is dropped. A heading
//! of `rotation_y` around the down-pointing y axis therefore appears in the
//! BEV plane as `-rotation_y`.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::{check_unique_ids, ClassLabel, DatasetError, Sample};
use crate::geometry::{OrientedBox, Point2};

type Mat3 = [[f64; 3]; 3];
type Vec3 = [f64; 3];

struct Calib {
    rect: Mat3,
    /// Rotation part of the velodyne-to-camera transform.
    velo_rot: Mat3,
    /// Translation part of the velodyne-to-camera transform.
    velo_t: Vec3,
}

struct LabeledObject {
    class_label: ClassLabel,
    h: f64,
    w: f64,
    l: f64,
    location: Vec3,
    rotation_y: f64,
    /// 0-based line index in the label file, kept for stable sample ids.
    line_index: usize,
}

/// Reads every frame present in `label_dir` and extracts one sample per
/// labeled car/pedestrian/cyclist holding strictly more than `min_points`
/// scan points inside its 3D box. Sample ids are `{frame}_{line:02}`.
pub fn ingest_kitti(
    label_dir: &Path,
    velo_dir: &Path,
    calib_dir: &Path,
    min_points: usize,
) -> Result<Vec<Sample>, DatasetError> {
    let labels = frame_stems(label_dir, "txt")?;
    let velos = frame_stems(velo_dir, "bin")?;
    let calibs = frame_stems(calib_dir, "txt")?;
    if labels.is_empty() {
        return Err(DatasetError::InvalidArgument(format!(
            "no label files in {}",
            label_dir.display()
        )));
    }
    for frame in labels.symmetric_difference(&velos).chain(labels.symmetric_difference(&calibs)) {
        return Err(DatasetError::Ingest {
            frame: frame.clone(),
            msg: "frame present in one input directory but not all three".into(),
        });
    }

    let mut samples = Vec::new();
    for frame in &labels {
        let objects = read_labels(&label_dir.join(format!("{frame}.txt")))?;
        if objects.is_empty() {
            continue;
        }
        let calib = read_calib(&calib_dir.join(format!("{frame}.txt")), frame)?;
        let velo = read_scan(&velo_dir.join(format!("{frame}.bin")), frame)?;
        let cam: Vec<Vec3> = velo
            .iter()
            .map(|p| mat_apply(&calib.rect, &add3(&mat_apply(&calib.velo_rot, p), &calib.velo_t)))
            .collect();

        for obj in &objects {
            let points = points_in_box(&cam, obj);
            if points.len() <= min_points {
                continue;
            }
            let gt = OrientedBox::new(
                obj.location[0],
                obj.location[2],
                obj.w,
                obj.l,
                -obj.rotation_y,
            )
            .map_err(|e| DatasetError::Ingest {
                frame: frame.clone(),
                msg: format!("label line {}: {e}", obj.line_index + 1),
            })?;
            samples.push(Sample {
                id: format!("{frame}_{:02}", obj.line_index),
                class_label: obj.class_label,
                points,
                gt,
            });
        }
    }
    check_unique_ids(&samples)?;
    Ok(samples)
}

/// BEV projections of the camera-frame points inside the object's 3D box.
/// The box occupies y in [location_y - h, location_y] (camera y points down,
/// the label location is the box bottom), x in [-l/2, l/2] and z in
/// [-w/2, w/2] after undoing the heading rotation.
fn points_in_box(cam_points: &[Vec3], obj: &LabeledObject) -> Vec<Point2> {
    let (s, c) = obj.rotation_y.sin_cos();
    let mut out = Vec::new();
    for p in cam_points {
        let dx = p[0] - obj.location[0];
        let dy = p[1] - obj.location[1];
        let dz = p[2] - obj.location[2];
        let x_obj = c * dx - s * dz;
        let z_obj = s * dx + c * dz;
        if x_obj.abs() <= obj.l / 2.0
            && z_obj.abs() <= obj.w / 2.0
            && dy <= 0.0
            && dy >= -obj.h
        {
            out.push(Point2::new(p[0], p[2]));
        }
    }
    out
}

fn frame_stems(dir: &Path, ext: &str) -> Result<BTreeSet<String>, DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut stems = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.insert(stem.to_string());
            }
        }
    }
    Ok(stems)
}

fn read_labels(path: &Path) -> Result<Vec<LabeledObject>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let parse_err = |line: usize, msg: String| DatasetError::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let mut objects = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 15 && fields.len() != 16 {
            return Err(parse_err(
                i + 1,
                format!("expected 15 or 16 fields, got {}", fields.len()),
            ));
        }
        let class_label = match fields[0] {
            "Car" => ClassLabel::Car,
            "Pedestrian" => ClassLabel::Pedestrian,
            "Cyclist" => ClassLabel::Cyclist,
            _ => continue,
        };
        let mut nums = [0.0f64; 14];
        for (k, field) in fields[1..15].iter().enumerate() {
            nums[k] = field.parse().map_err(|e| {
                parse_err(i + 1, format!("field {}: {e} ({field:?})", k + 2))
            })?;
        }
        // Fields after the class: truncated, occluded, alpha, 2D bbox (4),
        // then h w l, location xyz, rotation_y.
        let (h, w, l) = (nums[7], nums[8], nums[9]);
        if !(h > 0.0 && w > 0.0 && l > 0.0) {
            return Err(parse_err(i + 1, format!("bad dimensions h={h} w={w} l={l}")));
        }
        objects.push(LabeledObject {
            class_label,
            h,
            w,
            l,
            location: [nums[10], nums[11], nums[12]],
            rotation_y: nums[13],
            line_index: i,
        });
    }
    Ok(objects)
}

fn read_calib(path: &Path, frame: &str) -> Result<Calib, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rect: Option<Vec<f64>> = None;
    let mut velo: Option<Vec<f64>> = None;
    for (i, line) in text.lines().enumerate() {
        let Some((key, rest)) = line.split_once(':') else {
            continue;
        };
        let slot = match key.trim() {
            "R0_rect" | "R_rect" => &mut rect,
            "Tr_velo_to_cam" | "Tr_velo_cam" => &mut velo,
            _ => continue,
        };
        let values: Result<Vec<f64>, _> = rest.split_whitespace().map(str::parse).collect();
        *slot = Some(values.map_err(|e| DatasetError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: format!("{e}"),
        })?);
    }
    let want = |name: &str, v: Option<Vec<f64>>, n: usize| {
        v.filter(|v| v.len() == n).ok_or_else(|| DatasetError::Ingest {
            frame: frame.to_string(),
            msg: format!("calibration is missing a {n}-value {name} row"),
        })
    };
    let r = want("R0_rect", rect, 9)?;
    let t = want("Tr_velo_to_cam", velo, 12)?;
    Ok(Calib {
        rect: [
            [r[0], r[1], r[2]],
            [r[3], r[4], r[5]],
            [r[6], r[7], r[8]],
        ],
        velo_rot: [
            [t[0], t[1], t[2]],
            [t[4], t[5], t[6]],
            [t[8], t[9], t[10]],
        ],
        velo_t: [t[3], t[7], t[11]],
    })
}

fn read_scan(path: &Path, frame: &str) -> Result<Vec<Vec3>, DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if bytes.len() % 16 != 0 {
        return Err(DatasetError::Ingest {
            frame: frame.to_string(),
            msg: format!(
                "scan is {} bytes, not a whole number of x/y/z/reflectance float32 records",
                bytes.len()
            ),
        });
    }
    let mut points = Vec::with_capacity(bytes.len() / 16);
    for rec in bytes.chunks_exact(16) {
        let f = |o: usize| f32::from_le_bytes([rec[o], rec[o + 1], rec[o + 2], rec[o + 3]]) as f64;
        points.push([f(0), f(4), f(8)]);
    }
    Ok(points)
}

fn mat_apply(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn add3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
