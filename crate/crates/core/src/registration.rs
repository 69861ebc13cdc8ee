//! Rigid point-cloud registration and cloud-to-cloud distance statistics.
//!
//! The ICP loop alternates exact nearest-neighbor correspondences (kd-tree,
//! verified against a linear scan) with the closed-form rigid solve from the
//! cross-covariance SVD, guarding against reflections. Point-to-point only.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point3;

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error("point cloud {id:?} is empty")]
    EmptyCloud { id: String },
    #[error("point cloud {id:?} contains non-finite coordinates")]
    NonFinite { id: String },
    #[error("source cloud is degenerate (fewer than 3 non-collinear points)")]
    DegenerateSource,
    #[error("trim fraction {0} outside [0, 1)")]
    BadTrim(f64),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse cloud file {path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointCloud {
    pub id: String,
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(id: impl Into<String>, points: Vec<Point3>) -> Self {
        PointCloud {
            id: id.into(),
            points,
        }
    }

    pub fn validate(&self) -> Result<(), RegistrationError> {
        if self.points.is_empty() {
            return Err(RegistrationError::EmptyCloud {
                id: self.id.clone(),
            });
        }
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err(RegistrationError::NonFinite {
                id: self.id.clone(),
            });
        }
        Ok(())
    }
}

/// Proper rigid motion `x -> R x + t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        let r = &self.rotation;
        Point3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + self.translation[0],
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + self.translation[1],
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + self.translation[2],
        )
    }

    /// `self` after `other` (i.e. apply `other` first).
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let a = Matrix3::from_fn(|i, j| self.rotation[i][j]);
        let b = Matrix3::from_fn(|i, j| other.rotation[i][j]);
        let r = a * b;
        let t = a * Vector3::from_column_slice(&other.translation)
            + Vector3::from_column_slice(&self.translation);
        RigidTransform {
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [t[0], t[1], t[2]],
        }
    }

    /// Rotation angle in radians.
    pub fn rotation_angle(&self) -> f64 {
        let trace = self.rotation[0][0] + self.rotation[1][1] + self.rotation[2][2];
        ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegistrationReport {
    pub transform: RigidTransform,
    /// Root mean square correspondence error at convergence, meters.
    pub rms_m: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-iteration RMS history (non-increasing for untrimmed runs).
    pub rms_history: Vec<f64>,
    pub c2c_mean_m: f64,
    pub c2c_std_m: f64,
}

// ---------------------------------------------------------------------------
// kd-tree
// ---------------------------------------------------------------------------

/// Static 3D kd-tree over a point set; queries return the exact nearest
/// point, ties broken by the lowest point index (identical to a linear scan).
pub struct KdTree {
    nodes: Vec<KdNode>,
    points: Vec<Point3>,
}

struct KdNode {
    /// Index into `points`.
    point: u32,
    axis: u8,
    left: i32,
    right: i32,
}

impl KdTree {
    pub fn build(points: &[Point3]) -> KdTree {
        let mut idx: Vec<u32> = (0..points.len() as u32).collect();
        let mut tree = KdTree {
            nodes: Vec::with_capacity(points.len()),
            points: points.to_vec(),
        };
        if !points.is_empty() {
            build_node(&mut tree, &mut idx, 0);
        }
        tree
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Exact nearest neighbor `(index, distance)`.
    pub fn nearest(&self, query: Point3) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: (u32, f64) = (u32::MAX, f64::INFINITY);
        self.search(0, query, &mut best);
        Some((best.0 as usize, best.1.sqrt()))
    }

    fn search(&self, node: i32, query: Point3, best: &mut (u32, f64)) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let p = self.points[n.point as usize];
        let d2 = (query - p).norm_squared();
        if d2 < best.1 || (d2 == best.1 && n.point < best.0) {
            *best = (n.point, d2);
        }
        let delta = match n.axis {
            0 => query.x - p.x,
            1 => query.y - p.y,
            _ => query.z - p.z,
        };
        let (near, far) = if delta < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.search(near, query, best);
        if delta * delta <= best.1 {
            self.search(far, query, best);
        }
    }
}

fn build_node(tree: &mut KdTree, idx: &mut [u32], depth: usize) -> i32 {
    if idx.is_empty() {
        return -1;
    }
    let axis = (depth % 3) as u8;
    let key = |tree: &KdTree, i: u32| {
        let p = tree.points[i as usize];
        match axis {
            0 => p.x,
            1 => p.y,
            _ => p.z,
        }
    };
    idx.sort_by(|&a, &b| {
        key(tree, a)
            .partial_cmp(&key(tree, b))
            .unwrap()
            .then(a.cmp(&b))
    });
    let mid = idx.len() / 2;
    let point = idx[mid];
    let node_index = tree.nodes.len() as i32;
    tree.nodes.push(KdNode {
        point,
        axis,
        left: -1,
        right: -1,
    });
    let (lo, rest) = idx.split_at_mut(mid);
    let (_, hi) = rest.split_at_mut(1);
    let left = build_node(tree, lo, depth + 1);
    let right = build_node(tree, hi, depth + 1);
    tree.nodes[node_index as usize].left = left;
    tree.nodes[node_index as usize].right = right;
    node_index
}

/// Exact nearest neighbor of `query` in `target` (kd-tree accelerated).
pub fn nearest_neighbor(target: &KdTree, query: Point3) -> Option<(usize, f64)> {
    target.nearest(query)
}

// ---------------------------------------------------------------------------
// ICP
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct IcpParams {
    pub max_iters: usize,
    /// Stop when the RMS improvement falls below this, meters.
    pub tol_m: f64,
    /// Fraction of worst correspondences dropped each iteration.
    pub trim: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            max_iters: 50,
            tol_m: 1e-8,
            trim: 0.0,
        }
    }
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

/// Closed-form least-squares rigid solve for fixed correspondences, with the
/// reflection guard on the smallest singular direction.
fn solve_rigid(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> (Matrix3<f64>, Vector3<f64>) {
    let cs = centroid(src);
    let cd = centroid(dst);
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let mut r = v_t.transpose() * u.transpose();
    if r.determinant() < 0.0 {
        let mut flip = Matrix3::identity();
        flip[(2, 2)] = -1.0;
        r = v_t.transpose() * flip * u.transpose();
    }
    let t = cd - r * cs;
    (r, t)
}

fn is_degenerate(points: &[Point3]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let v: Vec<Vector3<f64>> = points
        .iter()
        .map(|p| Vector3::new(p.x, p.y, p.z))
        .collect();
    let c = centroid(&v);
    let mut cov = Matrix3::zeros();
    for p in &v {
        cov += (p - c) * (p - c).transpose();
    }
    let svd = cov.svd(false, false);
    let s = svd.singular_values;
    // collinear or coincident: second moment direction vanishes
    s[1] <= s[0] * 1e-12 || s[0] == 0.0
}

/// Point-to-point ICP aligning `source` onto `target`.
pub fn icp(
    source: &PointCloud,
    target: &PointCloud,
    params: IcpParams,
) -> Result<RegistrationReport, RegistrationError> {
    source.validate()?;
    target.validate()?;
    if !(0.0..1.0).contains(&params.trim) {
        return Err(RegistrationError::BadTrim(params.trim));
    }
    if is_degenerate(&source.points) {
        return Err(RegistrationError::DegenerateSource);
    }

    let tree = KdTree::build(&target.points);
    let src: Vec<Vector3<f64>> = source
        .points
        .iter()
        .map(|p| Vector3::new(p.x, p.y, p.z))
        .collect();
    let tgt: Vec<Vector3<f64>> = target
        .points
        .iter()
        .map(|p| Vector3::new(p.x, p.y, p.z))
        .collect();

    let mut rotation = Matrix3::identity();
    let mut translation = Vector3::zeros();
    let mut rms_history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..params.max_iters {
        iterations += 1;
        let transformed: Vec<Vector3<f64>> =
            src.iter().map(|p| rotation * p + translation).collect();

        // correspondences, parallel over source points
        let matches: Vec<(usize, f64)> = transformed
            .par_iter()
            .map(|p| {
                tree.nearest(Point3::new(p[0], p[1], p[2]))
                    .expect("target cloud is nonempty")
            })
            .collect();

        // optional trimming of the worst matches
        let mut order: Vec<usize> = (0..matches.len()).collect();
        let kept = if params.trim > 0.0 {
            order.sort_by(|&a, &b| {
                matches[a]
                    .1
                    .partial_cmp(&matches[b].1)
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let keep = ((matches.len() as f64) * (1.0 - params.trim)).ceil() as usize;
            order.truncate(keep.max(3));
            order
        } else {
            order
        };

        let pairs_src: Vec<Vector3<f64>> = kept.iter().map(|&i| src[i]).collect();
        let pairs_dst: Vec<Vector3<f64>> = kept.iter().map(|&i| tgt[matches[i].0]).collect();
        let (r, t) = solve_rigid(&pairs_src, &pairs_dst);

        let e: f64 = kept
            .iter()
            .map(|&i| (r * src[i] + t - tgt[matches[i].0]).norm_squared())
            .sum();
        let rms = (e / kept.len() as f64).sqrt();
        rotation = r;
        translation = t;

        if let Some(&prev) = rms_history.last() {
            if (prev - rms).abs() < params.tol_m {
                rms_history.push(rms);
                converged = true;
                break;
            }
        }
        rms_history.push(rms);
    }

    let transform = RigidTransform {
        rotation: [
            [rotation[(0, 0)], rotation[(0, 1)], rotation[(0, 2)]],
            [rotation[(1, 0)], rotation[(1, 1)], rotation[(1, 2)]],
            [rotation[(2, 0)], rotation[(2, 1)], rotation[(2, 2)]],
        ],
        translation: [translation[0], translation[1], translation[2]],
    };

    // cloud-to-cloud statistics after alignment
    let aligned = PointCloud::new(
        format!("{}_aligned", source.id),
        source.points.iter().map(|&p| transform.apply(p)).collect(),
    );
    let (c2c_mean_m, c2c_std_m) = cloud_distance_stats(&aligned, target)?;

    Ok(RegistrationReport {
        transform,
        rms_m: rms_history.last().copied().unwrap_or(f64::NAN),
        iterations,
        converged,
        rms_history,
        c2c_mean_m,
        c2c_std_m,
    })
}

/// Mean and sample standard deviation of nearest-neighbor distances from
/// every point of `a` to `b`.
pub fn cloud_distance_stats(
    a: &PointCloud,
    b: &PointCloud,
) -> Result<(f64, f64), RegistrationError> {
    a.validate()?;
    b.validate()?;
    let tree = KdTree::build(&b.points);
    let dists: Vec<f64> = a
        .points
        .par_iter()
        .map(|&p| tree.nearest(p).expect("nonempty").1)
        .collect();
    let n = dists.len() as f64;
    let mean = dists.iter().sum::<f64>() / n;
    let std = if dists.len() < 2 {
        0.0
    } else {
        (dists.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok((mean, std))
}

// ---------------------------------------------------------------------------
// Cloud file I/O: ascii PLY and XYZ CSV
// ---------------------------------------------------------------------------

/// Reads an ascii PLY (x/y/z properties) or an XYZ CSV (optionally with a
/// header line) depending on the file content.
pub fn read_cloud(path: &std::path::Path, id: &str) -> Result<PointCloud, RegistrationError> {
    let text = std::fs::read_to_string(path).map_err(|source| RegistrationError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let perr = |message: String| RegistrationError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut points = Vec::new();
    if text.trim_start().starts_with("ply") {
        let mut lines = text.lines();
        let mut count = 0usize;
        for line in lines.by_ref() {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("element vertex") {
                count = rest
                    .trim()
                    .parse()
                    .map_err(|_| perr("bad vertex count".into()))?;
            }
            if line == "end_header" {
                break;
            }
        }
        for line in lines.take(count) {
            let vals: Vec<f64> = line
                .split_whitespace()
                .take(3)
                .map(|s| s.parse().map_err(|_| perr(format!("bad vertex: {line}"))))
                .collect::<Result<_, _>>()?;
            if vals.len() < 3 {
                return Err(perr(format!("bad vertex: {line}")));
            }
            points.push(Point3::new(vals[0], vals[1], vals[2]));
        }
        if points.len() != count {
            return Err(perr(format!(
                "expected {count} vertices, found {}",
                points.len()
            )));
        }
    } else {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 3 {
                return Err(perr(format!("expected x,y,z: {line}")));
            }
            let coords: Result<Vec<f64>, _> =
                fields[..3].iter().map(|s| s.parse::<f64>()).collect();
            match coords {
                Ok(c) => points.push(Point3::new(c[0], c[1], c[2])),
                // tolerate a single header line
                Err(_) if points.is_empty() => continue,
                Err(_) => return Err(perr(format!("bad row: {line}"))),
            }
        }
    }
    let cloud = PointCloud::new(id, points);
    cloud.validate()?;
    Ok(cloud)
}

/// Writes the cloud in the same family as `format_like` (ascii PLY when the
/// extension is `.ply`, XYZ CSV otherwise).
pub fn write_cloud(
    path: &std::path::Path,
    cloud: &PointCloud,
) -> Result<(), RegistrationError> {
    let mut out = String::new();
    let is_ply = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("ply"))
        .unwrap_or(false);
    if is_ply {
        out.push_str("ply\nformat ascii 1.0\n");
        out.push_str(&format!("element vertex {}\n", cloud.points.len()));
        out.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
        for p in &cloud.points {
            out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
        }
    } else {
        for p in &cloud.points {
            out.push_str(&format!("{},{},{}\n", p.x, p.y, p.z));
        }
    }
    std::fs::write(path, out).map_err(|source| RegistrationError::Io {
        path: path.display().to_string(),
        source,
    })
}
