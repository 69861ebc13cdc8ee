//! Geometric substrate: points, vectors, axis-aligned boxes, and the
//! ray-triangle intersection test used by the whole tracer.
//!
//! All lengths are SI meters. The coordinate frame is right-handed with z up;
//! azimuth 0 degrees points along +x.

use serde::{Deserialize, Serialize};

/// Edge-function epsilon for the barycentric inside test. Grazing incidence
/// at wall junctions is the dominant degenerate case in box-like rooms, so
/// the test is inclusive by this margin.
pub const EDGE_EPS: f64 = 1e-9;

/// Determinant cutoff below which a ray is treated as parallel to a triangle.
pub const PARALLEL_EPS: f64 = 1e-12;

/// A position in 3D space, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// A free 3D vector (not necessarily unit length).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// A unit-length direction. Constructed only through [`UnitVec3::new`],
/// which normalizes and rejects near-zero input; the norm stays within
/// 1e-12 of one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVec3(Vec3);

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vec(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (other - self).norm()
    }
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn normalize(self) -> Option<UnitVec3> {
        UnitVec3::new(self)
    }
}

impl UnitVec3 {
    /// Normalizes `v`; returns `None` when `|v|` is too small to define a
    /// direction.
    pub fn new(v: Vec3) -> Option<UnitVec3> {
        let n = v.norm();
        if n < 1e-30 {
            return None;
        }
        Some(UnitVec3(v.scale(1.0 / n)))
    }

    /// Wraps a vector that is already unit length (checked in debug builds).
    pub fn from_unit(v: Vec3) -> UnitVec3 {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9);
        UnitVec3(v)
    }

    pub fn as_vec(self) -> Vec3 {
        self.0
    }

    pub fn x(self) -> f64 {
        self.0.x
    }
    pub fn y(self) -> f64 {
        self.0.y
    }
    pub fn z(self) -> f64 {
        self.0.z
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.0.dot(other)
    }

    pub fn neg(self) -> UnitVec3 {
        UnitVec3(self.0.scale(-1.0))
    }

    /// Mirror reflection about a plane with unit normal `n`.
    pub fn reflect(self, n: UnitVec3) -> UnitVec3 {
        let d = self.0;
        let k = 2.0 * d.dot(n.0);
        UnitVec3::from_unit(Vec3::new(
            d.x - k * n.0.x,
            d.y - k * n.0.y,
            d.z - k * n.0.z,
        ))
    }
}

impl std::ops::Sub for Point3 {
    type Output = Vec3;
    fn sub(self, rhs: Point3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Add<Vec3> for Point3 {
    type Output = Point3;
    fn add(self, rhs: Vec3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn grow_point(&mut self, p: Point3) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.min.z = self.min.z.min(p.z);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
        self.max.z = self.max.z.max(p.z);
    }

    pub fn grow_box(&mut self, b: &Aabb) {
        self.grow_point(b.min);
        self.grow_point(b.max);
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn contains(&self, p: Point3, eps: f64) -> bool {
        p.x >= self.min.x - eps
            && p.x <= self.max.x + eps
            && p.y >= self.min.y - eps
            && p.y <= self.max.y + eps
            && p.z >= self.min.z - eps
            && p.z <= self.max.z + eps
    }

    pub fn diagonal(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn centroid(&self) -> Point3 {
        Point3::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
            0.5 * (self.min.z + self.max.z),
        )
    }

    /// Longest axis index: 0 = x, 1 = y, 2 = z. Ties resolve to the lowest
    /// index so builds stay deterministic.
    pub fn longest_axis(&self) -> usize {
        let d = self.diagonal();
        if d.x >= d.y && d.x >= d.z {
            0
        } else if d.y >= d.z {
            1
        } else {
            2
        }
    }

    /// Slab test; returns the entry distance when the ray hits the box within
    /// `(t_min, t_max)`.
    pub fn ray_entry(&self, origin: Point3, inv_dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for axis in 0..3 {
            let (lo, hi, o, inv) = match axis {
                0 => (self.min.x, self.max.x, origin.x, inv_dir.x),
                1 => (self.min.y, self.max.y, origin.y, inv_dir.y),
                _ => (self.min.z, self.max.z, origin.z, inv_dir.z),
            };
            let mut ta = (lo - o) * inv;
            let mut tb = (hi - o) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

/// One triangle, unpacked to world-space vertices.
#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    pub a: Point3,
    pub b: Point3,
    pub c: Point3,
}

impl Triangle {
    pub fn area(&self) -> f64 {
        0.5 * (self.b - self.a).cross(self.c - self.a).norm()
    }

    /// Geometric normal from winding order (a, b, c), unnormalized.
    pub fn raw_normal(&self) -> Vec3 {
        (self.b - self.a).cross(self.c - self.a)
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::EMPTY;
        b.grow_point(self.a);
        b.grow_point(self.b);
        b.grow_point(self.c);
        b
    }

    /// Moller-Trumbore with inclusive barycentric margins of [`EDGE_EPS`] so
    /// rays through shared edges register on both triangles (the caller's
    /// tie-break then picks one deterministically).
    ///
    /// Returns `(t, u, v)` for hits strictly beyond `t_min`.
    pub fn intersect(&self, origin: Point3, dir: Vec3, t_min: f64) -> Option<(f64, f64, f64)> {
        let e1 = self.b - self.a;
        let e2 = self.c - self.a;
        let pvec = dir.cross(e2);
        let det = e1.dot(pvec);
        if det.abs() < PARALLEL_EPS {
            return None;
        }
        let inv_det = 1.0 / det;
        let tvec = origin - self.a;
        let u = tvec.dot(pvec) * inv_det;
        if !(-EDGE_EPS..=1.0 + EDGE_EPS).contains(&u) {
            return None;
        }
        let qvec = tvec.cross(e1);
        let v = dir.dot(qvec) * inv_det;
        if v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS {
            return None;
        }
        let t = e2.dot(qvec) * inv_det;
        if t <= t_min {
            return None;
        }
        Some((t, u, v))
    }

    /// True when `p` lies on the triangle's plane patch, tested with 2D
    /// barycentric coordinates and the shared edge margin.
    pub fn contains_on_plane(&self, p: Point3, eps: f64) -> bool {
        let e1 = self.b - self.a;
        let e2 = self.c - self.a;
        let w = p - self.a;
        let d11 = e1.dot(e1);
        let d12 = e1.dot(e2);
        let d22 = e2.dot(e2);
        let dw1 = w.dot(e1);
        let dw2 = w.dot(e2);
        let denom = d11 * d22 - d12 * d12;
        if denom.abs() < 1e-30 {
            return false;
        }
        let u = (d22 * dw1 - d12 * dw2) / denom;
        let v = (d11 * dw2 - d12 * dw1) / denom;
        u >= -eps && v >= -eps && u + v <= 1.0 + eps
    }
}

/// Mirror a point across the plane `n . x = offset` (n unit).
pub fn mirror_point(p: Point3, normal: UnitVec3, offset: f64) -> Point3 {
    let d = normal.dot(p.to_vec()) - offset;
    p + normal.as_vec().scale(-2.0 * d)
}

/// Signed distance from `p` to the plane `n . x = offset`.
pub fn plane_distance(p: Point3, normal: UnitVec3, offset: f64) -> f64 {
    normal.dot(p.to_vec()) - offset
}
