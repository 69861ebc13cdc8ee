//! Bounding-volume hierarchy over all scene triangles.
//!
//! Construction is deterministic: median split on the longest centroid axis,
//! ties broken by the lowest global triangle index. Queries return exactly
//! what a linear scan over every triangle would return, including the
//! tie-break for equal-distance hits.

use crate::geom::{Aabb, Point3, Triangle, UnitVec3, Vec3};
use crate::scene::Scene;

/// Distances within this window count as a tie and resolve by
/// (object_id, triangle_index).
pub const TIE_EPS_M: f64 = 1e-9;

/// Default self-intersection guard.
pub const DEFAULT_T_MIN: f64 = 1e-6;

const LEAF_SIZE: usize = 4;

/// A triangle reference: which mesh and which triangle within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriRef {
    pub mesh: u32,
    pub triangle: u32,
}

/// Intersection result.
#[derive(Debug, Clone)]
pub struct Hit {
    pub distance_m: f64,
    pub mesh_index: usize,
    pub triangle_index: usize,
    /// Unit normal oriented against the incident ray.
    pub geometric_normal: UnitVec3,
    pub barycentric: (f64, f64),
}

impl Hit {
    pub fn point(&self, origin: Point3, dir: UnitVec3) -> Point3 {
        origin + dir.as_vec().scale(self.distance_m)
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        bounds: Aabb,
        start: u32,
        count: u32,
    },
    Inner {
        bounds: Aabb,
        left: u32,
        right: u32,
    },
}

/// Immutable acceleration structure; freely shared across workers.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle refs in leaf order.
    tris: Vec<TriRef>,
    /// Unpacked world-space triangles, parallel to `tris`.
    world: Vec<Triangle>,
}

struct BuildItem {
    tri: TriRef,
    bounds: Aabb,
    centroid: Point3,
    /// Global index for deterministic tie-breaking.
    order: usize,
}

/// Builds the hierarchy. An empty scene yields an empty tree that misses
/// every ray.
pub fn build_bvh(scene: &Scene) -> Bvh {
    let mut items = Vec::with_capacity(scene.total_triangles());
    let mut order = 0usize;
    for (mi, mesh) in scene.meshes.iter().enumerate() {
        for ti in 0..mesh.triangles.len() {
            let tri = mesh.triangle(ti);
            let bounds = tri.bounds();
            items.push(BuildItem {
                tri: TriRef {
                    mesh: mi as u32,
                    triangle: ti as u32,
                },
                bounds,
                centroid: bounds.centroid(),
                order,
            });
            order += 1;
        }
    }

    let mut bvh = Bvh {
        nodes: Vec::new(),
        tris: Vec::new(),
        world: Vec::new(),
    };
    if items.is_empty() {
        return bvh;
    }
    let n = items.len();
    build_node(&mut bvh, &mut items, 0, n, scene);
    bvh
}

fn range_bounds(items: &[BuildItem], start: usize, end: usize) -> Aabb {
    let mut b = Aabb::EMPTY;
    for item in &items[start..end] {
        b.grow_box(&item.bounds);
    }
    b
}

fn build_node(bvh: &mut Bvh, items: &mut [BuildItem], start: usize, end: usize, scene: &Scene) -> u32 {
    let bounds = range_bounds(items, start, end);
    let count = end - start;
    if count <= LEAF_SIZE {
        let first = bvh.tris.len() as u32;
        // Leaf triangles in global-index order for deterministic layout.
        let mut leaf: Vec<&BuildItem> = items[start..end].iter().collect();
        leaf.sort_by_key(|it| it.order);
        for it in leaf {
            bvh.tris.push(it.tri);
            bvh.world
                .push(scene.meshes[it.tri.mesh as usize].triangle(it.tri.triangle as usize));
        }
        bvh.nodes.push(Node::Leaf {
            bounds,
            start: first,
            count: count as u32,
        });
        return (bvh.nodes.len() - 1) as u32;
    }

    // Median split on the longest axis of the centroid bounds.
    let mut cb = Aabb::EMPTY;
    for item in &items[start..end] {
        cb.grow_point(item.centroid);
    }
    let axis = cb.longest_axis();
    let key = |it: &BuildItem| match axis {
        0 => it.centroid.x,
        1 => it.centroid.y,
        _ => it.centroid.z,
    };
    items[start..end].sort_by(|a, b| {
        key(a)
            .partial_cmp(&key(b))
            .unwrap()
            .then(a.order.cmp(&b.order))
    });
    let mid = start + count / 2;

    let node_index = bvh.nodes.len();
    bvh.nodes.push(Node::Leaf {
        // placeholder, patched below
        bounds,
        start: 0,
        count: 0,
    });
    let left = build_node(bvh, items, start, mid, scene);
    let right = build_node(bvh, items, mid, end, scene);
    bvh.nodes[node_index] = Node::Inner {
        bounds,
        left,
        right,
    };
    node_index as u32
}

impl Bvh {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    fn make_hit(&self, slot: usize, t: f64, u: f64, v: f64, dir: Vec3) -> Hit {
        let tri_ref = self.tris[slot];
        let raw = self.world[slot].raw_normal();
        let mut n = raw.normalize().expect("degenerate triangles are rejected at load");
        if n.dot(dir) > 0.0 {
            n = n.neg();
        }
        Hit {
            distance_m: t,
            mesh_index: tri_ref.mesh as usize,
            triangle_index: tri_ref.triangle as usize,
            geometric_normal: n,
            barycentric: (u, v),
        }
    }

    /// Nearest hit strictly beyond `t_min`. Equal distances (within
    /// [`TIE_EPS_M`]) resolve to the lowest (object_id, triangle_index).
    pub fn intersect(
        &self,
        scene: &Scene,
        origin: Point3,
        dir: UnitVec3,
        t_min: f64,
    ) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let d = dir.as_vec();
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);

        let mut best: Option<(f64, usize, f64, f64)> = None; // (t, slot, u, v)
        let mut stack: Vec<u32> = vec![0];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let bounds = match node {
                Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
            };
            let limit = best.map_or(f64::INFINITY, |(t, ..)| t + TIE_EPS_M);
            if bounds.ray_entry(origin, inv, t_min, limit).is_none() {
                continue;
            }
            match node {
                Node::Leaf { start, count, .. } => {
                    for slot in *start as usize..(*start + *count) as usize {
                        if let Some((t, u, v)) = self.world[slot].intersect(origin, d, t_min) {
                            best = match best {
                                None => Some((t, slot, u, v)),
                                Some((bt, bslot, bu, bv)) => {
                                    if t < bt - TIE_EPS_M {
                                        Some((t, slot, u, v))
                                    } else if t <= bt + TIE_EPS_M
                                        && self.tie_before(scene, slot, bslot)
                                    {
                                        Some((t.min(bt), slot, u, v))
                                    } else {
                                        Some((bt, bslot, bu, bv))
                                    }
                                }
                            };
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        best.map(|(t, slot, u, v)| self.make_hit(slot, t, u, v, d))
    }

    fn tie_before(&self, scene: &Scene, a: usize, b: usize) -> bool {
        let ra = self.tris[a];
        let rb = self.tris[b];
        let oa = &scene.meshes[ra.mesh as usize].object_id;
        let ob = &scene.meshes[rb.mesh as usize].object_id;
        (oa, ra.triangle) < (ob, rb.triangle)
    }

    /// Every hit along `(t_min, t_max)`, sorted by distance then by the
    /// deterministic tie-break. Used for transmission crossings.
    pub fn intersect_all(
        &self,
        scene: &Scene,
        origin: Point3,
        dir: UnitVec3,
        t_min: f64,
        t_max: f64,
    ) -> Vec<Hit> {
        if self.nodes.is_empty() {
            return Vec::new();
        }
        let d = dir.as_vec();
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut found: Vec<(f64, usize, f64, f64)> = Vec::new();
        let mut stack: Vec<u32> = vec![0];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            let bounds = match node {
                Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
            };
            if bounds.ray_entry(origin, inv, t_min, t_max).is_none() {
                continue;
            }
            match node {
                Node::Leaf { start, count, .. } => {
                    for slot in *start as usize..(*start + *count) as usize {
                        if let Some((t, u, v)) = self.world[slot].intersect(origin, d, t_min) {
                            if t < t_max {
                                found.push((t, slot, u, v));
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        found.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then_with(|| {
                    let ra = self.tris[a.1];
                    let rb = self.tris[b.1];
                    let oa = &scene.meshes[ra.mesh as usize].object_id;
                    let ob = &scene.meshes[rb.mesh as usize].object_id;
                    (oa, ra.triangle).cmp(&(ob, rb.triangle))
                })
        });
        found
            .into_iter()
            .map(|(t, slot, u, v)| self.make_hit(slot, t, u, v, d))
            .collect()
    }

    /// True when the open segment between `a` and `b` is free of geometry,
    /// with a guard of `t_min` at both ends.
    pub fn segment_clear(&self, scene: &Scene, a: Point3, b: Point3, t_min: f64) -> bool {
        let v = b - a;
        let len = v.norm();
        if len <= 2.0 * t_min {
            return true;
        }
        let dir = UnitVec3::from_unit(v.scale(1.0 / len));
        match self.intersect(scene, a, dir, t_min) {
            Some(hit) => hit.distance_m >= len - t_min,
            None => true,
        }
    }
}
