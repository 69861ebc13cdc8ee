//! Scene representation and loading.
//!
//! A scene is an immutable triangle-mesh world: material-tagged object
//! groups, transmitters, receivers, and a carrier frequency. The descriptor
//! is a single JSON document; geometry may alternatively come from a
//! Wavefront OBJ file whose named groups map onto object ids.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Aabb, Point3, Triangle};
use crate::materials::MaterialCatalog;

/// Frequency window over which the material model is considered valid.
pub const FREQ_VALID_HZ: (f64, f64) = (1e9, 1e11);

/// Scenes larger than this are rejected as probable unit errors.
pub const MAX_SCENE_EXTENT_M: f64 = 1000.0;

/// Minimum triangle area; anything smaller is degenerate.
pub const MIN_TRIANGLE_AREA_M2: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("mesh {object_id:?}: triangle {triangle} references vertex {index} out of {count}")]
    VertexIndexOutOfRange {
        object_id: String,
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("mesh {object_id:?}: triangle {triangle} is degenerate (area {area:.3e} m^2)")]
    DegenerateTriangle {
        object_id: String,
        triangle: usize,
        area: f64,
    },
    #[error("duplicate object id {object_id:?}")]
    DuplicateObjectId { object_id: String },
    #[error("mesh {object_id:?} references unknown material {material:?}")]
    UnknownMaterial { object_id: String, material: String },
    #[error("mesh {object_id:?} has negative thickness {thickness_m}")]
    NegativeThickness { object_id: String, thickness_m: f64 },
    #[error("{kind} {id:?} lies outside the scene bounding box")]
    AntennaOutsideBounds { kind: &'static str, id: String },
    #[error("duplicate {kind} id {id:?}")]
    DuplicateAntennaId { kind: &'static str, id: String },
    #[error("carrier frequency {frequency_hz} Hz outside the material model window [1e9, 1e11]")]
    FrequencyOutOfRange { frequency_hz: f64 },
    #[error("scene extent {extent_m:.1} m exceeds {max_m} m; coordinates are expected in meters")]
    SceneTooLarge { extent_m: f64, max_m: f64 },
    #[error("OBJ file {path}: {message}")]
    Obj { path: String, message: String },
    #[error("mesh {object_id:?} has no geometry (no inline vertices and no matching OBJ group)")]
    MissingGeometry { object_id: String },
}

/// One material-tagged object group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub object_id: String,
    pub material_name: String,
    /// Effective slab thickness used by the transmission model.
    pub thickness_m: f64,
    pub vertices: Vec<Point3>,
    /// Vertex index triples.
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn triangle(&self, i: usize) -> Triangle {
        let [a, b, c] = self.triangles[i];
        Triangle {
            a: self.vertices[a],
            b: self.vertices[b],
            c: self.vertices[c],
        }
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::EMPTY;
        for v in &self.vertices {
            b.grow_point(*v);
        }
        b
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transmitter {
    pub id: String,
    pub position: Point3,
    pub power_dbm: f64,
    #[serde(default)]
    pub gain_dbi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Receiver {
    pub id: String,
    pub position: Point3,
    #[serde(default)]
    pub gain_dbi: f64,
}

/// Immutable world shared read-only by all tracing workers.
#[derive(Debug, Clone)]
pub struct Scene {
    pub meshes: Vec<TriangleMesh>,
    pub transmitters: Vec<Transmitter>,
    pub receivers: Vec<Receiver>,
    pub frequency_hz: f64,
}

impl Scene {
    /// Bounding box over all mesh vertices; empty for a meshless scene.
    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::EMPTY;
        for m in &self.meshes {
            b.grow_box(&m.bounds());
        }
        b
    }

    pub fn wavelength_m(&self) -> f64 {
        crate::materials::SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn transmitter(&self, id: &str) -> Option<&Transmitter> {
        self.transmitters.iter().find(|t| t.id == id)
    }

    pub fn receiver(&self, id: &str) -> Option<&Receiver> {
        self.receivers.iter().find(|r| r.id == id)
    }

    pub fn total_triangles(&self) -> usize {
        self.meshes.iter().map(|m| m.triangles.len()).sum()
    }

    /// Validates every invariant against the given material catalog.
    pub fn validate(&self, catalog: &MaterialCatalog) -> Result<(), SceneError> {
        if !(FREQ_VALID_HZ.0..=FREQ_VALID_HZ.1).contains(&self.frequency_hz) {
            return Err(SceneError::FrequencyOutOfRange {
                frequency_hz: self.frequency_hz,
            });
        }
        let mut ids = HashSet::new();
        for mesh in &self.meshes {
            if !ids.insert(mesh.object_id.clone()) {
                return Err(SceneError::DuplicateObjectId {
                    object_id: mesh.object_id.clone(),
                });
            }
            if catalog.get(&mesh.material_name).is_none() {
                return Err(SceneError::UnknownMaterial {
                    object_id: mesh.object_id.clone(),
                    material: mesh.material_name.clone(),
                });
            }
            if mesh.thickness_m < 0.0 {
                return Err(SceneError::NegativeThickness {
                    object_id: mesh.object_id.clone(),
                    thickness_m: mesh.thickness_m,
                });
            }
            for (t, tri) in mesh.triangles.iter().enumerate() {
                for &idx in tri {
                    if idx >= mesh.vertices.len() {
                        return Err(SceneError::VertexIndexOutOfRange {
                            object_id: mesh.object_id.clone(),
                            triangle: t,
                            index: idx,
                            count: mesh.vertices.len(),
                        });
                    }
                }
                let area = mesh.triangle(t).area();
                if area <= MIN_TRIANGLE_AREA_M2 {
                    return Err(SceneError::DegenerateTriangle {
                        object_id: mesh.object_id.clone(),
                        triangle: t,
                        area,
                    });
                }
            }
        }
        let bounds = self.bounds();
        if !bounds.is_empty() {
            let d = bounds.diagonal();
            let extent = d.x.max(d.y).max(d.z);
            if extent > MAX_SCENE_EXTENT_M {
                return Err(SceneError::SceneTooLarge {
                    extent_m: extent,
                    max_m: MAX_SCENE_EXTENT_M,
                });
            }
            // Antenna containment is only meaningful when there is geometry.
            for tx in &self.transmitters {
                if !bounds.contains(tx.position, 1e-9) {
                    return Err(SceneError::AntennaOutsideBounds {
                        kind: "transmitter",
                        id: tx.id.clone(),
                    });
                }
            }
            for rx in &self.receivers {
                if !bounds.contains(rx.position, 1e-9) {
                    return Err(SceneError::AntennaOutsideBounds {
                        kind: "receiver",
                        id: rx.id.clone(),
                    });
                }
            }
        }
        let mut tx_ids = HashSet::new();
        for tx in &self.transmitters {
            if !tx_ids.insert(tx.id.clone()) {
                return Err(SceneError::DuplicateAntennaId {
                    kind: "transmitter",
                    id: tx.id.clone(),
                });
            }
        }
        let mut rx_ids = HashSet::new();
        for rx in &self.receivers {
            if !rx_ids.insert(rx.id.clone()) {
                return Err(SceneError::DuplicateAntennaId {
                    kind: "receiver",
                    id: rx.id.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Default slab thickness when the descriptor omits it: thin for glass,
/// 10 cm for everything structural.
pub fn default_thickness_m(material_name: &str) -> f64 {
    if material_name.contains("glass") {
        0.01
    } else {
        0.1
    }
}

// ---------------------------------------------------------------------------
// Descriptor format
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct MeshDescriptor {
    object_id: String,
    material: String,
    #[serde(default)]
    thickness_m: Option<f64>,
    #[serde(default)]
    vertices: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    triangles: Option<Vec<[usize; 3]>>,
}

#[derive(Debug, Deserialize)]
struct AntennaDescriptor {
    id: String,
    position: [f64; 3],
    #[serde(default)]
    power_dbm: Option<f64>,
    #[serde(default)]
    gain_dbi: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct SceneDescriptor {
    frequency_hz: f64,
    #[serde(default)]
    vertices_obj: Option<String>,
    #[serde(default)]
    meshes: Vec<MeshDescriptor>,
    #[serde(default)]
    transmitters: Vec<AntennaDescriptor>,
    #[serde(default)]
    receivers: Vec<AntennaDescriptor>,
}

/// Loads and fully validates a scene descriptor.
pub fn load_scene(path: &Path, catalog: &MaterialCatalog) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let desc: SceneDescriptor =
        serde_json::from_str(&text).map_err(|e| SceneError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;

    let obj_groups = match &desc.vertices_obj {
        Some(rel) => {
            let obj_path = path.parent().unwrap_or(Path::new(".")).join(rel);
            Some(load_obj_groups(&obj_path)?)
        }
        None => None,
    };

    let mut meshes = Vec::with_capacity(desc.meshes.len());
    for md in desc.meshes {
        let thickness = md
            .thickness_m
            .unwrap_or_else(|| default_thickness_m(&md.material));
        let (vertices, triangles) = match (md.vertices, md.triangles) {
            (Some(v), Some(t)) => (v.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect(), t),
            _ => match obj_groups
                .as_ref()
                .and_then(|g| g.iter().find(|(name, _, _)| *name == md.object_id))
            {
                Some((_, v, t)) => (v.clone(), t.clone()),
                None => {
                    return Err(SceneError::MissingGeometry {
                        object_id: md.object_id,
                    })
                }
            },
        };
        meshes.push(TriangleMesh {
            object_id: md.object_id,
            material_name: md.material,
            thickness_m: thickness,
            vertices,
            triangles,
        });
    }

    let scene = Scene {
        meshes,
        transmitters: desc
            .transmitters
            .into_iter()
            .map(|a| Transmitter {
                id: a.id,
                position: Point3::new(a.position[0], a.position[1], a.position[2]),
                power_dbm: a.power_dbm.unwrap_or(0.0),
                gain_dbi: a.gain_dbi.unwrap_or(0.0),
            })
            .collect(),
        receivers: desc
            .receivers
            .into_iter()
            .map(|a| Receiver {
                id: a.id,
                position: Point3::new(a.position[0], a.position[1], a.position[2]),
                gain_dbi: a.gain_dbi.unwrap_or(0.0),
            })
            .collect(),
        frequency_hz: desc.frequency_hz,
    };
    scene.validate(catalog)?;
    Ok(scene)
}

type ObjGroup = (String, Vec<Point3>, Vec<[usize; 3]>);

/// Minimal Wavefront OBJ reader: `v`, `f`, `g`/`o` records. Polygon faces
/// are fan-triangulated. Group-local meshes reuse the global vertex pool,
/// re-indexed per group.
fn load_obj_groups(path: &Path) -> Result<Vec<ObjGroup>, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let err = |message: String| SceneError::Obj {
        path: path.display().to_string(),
        message,
    };

    let mut vertices: Vec<Point3> = Vec::new();
    let mut groups: Vec<(String, Vec<[usize; 3]>)> = Vec::new();
    let mut current: Option<usize> = None;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = [0.0; 3];
                for c in &mut coord {
                    *c = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(format!("line {}: bad vertex", lineno + 1)))?;
                }
                vertices.push(Point3::new(coord[0], coord[1], coord[2]));
            }
            Some("g") | Some("o") => {
                let name = parts.collect::<Vec<_>>().join(" ");
                let idx = match groups.iter().position(|(n, _)| *n == name) {
                    Some(i) => i,
                    None => {
                        groups.push((name, Vec::new()));
                        groups.len() - 1
                    }
                };
                current = Some(idx);
            }
            Some("f") => {
                let gi = match current {
                    Some(i) => i,
                    None => {
                        groups.push(("default".to_string(), Vec::new()));
                        current = Some(groups.len() - 1);
                        groups.len() - 1
                    }
                };
                let idx: Vec<usize> = parts
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        first
                            .parse::<i64>()
                            .ok()
                            .and_then(|i| {
                                if i > 0 {
                                    Some(i as usize - 1)
                                } else if i < 0 {
                                    vertices.len().checked_sub(i.unsigned_abs() as usize)
                                } else {
                                    None
                                }
                            })
                            .ok_or_else(|| err(format!("line {}: bad face index", lineno + 1)))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(err(format!("line {}: face with <3 vertices", lineno + 1)));
                }
                for k in 1..idx.len() - 1 {
                    groups[gi].1.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }

    // Re-index each group against its own vertex list.
    let mut out = Vec::with_capacity(groups.len());
    for (name, tris) in groups {
        let mut map: Vec<Option<usize>> = vec![None; vertices.len()];
        let mut local_vertices = Vec::new();
        let mut local_tris = Vec::with_capacity(tris.len());
        for tri in tris {
            let mut local = [0usize; 3];
            for (slot, &gidx) in local.iter_mut().zip(tri.iter()) {
                if gidx >= vertices.len() {
                    return Err(err(format!("face index {} out of range", gidx + 1)));
                }
                *slot = match map[gidx] {
                    Some(l) => l,
                    None => {
                        local_vertices.push(vertices[gidx]);
                        map[gidx] = Some(local_vertices.len() - 1);
                        local_vertices.len() - 1
                    }
                };
            }
            local_tris.push(local);
        }
        out.push((name, local_vertices, local_tris));
    }
    Ok(out)
}
