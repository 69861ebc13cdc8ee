//! Shooting-and-bouncing-rays multipath extraction.
//!
//! Rays launch from the transmitter on a seed-rotated Fibonacci lattice and
//! bounce through the scene. A ray passing within the distance-proportional
//! reception sphere registers a candidate, identified by its ordered
//! reflection sequence. Every candidate is then rebuilt exactly by mirror
//! unfolding: reflection points are solved in closed form, segment visibility
//! is re-checked, transmission crossings are recomputed, and the amplitude is
//! evaluated from the exact length. Duplicate captures of one physical path
//! therefore collapse to a single, exactly-corrected record, and the output
//! is independent of worker count.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::{Bvh, DEFAULT_T_MIN};
use crate::geom::{plane_distance, mirror_point, Point3, UnitVec3, Vec3};
use crate::materials::{
    eval_medium, reflection_coeff, slab_transmission, ComplexMedium, MaterialCatalog,
    PolarizationMode, SPEED_OF_LIGHT,
};
use crate::scene::{Receiver, Scene, Transmitter};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("invalid trace config: {0}")]
    InvalidConfig(String),
    #[error("transmitter {tx:?} and receiver {rx:?} share the same position")]
    CoincidentAntennas { tx: String, rx: String },
    #[error("mesh {object_id:?} references unknown material {material:?}")]
    UnknownMaterial { object_id: String, material: String },
    #[error("unknown transmitter {0:?}")]
    UnknownTransmitter(String),
    #[error("unknown receiver {0:?}")]
    UnknownReceiver(String),
}

/// Tracing parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Number of launched rays.
    pub num_rays: usize,
    /// Maximum number of reflections per path.
    pub max_depth: usize,
    /// Received-power cutoff, dBm, assuming the transmitter's power.
    pub min_power_dbm: f64,
    /// Strongest-path retention count.
    pub max_paths: usize,
    /// Reception-sphere radius coefficient.
    pub rx_sphere_gamma: f64,
    /// Spawn transmitted continuations through slabs.
    pub enable_transmission: bool,
    /// Rotates the launch lattice; physics is seed-independent for
    /// captured-and-corrected paths.
    pub seed: u64,
    /// Polarization collapse for scalar amplitudes.
    #[serde(default)]
    pub polarization: PolarizationMode,
    /// Merge coplanar triangles of one object into a single interaction
    /// surface for dedup and exact correction.
    #[serde(default = "default_true")]
    pub coplanar_merge: bool,
}

fn default_true() -> bool {
    true
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            num_rays: 100_000,
            max_depth: 6,
            min_power_dbm: -130.0,
            max_paths: 100,
            rx_sphere_gamma: 1.0,
            enable_transmission: true,
            seed: 0,
            polarization: PolarizationMode::default(),
            coplanar_merge: true,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.num_rays < 1 {
            return Err(TraceError::InvalidConfig("num_rays must be >= 1".into()));
        }
        if self.max_paths < 1 {
            return Err(TraceError::InvalidConfig("max_paths must be >= 1".into()));
        }
        if !(self.rx_sphere_gamma > 0.0) {
            return Err(TraceError::InvalidConfig(
                "rx_sphere_gamma must be > 0".into(),
            ));
        }
        if !self.min_power_dbm.is_finite() {
            return Err(TraceError::InvalidConfig(
                "min_power_dbm must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Reflection,
    Transmission,
}

/// One surface interaction along a path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Interaction {
    pub kind: InteractionKind,
    pub object_id: String,
    pub triangle_index: usize,
    pub point: Point3,
    pub theta_i_rad: f64,
    /// Complex amplitude factor contributed by this interaction.
    pub coefficient: Complex64,
}

/// One extracted multipath component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathRecord {
    pub tx_id: String,
    pub rx_id: String,
    pub length_m: f64,
    pub delay_s: f64,
    /// Linear voltage-scale amplitude including free-space spreading.
    pub amplitude: Complex64,
    pub phase_rad: f64,
    pub aoa_azimuth_deg: f64,
    pub aoa_zenith_deg: f64,
    pub aod_azimuth_deg: f64,
    pub aod_zenith_deg: f64,
    pub interactions: Vec<Interaction>,
    pub is_los: bool,
    /// Canonical interaction signature, e.g. `R:walls:0;T:glass:14`.
    pub signature: String,
}

impl PathRecord {
    pub fn power_linear(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Paths for one transmitter-receiver pair, sorted by descending power.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSet {
    pub tx_id: String,
    pub rx_id: String,
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub frequency_hz: f64,
    pub config: TraceConfig,
    pub paths: Vec<PathRecord>,
}

impl PathSet {
    /// Received power of one path given the pair's link budget, dBm.
    pub fn received_power_dbm(&self, path: &PathRecord) -> f64 {
        self.tx_power_dbm
            + self.tx_gain_dbi
            + self.rx_gain_dbi
            + 10.0 * path.power_linear().log10()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Launch lattice
// ---------------------------------------------------------------------------

/// SplitMix64; tiny, stable PRNG for seed-derived rotations.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Uniform random rotation (Shoemake quaternion method) derived from `seed`.
/// Seed 0 leaves the canonical lattice unrotated.
fn seed_rotation(seed: u64) -> [[f64; 3]; 3] {
    if seed == 0 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let mut s = seed;
    let u1 = unit_f64(splitmix64(&mut s));
    let u2 = unit_f64(splitmix64(&mut s));
    let u3 = unit_f64(splitmix64(&mut s));
    let two_pi = 2.0 * std::f64::consts::PI;
    let (w, x, y, z) = (
        (1.0 - u1).sqrt() * (two_pi * u2).sin(),
        (1.0 - u1).sqrt() * (two_pi * u2).cos(),
        u1.sqrt() * (two_pi * u3).sin(),
        u1.sqrt() * (two_pi * u3).cos(),
    );
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

fn rotate(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

/// `n` near-uniform directions: Fibonacci lattice rotated by a seed-derived
/// rotation. Deterministic for a given `(n, seed)`.
pub fn launch_directions(n: usize, seed: u64) -> Vec<UnitVec3> {
    let rot = seed_rotation(seed);
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = golden_angle * i as f64;
            let v = rotate(&rot, Vec3::new(r * a.cos(), r * a.sin(), z));
            v.normalize().expect("lattice directions are unit length")
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Trace context: precomputed per-scene interaction data
// ---------------------------------------------------------------------------

struct MeshPhysics {
    medium: ComplexMedium,
    thickness_m: f64,
    /// Per-triangle coplanar group index.
    group_of_triangle: Vec<u32>,
    /// Per-group plane and representative (lowest) triangle index.
    groups: Vec<GroupPlane>,
}

#[derive(Clone, Copy)]
struct GroupPlane {
    normal: UnitVec3,
    offset: f64,
    representative: u32,
}

struct TraceContext<'a> {
    scene: &'a Scene,
    bvh: &'a Bvh,
    meshes: Vec<MeshPhysics>,
    air: ComplexMedium,
    lambda: f64,
    pol: PolarizationMode,
}

/// Canonical plane of a triangle: unit normal with a sign convention plus
/// offset, so coplanar triangles with opposite winding share one key.
fn canonical_plane(normal: Vec3, point: Point3) -> (UnitVec3, f64) {
    let mut n = normal.normalize().expect("degenerate triangle");
    let v = n.as_vec();
    let flip = if v.x.abs() > 1e-12 {
        v.x < 0.0
    } else if v.y.abs() > 1e-12 {
        v.y < 0.0
    } else {
        v.z < 0.0
    };
    if flip {
        n = n.neg();
    }
    (n, n.dot(point.to_vec()))
}

const PLANE_MERGE_EPS: f64 = 1e-6;

impl<'a> TraceContext<'a> {
    fn new(
        scene: &'a Scene,
        bvh: &'a Bvh,
        catalog: &MaterialCatalog,
        cfg: &TraceConfig,
    ) -> Result<Self, TraceError> {
        let mut meshes = Vec::with_capacity(scene.meshes.len());
        for mesh in &scene.meshes {
            let material = catalog.get(&mesh.material_name).ok_or_else(|| {
                TraceError::UnknownMaterial {
                    object_id: mesh.object_id.clone(),
                    material: mesh.material_name.clone(),
                }
            })?;
            let medium = eval_medium(material, scene.frequency_hz);

            let n_tris = mesh.triangles.len();
            let mut group_of_triangle = vec![0u32; n_tris];
            let mut groups: Vec<GroupPlane> = Vec::new();
            for ti in 0..n_tris {
                let tri = mesh.triangle(ti);
                let (n, o) = canonical_plane(tri.raw_normal(), tri.a);
                let found = if cfg.coplanar_merge {
                    groups.iter().position(|g| {
                        (g.offset - o).abs() <= PLANE_MERGE_EPS
                            && (g.normal.as_vec() - n.as_vec()).norm() <= PLANE_MERGE_EPS
                    })
                } else {
                    None
                };
                let gi = match found {
                    Some(gi) => gi,
                    None => {
                        groups.push(GroupPlane {
                            normal: n,
                            offset: o,
                            representative: ti as u32,
                        });
                        groups.len() - 1
                    }
                };
                group_of_triangle[ti] = gi as u32;
            }
            meshes.push(MeshPhysics {
                medium,
                thickness_m: mesh.thickness_m,
                group_of_triangle,
                groups,
            });
        }
        Ok(TraceContext {
            scene,
            bvh,
            meshes,
            air: ComplexMedium::vacuum(),
            lambda: scene.wavelength_m(),
            pol: cfg.polarization,
        })
    }

    fn group_plane(&self, mesh: usize, group: u32) -> GroupPlane {
        self.meshes[mesh].groups[group as usize]
    }
}

/// A candidate is the ordered reflection sequence `(mesh, coplanar group)`.
type CandidateKey = Vec<(u32, u32)>;

// ---------------------------------------------------------------------------
// Ray walking
// ---------------------------------------------------------------------------

struct WalkFrame {
    origin: Point3,
    dir: UnitVec3,
    unfolded_m: f64,
    /// Running |product of interaction coefficient magnitudes|.
    amp_mag: f64,
    depth: usize,
    key: CandidateKey,
}

/// Walks one launched ray, pushing every captured reflection sequence into
/// `out`.
#[allow(clippy::too_many_arguments)]
fn walk_ray(
    ctx: &TraceContext,
    rx_pos: Point3,
    dir0: UnitVec3,
    cfg: &TraceConfig,
    alpha_sep: f64,
    // keep if amp_mag >= prune_slope * path_length
    prune_slope: f64,
    tx_pos: Point3,
    out: &mut BTreeSet<CandidateKey>,
) {
    let mut stack = vec![WalkFrame {
        origin: tx_pos,
        dir: dir0,
        unfolded_m: 0.0,
        amp_mag: 1.0,
        depth: 0,
        key: Vec::new(),
    }];

    while let Some(frame) = stack.pop() {
        let hit = ctx
            .bvh
            .intersect(ctx.scene, frame.origin, frame.dir, DEFAULT_T_MIN);
        let t_hit = hit.as_ref().map_or(f64::INFINITY, |h| h.distance_m);

        // Reception-sphere test on this segment.
        let to_rx = rx_pos - frame.origin;
        let s = frame.dir.dot(to_rx).clamp(0.0, t_hit);
        let closest = frame.origin + frame.dir.as_vec().scale(s);
        let miss = rx_pos.distance(closest);
        let unfolded = frame.unfolded_m + s;
        if unfolded > 0.0 && miss <= cfg.rx_sphere_gamma * unfolded * alpha_sep {
            out.insert(frame.key.clone());
        }

        let Some(hit) = hit else { continue };
        let mesh_idx = hit.mesh_index;
        let phys = &ctx.meshes[mesh_idx];
        let point = hit.point(frame.origin, frame.dir);
        let cos_i = (-frame.dir.dot(hit.geometric_normal.as_vec())).clamp(-1.0, 1.0);
        let theta_i = cos_i.acos();
        let len_hit = frame.unfolded_m + hit.distance_m;

        // Transmitted continuation: same direction, attenuated by the slab.
        if cfg.enable_transmission {
            let t = slab_transmission(
                theta_i,
                &ctx.air,
                &phys.medium,
                phys.thickness_m,
                ctx.scene.frequency_hz,
                ctx.pol,
            )
            .norm();
            let amp = frame.amp_mag * t;
            if amp >= prune_slope * len_hit {
                stack.push(WalkFrame {
                    origin: point,
                    dir: frame.dir,
                    unfolded_m: len_hit,
                    amp_mag: amp,
                    depth: frame.depth,
                    key: frame.key.clone(),
                });
            }
        }

        // Reflected continuation.
        if frame.depth < cfg.max_depth {
            let r = reflection_coeff(theta_i, &ctx.air, &phys.medium, ctx.pol).norm();
            let amp = frame.amp_mag * r;
            if amp >= prune_slope * len_hit {
                let group = phys.group_of_triangle[hit.triangle_index];
                let mut key = frame.key;
                key.push((mesh_idx as u32, group));
                stack.push(WalkFrame {
                    origin: point,
                    dir: frame.dir.reflect(hit.geometric_normal),
                    unfolded_m: len_hit,
                    amp_mag: amp,
                    depth: frame.depth + 1,
                    key,
                });
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Exact correction
// ---------------------------------------------------------------------------

struct CorrectionInput<'a> {
    ctx: &'a TraceContext<'a>,
    cfg: &'a TraceConfig,
    tx: &'a Transmitter,
    rx: &'a Receiver,
    /// Minimum received power expressed as a linear amplitude bound factor.
    budget_dbm: f64,
}

/// Rebuilds the exact specular path for a reflection sequence, or rejects it.
fn correct_candidate(input: &CorrectionInput, key: &CandidateKey) -> Option<PathRecord> {
    let ctx = input.ctx;
    let k = key.len();

    // Mirror the transmitter successively across the reflection planes.
    let planes: Vec<GroupPlane> = key
        .iter()
        .map(|&(mesh, group)| ctx.group_plane(mesh as usize, group))
        .collect();
    let mut images = Vec::with_capacity(k + 1);
    images.push(input.tx.position);
    for plane in &planes {
        let prev = *images.last().unwrap();
        images.push(mirror_point(prev, plane.normal, plane.offset));
    }

    // Back-substitute reflection points from the receiver side.
    let mut points = vec![input.rx.position; k + 2];
    points[0] = input.tx.position;
    for i in (1..=k).rev() {
        let plane = planes[i - 1];
        let a = points[i + 1];
        let b = images[i];
        let da = plane_distance(a, plane.normal, plane.offset);
        let db = plane_distance(b, plane.normal, plane.offset);
        if (da - db).abs() < 1e-12 || da * db > 0.0 {
            return None; // segment does not cross the mirror plane
        }
        let t = da / (da - db);
        if !(1e-9..=1.0 - 1e-9).contains(&t) {
            return None;
        }
        points[i] = a + (b - a).scale(t);
        // The specular point must land on actual geometry of this group.
        let (mesh_idx, group) = (key[i - 1].0 as usize, key[i - 1].1);
        if !point_on_group(ctx, mesh_idx, group, points[i]) {
            return None;
        }
    }

    // Walk the polyline: visibility, transmission crossings, reflection
    // coefficients, exact length.
    let mut length = 0.0;
    let mut coeff = Complex64::new(1.0, 0.0);
    let mut interactions: Vec<Interaction> = Vec::new();
    let mut signature = String::new();

    for i in 0..=k {
        let a = points[i];
        let b = points[i + 1];
        let v = b - a;
        let seg_len = v.norm();
        if seg_len < 2.0 * DEFAULT_T_MIN {
            return None;
        }
        let dir = UnitVec3::from_unit(v.scale(1.0 / seg_len));
        length += seg_len;

        // Interior crossings are transmissions (or occlusions).
        let crossings =
            ctx.bvh
                .intersect_all(ctx.scene, a, dir, DEFAULT_T_MIN, seg_len - DEFAULT_T_MIN);
        let mut last: Option<(usize, u32, f64)> = None;
        for hit in crossings {
            let mesh_idx = hit.mesh_index;
            let phys = &ctx.meshes[mesh_idx];
            let group = phys.group_of_triangle[hit.triangle_index];
            // Coincident duplicate (shared edge of one merged surface).
            if let Some((lm, lg, lt)) = last {
                if lm == mesh_idx && lg == group && (hit.distance_m - lt).abs() < 1e-6 {
                    continue;
                }
            }
            last = Some((mesh_idx, group, hit.distance_m));
            if !input.cfg.enable_transmission {
                return None;
            }
            let cos_i = (-dir.dot(hit.geometric_normal.as_vec())).clamp(-1.0, 1.0);
            let theta_i = cos_i.acos();
            let t = slab_transmission(
                theta_i,
                &ctx.air,
                &phys.medium,
                phys.thickness_m,
                ctx.scene.frequency_hz,
                ctx.pol,
            );
            coeff *= t;
            let object_id = ctx.scene.meshes[mesh_idx].object_id.clone();
            let repr = phys.groups[group as usize].representative;
            if !signature.is_empty() {
                signature.push(';');
            }
            signature.push_str(&format!("T:{}:{}", object_id, repr));
            interactions.push(Interaction {
                kind: InteractionKind::Transmission,
                object_id,
                triangle_index: hit.triangle_index,
                point: hit.point(a, dir),
                theta_i_rad: theta_i,
                coefficient: t,
            });
        }

        // Reflection at the segment's far endpoint (except the last segment).
        if i < k {
            let (mesh_idx, group) = (key[i].0 as usize, key[i].1);
            let phys = &ctx.meshes[mesh_idx];
            let plane = planes[i];
            let cos_i = dir.dot(plane.normal.as_vec()).abs().clamp(0.0, 1.0);
            let theta_i = cos_i.acos();
            let r = reflection_coeff(
                theta_i,
                &ctx.air,
                &phys.medium,
                ctx.pol,
            );
            coeff *= r;
            let object_id = ctx.scene.meshes[mesh_idx].object_id.clone();
            if !signature.is_empty() {
                signature.push(';');
            }
            signature.push_str(&format!("R:{}:{}", object_id, plane.representative));
            interactions.push(Interaction {
                kind: InteractionKind::Reflection,
                object_id,
                triangle_index: containing_triangle(ctx, mesh_idx, group, points[i + 1])
                    .unwrap_or(plane.representative as usize),
                point: points[i + 1],
                theta_i_rad: theta_i,
                coefficient: r,
            });
        }
    }

    // Exact amplitude: spreading, interaction product, propagation phase.
    let spreading = ctx.lambda / (4.0 * std::f64::consts::PI * length);
    let phase = -2.0 * std::f64::consts::PI * length / ctx.lambda;
    let amplitude = coeff * spreading * Complex64::from_polar(1.0, phase);

    let received_dbm = input.budget_dbm + 10.0 * amplitude.norm_sqr().log10();
    if received_dbm < input.cfg.min_power_dbm {
        return None;
    }

    let first_dir = (points[1] - points[0]).normalize()?;
    let last_dir = (points[k + 1] - points[k]).normalize()?;
    let arrival = last_dir.neg();
    let delay_s = length / SPEED_OF_LIGHT;

    Some(PathRecord {
        tx_id: input.tx.id.clone(),
        rx_id: input.rx.id.clone(),
        length_m: length,
        delay_s,
        amplitude,
        phase_rad: amplitude.arg(),
        aoa_azimuth_deg: azimuth_deg(arrival),
        aoa_zenith_deg: arrival.z().clamp(-1.0, 1.0).acos().to_degrees(),
        aod_azimuth_deg: azimuth_deg(first_dir),
        aod_zenith_deg: first_dir.z().clamp(-1.0, 1.0).acos().to_degrees(),
        is_los: interactions.is_empty(),
        interactions,
        signature,
    })
}

/// Azimuth in (-180, 180], x-axis = 0 degrees; negative-zero inputs fold to
/// the positive branch at the 180 seam.
fn azimuth_deg(v: UnitVec3) -> f64 {
    let az = v.y().atan2(v.x()).to_degrees();
    if az <= -180.0 {
        az + 360.0
    } else {
        az
    }
}

fn point_on_group(ctx: &TraceContext, mesh_idx: usize, group: u32, p: Point3) -> bool {
    containing_triangle(ctx, mesh_idx, group, p).is_some()
}

/// Lowest-index triangle of the coplanar group containing `p`.
fn containing_triangle(ctx: &TraceContext, mesh_idx: usize, group: u32, p: Point3) -> Option<usize> {
    let mesh = &ctx.scene.meshes[mesh_idx];
    let phys = &ctx.meshes[mesh_idx];
    (0..mesh.triangles.len())
        .filter(|&ti| phys.group_of_triangle[ti] == group)
        .find(|&ti| mesh.triangle(ti).contains_on_plane(p, 1e-9))
}

// ---------------------------------------------------------------------------
// Top-level trace
// ---------------------------------------------------------------------------

/// True when the open segment between `a` and `b` hits no geometry.
pub fn los_check(scene: &Scene, bvh: &Bvh, a: Point3, b: Point3) -> bool {
    bvh.segment_clear(scene, a, b, DEFAULT_T_MIN)
}

/// Extracts the multipath set between one transmitter and one receiver.
pub fn trace_paths(
    scene: &Scene,
    bvh: &Bvh,
    catalog: &MaterialCatalog,
    tx: &Transmitter,
    rx: &Receiver,
    cfg: &TraceConfig,
) -> Result<PathSet, TraceError> {
    cfg.validate()?;
    if tx.position.distance(rx.position) < 1e-12 {
        return Err(TraceError::CoincidentAntennas {
            tx: tx.id.clone(),
            rx: rx.id.clone(),
        });
    }
    let ctx = TraceContext::new(scene, bvh, catalog, cfg)?;
    let budget_dbm = tx.power_dbm + tx.gain_dbi + rx.gain_dbi;
    let alpha_sep = (4.0 * std::f64::consts::PI / cfg.num_rays as f64).sqrt();
    // Walk-time prune: a candidate with running magnitude `m` at unfolded
    // length `L` can at best deliver `budget + 20 log10(lambda m / 4 pi L)`.
    let prune_slope = 10f64.powf((cfg.min_power_dbm - budget_dbm) / 20.0)
        * (4.0 * std::f64::consts::PI)
        / ctx.lambda;

    // The direct route is resolved by intersection, never by sampling.
    let mut candidates: BTreeSet<CandidateKey> = BTreeSet::new();
    candidates.insert(Vec::new());

    let dirs = launch_directions(cfg.num_rays, cfg.seed);
    const CHUNK: usize = 4096;
    let chunk_sets: Vec<BTreeSet<CandidateKey>> = dirs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut local = BTreeSet::new();
            for &dir in chunk {
                walk_ray(
                    &ctx,
                    rx.position,
                    dir,
                    cfg,
                    alpha_sep,
                    prune_slope,
                    tx.position,
                    &mut local,
                );
            }
            local
        })
        .collect();
    for set in chunk_sets {
        candidates.extend(set);
    }

    let input = CorrectionInput {
        ctx: &ctx,
        cfg,
        tx,
        rx,
        budget_dbm,
    };
    let keys: Vec<&CandidateKey> = candidates.iter().collect();
    let mut paths: Vec<PathRecord> = keys
        .par_iter()
        .filter_map(|key| correct_candidate(&input, key))
        .collect();

    paths.sort_by(|a, b| {
        b.power_linear()
            .partial_cmp(&a.power_linear())
            .unwrap()
            .then_with(|| a.signature.cmp(&b.signature))
    });
    paths.truncate(cfg.max_paths);

    Ok(PathSet {
        tx_id: tx.id.clone(),
        rx_id: rx.id.clone(),
        tx_power_dbm: tx.power_dbm,
        tx_gain_dbi: tx.gain_dbi,
        rx_gain_dbi: rx.gain_dbi,
        frequency_hz: scene.frequency_hz,
        config: cfg.clone(),
        paths,
    })
}

// ---------------------------------------------------------------------------
// Dumps
// ---------------------------------------------------------------------------

/// CSV dump, one row per path in canonical order.
pub fn path_set_csv(ps: &PathSet) -> String {
    use crate::report::sig6;
    let mut out = String::from(
        "tx_id,rx_id,length_m,delay_ns,power_dbm,phase_deg,aoa_az_deg,aoa_zen_deg,aod_az_deg,aod_zen_deg,n_interactions,signature\n",
    );
    for p in &ps.paths {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            p.tx_id,
            p.rx_id,
            sig6(p.length_m),
            sig6(p.delay_s * 1e9),
            sig6(ps.received_power_dbm(p)),
            sig6(p.phase_rad.to_degrees()),
            sig6(p.aoa_azimuth_deg),
            sig6(p.aoa_zenith_deg),
            sig6(p.aod_azimuth_deg),
            sig6(p.aod_zenith_deg),
            p.interactions.len(),
            p.signature,
        ));
    }
    out
}

/// JSON dump embedding full interaction lists.
pub fn path_set_json(ps: &PathSet) -> String {
    serde_json::to_string_pretty(ps).expect("path set serializes")
}
