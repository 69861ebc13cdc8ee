//! Independent oracles shared by the integration suites.
//!
//! Everything here re-derives expected values through a route separate from
//! the library code it checks: linear scans instead of trees, image-source
//! enumeration instead of ray sampling, direct formula evaluation instead of
//! the metric pipeline, and quadrature instead of the incomplete beta
//! function.

use rfray_core::geom::{Point3, Triangle, UnitVec3};
use rfray_core::scene::{Scene, TriangleMesh};
use rfray_core::tracer::PathSet;

// ---------------------------------------------------------------------------
// Deterministic random numbers
// ---------------------------------------------------------------------------

pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn unit_vec(&mut self) -> UnitVec3 {
        loop {
            let v = rfray_core::Vec3::new(
                self.range(-1.0, 1.0),
                self.range(-1.0, 1.0),
                self.range(-1.0, 1.0),
            );
            if v.norm_squared() > 1e-4 && v.norm_squared() <= 1.0 {
                return v.normalize().unwrap();
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Brute-force nearest-hit oracle
// ---------------------------------------------------------------------------

/// Linear scan over every triangle with the same tie-break contract as the
/// accelerated query: nearest distance, ties within 1e-9 m resolved by the
/// lowest (object_id, triangle_index).
pub fn brute_force_intersect(
    scene: &Scene,
    origin: Point3,
    dir: UnitVec3,
    t_min: f64,
) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (mi, mesh) in scene.meshes.iter().enumerate() {
        for ti in 0..mesh.triangles.len() {
            let tri = mesh.triangle(ti);
            if let Some((t, _, _)) = tri.intersect(origin, dir.as_vec(), t_min) {
                best = match best {
                    None => Some((mi, ti, t)),
                    Some((bm, bt, bd)) => {
                        if t < bd - 1e-9 {
                            Some((mi, ti, t))
                        } else if t <= bd + 1e-9 {
                            let cand = (&scene.meshes[mi].object_id, ti as u32);
                            let cur = (&scene.meshes[bm].object_id, bt as u32);
                            if cand < cur {
                                Some((mi, ti, t.min(bd)))
                            } else {
                                Some((bm, bt, bd))
                            }
                        } else {
                            Some((bm, bt, bd))
                        }
                    }
                };
            }
        }
    }
    best
}

/// Random triangle soup for the equivalence tests.
pub fn random_triangle_scene(n: usize, seed: u64, extent: f64) -> Scene {
    let mut rng = SplitMix(seed);
    let mut vertices = Vec::with_capacity(3 * n);
    let mut triangles = Vec::with_capacity(n);
    while triangles.len() < n {
        let a = Point3::new(
            rng.range(0.0, extent),
            rng.range(0.0, extent),
            rng.range(0.0, extent),
        );
        let b = a + rfray_core::Vec3::new(
            rng.range(-1.0, 1.0),
            rng.range(-1.0, 1.0),
            rng.range(-1.0, 1.0),
        );
        let c = a + rfray_core::Vec3::new(
            rng.range(-1.0, 1.0),
            rng.range(-1.0, 1.0),
            rng.range(-1.0, 1.0),
        );
        if (Triangle { a, b, c }).area() < 1e-6 {
            continue;
        }
        let base = vertices.len();
        vertices.extend_from_slice(&[a, b, c]);
        triangles.push([base, base + 1, base + 2]);
    }
    Scene {
        meshes: vec![TriangleMesh {
            object_id: "soup".into(),
            material_name: "concrete".into(),
            thickness_m: 0.1,
            vertices,
            triangles,
        }],
        transmitters: vec![],
        receivers: vec![],
        frequency_hz: 2.437e9,
    }
}

// ---------------------------------------------------------------------------
// Shoebox image-source oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ImagePath {
    pub length_m: f64,
    pub order: usize,
}

/// Mirror images along one axis with walls at 0 and `l`: `(coordinate,
/// reflection count)` pairs up to `max_order` reflections on this axis.
fn axis_images(s: f64, l: f64, max_order: usize) -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    let span = max_order as i64 / 2 + 2;
    for n in -span..=span {
        // even family: s + 2nL needs 2|n| reflections
        let count = 2 * n.unsigned_abs() as usize;
        if count <= max_order {
            out.push((s + 2.0 * n as f64 * l, count));
        }
        // odd family: -s + 2nL needs 2n-1 (n >= 1) or 2|n|+1 (n <= 0)
        let count = if n >= 1 {
            (2 * n - 1) as usize
        } else {
            (2 * n.unsigned_abs() + 1) as usize
        };
        if count <= max_order {
            out.push((-s + 2.0 * n as f64 * l, count));
        }
    }
    out
}

/// Every specular path of total order `<= max_order` in an empty rectangular
/// room `[0,lx] x [0,ly] x [0,lz]`. In a closed shoebox every image is a
/// valid path, so enumeration is exhaustive.
pub fn shoebox_image_paths(
    (lx, ly, lz): (f64, f64, f64),
    tx: Point3,
    rx: Point3,
    max_order: usize,
) -> Vec<ImagePath> {
    let xs = axis_images(tx.x, lx, max_order);
    let ys = axis_images(tx.y, ly, max_order);
    let zs = axis_images(tx.z, lz, max_order);
    let mut out = Vec::new();
    for &(x, cx) in &xs {
        for &(y, cy) in &ys {
            if cx + cy > max_order {
                continue;
            }
            for &(z, cz) in &zs {
                let order = cx + cy + cz;
                if order > max_order {
                    continue;
                }
                let img = Point3::new(x, y, z);
                out.push(ImagePath {
                    length_m: img.distance(rx),
                    order,
                });
            }
        }
    }
    out.sort_by(|a, b| a.length_m.partial_cmp(&b.length_m).unwrap());
    out
}

/// Closed PEC shoebox scene with interior dimensions `lx x ly x lz`.
pub fn pec_box_scene(lx: f64, ly: f64, lz: f64) -> Scene {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut quad = |v: &mut Vec<Point3>, t: &mut Vec<[usize; 3]>, a, b, c, d| {
        let base = v.len();
        v.extend_from_slice(&[a, b, c, d]);
        t.push([base, base + 1, base + 2]);
        t.push([base, base + 2, base + 3]);
    };
    let p = Point3::new;
    quad(&mut vertices, &mut triangles, p(0., 0., 0.), p(lx, 0., 0.), p(lx, ly, 0.), p(0., ly, 0.));
    quad(&mut vertices, &mut triangles, p(0., 0., lz), p(lx, 0., lz), p(lx, ly, lz), p(0., ly, lz));
    quad(&mut vertices, &mut triangles, p(0., 0., 0.), p(lx, 0., 0.), p(lx, 0., lz), p(0., 0., lz));
    quad(&mut vertices, &mut triangles, p(0., ly, 0.), p(lx, ly, 0.), p(lx, ly, lz), p(0., ly, lz));
    quad(&mut vertices, &mut triangles, p(0., 0., 0.), p(0., ly, 0.), p(0., ly, lz), p(0., 0., lz));
    quad(&mut vertices, &mut triangles, p(lx, 0., 0.), p(lx, ly, 0.), p(lx, ly, lz), p(lx, 0., lz));
    Scene {
        meshes: vec![TriangleMesh {
            object_id: "box".into(),
            material_name: "metal".into(),
            thickness_m: 0.1,
            vertices,
            triangles,
        }],
        transmitters: vec![],
        receivers: vec![],
        frequency_hz: 2.437e9,
    }
}

// ---------------------------------------------------------------------------
// Direct metric evaluation (independent of the channel module)
// ---------------------------------------------------------------------------

pub struct DirectMetrics {
    pub path_gain_db: f64,
    pub mean_delay_s: f64,
    pub rms_delay_s: f64,
    pub asa_deg: f64,
    pub zsa_deg: f64,
    pub k_factor_db: f64,
}

/// Evaluates the metric formulas straight from per-path arrays.
pub fn direct_metrics(ps: &PathSet) -> DirectMetrics {
    let powers: Vec<f64> = ps.paths.iter().map(|p| p.amplitude.norm_sqr()).collect();
    let delays: Vec<f64> = ps.paths.iter().map(|p| p.delay_s).collect();
    let azimuths: Vec<f64> = ps.paths.iter().map(|p| p.aoa_azimuth_deg).collect();
    let zeniths: Vec<f64> = ps.paths.iter().map(|p| p.aoa_zenith_deg).collect();
    let total: f64 = powers.iter().sum();

    let mean_delay = powers
        .iter()
        .zip(&delays)
        .map(|(p, d)| p * d)
        .sum::<f64>()
        / total;
    let rms_delay = (powers
        .iter()
        .zip(&delays)
        .map(|(p, d)| p * (d - mean_delay) * (d - mean_delay))
        .sum::<f64>()
        / total)
        .sqrt();

    // strongest path (first index wins ties)
    let mut k_best = 0;
    for (i, p) in powers.iter().enumerate() {
        if *p > powers[k_best] {
            k_best = i;
        }
    }
    let wrap = |x: f64| {
        let mut v = x % 360.0;
        if v <= -180.0 {
            v += 360.0;
        } else if v > 180.0 {
            v -= 360.0;
        }
        v
    };
    let ref_az = azimuths[k_best];
    let wrapped: Vec<f64> = azimuths.iter().map(|&a| ref_az + wrap(a - ref_az)).collect();
    let mean_az = powers
        .iter()
        .zip(&wrapped)
        .map(|(p, a)| p * a)
        .sum::<f64>()
        / total;
    let asa = (powers
        .iter()
        .zip(&wrapped)
        .map(|(p, a)| p * (a - mean_az) * (a - mean_az))
        .sum::<f64>()
        / total)
        .sqrt();
    let mean_zen = powers
        .iter()
        .zip(&zeniths)
        .map(|(p, z)| p * z)
        .sum::<f64>()
        / total;
    let zsa = (powers
        .iter()
        .zip(&zeniths)
        .map(|(p, z)| p * (z - mean_zen) * (z - mean_zen))
        .sum::<f64>()
        / total)
        .sqrt();

    let rest = total - powers[k_best];
    let k_factor_db = if rest <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (powers[k_best] / rest).log10()
    };

    DirectMetrics {
        path_gain_db: 10.0 * total.log10(),
        mean_delay_s: mean_delay,
        rms_delay_s: rms_delay,
        asa_deg: asa,
        zsa_deg: zsa,
        k_factor_db,
    }
}

// ---------------------------------------------------------------------------
// Student-t CDF by quadrature
// ---------------------------------------------------------------------------

/// Ratio Gamma((v+1)/2) / Gamma(v/2) for integer dof via the half-integer
/// recurrence (no gamma-function code shared with the implementation).
fn gamma_ratio(dof: usize) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut r = if dof % 2 == 1 {
        1.0 / sqrt_pi // R(1) = Gamma(1)/Gamma(1/2)
    } else {
        sqrt_pi / 2.0 // R(2) = Gamma(3/2)/Gamma(1)
    };
    let mut v = if dof % 2 == 1 { 1 } else { 2 };
    while v < dof {
        r *= (v + 1) as f64 / v as f64;
        v += 2;
    }
    r
}

/// CDF of Student's t by Simpson quadrature of the density.
pub fn t_cdf_numeric(t: f64, dof: usize) -> f64 {
    if t < 0.0 {
        return 1.0 - t_cdf_numeric(-t, dof);
    }
    let v = dof as f64;
    let norm = gamma_ratio(dof) / (v * std::f64::consts::PI).sqrt();
    let pdf = |x: f64| norm * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0);
    // Simpson over [0, t]
    let n = 4000; // even
    let h = t / n as f64;
    let mut acc = pdf(0.0) + pdf(t);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * pdf(i as f64 * h);
    }
    0.5 + acc * h / 3.0
}
