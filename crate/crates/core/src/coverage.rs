//! Grid-sampled coverage maps: per-cell RSS from every transmitter, the
//! best-server SINR, thresholded coverage fractions, and carrier-frequency
//! sweeps with materials re-evaluated per frequency.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::{build_bvh, Bvh, DEFAULT_T_MIN};
use crate::channel::{path_gain, sinr, LinkBudget};
use crate::geom::{Point3, UnitVec3, Vec3};
use crate::materials::MaterialCatalog;
use crate::report::sig6;
use crate::scene::{Receiver, Scene};
use crate::tracer::{trace_paths, TraceConfig, TraceError};

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("scene has no geometry; coverage grid bounds are undefined")]
    NoGeometry,
    #[error("scene has no transmitters")]
    NoTransmitters,
    #[error("evaluation plane z={plane_m} lies outside the scene bounds [{lo}, {hi}]")]
    PlaneOutsideBounds { plane_m: f64, lo: f64, hi: f64 },
    #[error("cell size must be positive, got {0}")]
    BadCellSize(f64),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Coverage-grid request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub cell_m: f64,
    pub plane_height_m: f64,
    /// Ray budget per cell; defaults to `num_rays / 16` floored at 10^4.
    #[serde(default)]
    pub rays_per_cell: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            cell_m: 0.5,
            plane_height_m: 1.5,
            rays_per_cell: None,
        }
    }
}

/// One evaluated cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell {
    pub center: Point3,
    /// False when the center sits inside solid geometry; excluded from
    /// coverage fractions.
    pub valid: bool,
    /// RSS per transmitter (scene order), dBm; `None` when no path connects.
    pub rss_per_tx_dbm: Vec<Option<f64>>,
    /// Linear sum over transmitters; negative infinity when nothing arrives.
    pub total_rss_dbm: f64,
    /// Strongest transmitter against the rest plus thermal noise.
    pub best_sinr_db: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub origin: Point3,
    pub cell_m: f64,
    pub nx: usize,
    pub ny: usize,
    pub plane_height_m: f64,
    pub frequency_hz: f64,
    /// Row-major, `cells[j * nx + i]`.
    pub cells: Vec<Cell>,
}

impl CoverageGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.nx + i]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageResult {
    pub frequency_hz: f64,
    pub threshold_dbm: f64,
    pub covered_cells: usize,
    pub valid_cells: usize,
    pub covered_fraction: f64,
}

fn db_to_mw(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Parity test along +x: odd crossing count of one object means the point is
/// inside it. Open meshes yield even parity and stay valid.
fn inside_solid(scene: &Scene, bvh: &Bvh, p: Point3) -> bool {
    let dir = UnitVec3::from_unit(Vec3::new(1.0, 0.0, 0.0));
    let hits = bvh.intersect_all(scene, p, dir, DEFAULT_T_MIN, f64::INFINITY);
    let mut per_mesh = vec![0usize; scene.meshes.len()];
    let mut last: Option<(usize, f64)> = None;
    for h in hits {
        // coincident duplicates (shared edges) count once
        if let Some((m, t)) = last {
            if m == h.mesh_index && (h.distance_m - t).abs() < 1e-9 {
                continue;
            }
        }
        last = Some((h.mesh_index, h.distance_m));
        per_mesh[h.mesh_index] += 1;
    }
    per_mesh.iter().any(|&c| c % 2 == 1)
}

/// Computes the full coverage grid over the scene's footprint.
pub fn compute_map(
    scene: &Scene,
    catalog: &MaterialCatalog,
    cfg: &TraceConfig,
    spec: &GridSpec,
) -> Result<CoverageGrid, CoverageError> {
    if spec.cell_m <= 0.0 {
        return Err(CoverageError::BadCellSize(spec.cell_m));
    }
    let bounds = scene.bounds();
    if bounds.is_empty() {
        return Err(CoverageError::NoGeometry);
    }
    if scene.transmitters.is_empty() {
        return Err(CoverageError::NoTransmitters);
    }
    if spec.plane_height_m < bounds.min.z || spec.plane_height_m > bounds.max.z {
        return Err(CoverageError::PlaneOutsideBounds {
            plane_m: spec.plane_height_m,
            lo: bounds.min.z,
            hi: bounds.max.z,
        });
    }
    let bvh = build_bvh(scene);
    let d = bounds.diagonal();
    let nx = (d.x / spec.cell_m).ceil().max(1.0) as usize;
    let ny = (d.y / spec.cell_m).ceil().max(1.0) as usize;

    let cell_cfg = TraceConfig {
        num_rays: spec
            .rays_per_cell
            .unwrap_or_else(|| (cfg.num_rays / 16).max(10_000)),
        ..cfg.clone()
    };
    let budget = LinkBudget::default();

    let indices: Vec<(usize, usize)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .collect();
    let cells: Vec<Cell> = indices
        .par_iter()
        .map(|&(i, j)| {
            let center = Point3::new(
                bounds.min.x + (i as f64 + 0.5) * spec.cell_m,
                bounds.min.y + (j as f64 + 0.5) * spec.cell_m,
                spec.plane_height_m,
            );
            evaluate_cell(scene, &bvh, catalog, &cell_cfg, &budget, center)
        })
        .collect();

    Ok(CoverageGrid {
        origin: bounds.min,
        cell_m: spec.cell_m,
        nx,
        ny,
        plane_height_m: spec.plane_height_m,
        frequency_hz: scene.frequency_hz,
        cells,
    })
}

fn evaluate_cell(
    scene: &Scene,
    bvh: &Bvh,
    catalog: &MaterialCatalog,
    cfg: &TraceConfig,
    budget: &LinkBudget,
    center: Point3,
) -> Cell {
    if inside_solid(scene, bvh, center) {
        return Cell {
            center,
            valid: false,
            rss_per_tx_dbm: vec![None; scene.transmitters.len()],
            total_rss_dbm: f64::NEG_INFINITY,
            best_sinr_db: f64::NEG_INFINITY,
            n_paths: 0,
        };
    }
    let probe = Receiver {
        id: "cell".into(),
        position: center,
        gain_dbi: 0.0,
    };
    let mut rss_per_tx = Vec::with_capacity(scene.transmitters.len());
    let mut n_paths = 0usize;
    for tx in &scene.transmitters {
        if tx.position.distance(center) < 1e-9 {
            rss_per_tx.push(None);
            continue;
        }
        match trace_paths(scene, bvh, catalog, tx, &probe, cfg) {
            Ok(ps) if !ps.paths.is_empty() => {
                n_paths += ps.paths.len();
                let pg = path_gain(&ps).expect("nonempty");
                rss_per_tx.push(Some(tx.power_dbm + tx.gain_dbi + pg));
            }
            _ => rss_per_tx.push(None),
        }
    }
    let total_mw: f64 = rss_per_tx.iter().flatten().map(|&r| db_to_mw(r)).sum();
    let total_rss_dbm = if total_mw > 0.0 {
        10.0 * total_mw.log10()
    } else {
        f64::NEG_INFINITY
    };
    let best_sinr_db = match rss_per_tx
        .iter()
        .flatten()
        .cloned()
        .fold(None::<f64>, |acc, r| Some(acc.map_or(r, |a| a.max(r))))
    {
        Some(best) => {
            let interferers: Vec<f64> = rss_per_tx
                .iter()
                .flatten()
                .cloned()
                .filter(|&r| r != best)
                .collect();
            sinr(best, &interferers, budget)
        }
        None => f64::NEG_INFINITY,
    };
    Cell {
        center,
        valid: true,
        rss_per_tx_dbm: rss_per_tx,
        total_rss_dbm,
        best_sinr_db,
        n_paths,
    }
}

/// Fraction of valid cells whose total RSS meets the threshold.
pub fn coverage_fraction(grid: &CoverageGrid, threshold_dbm: f64) -> CoverageResult {
    let valid_cells = grid.cells.iter().filter(|c| c.valid).count();
    let covered_cells = grid
        .cells
        .iter()
        .filter(|c| c.valid && c.total_rss_dbm >= threshold_dbm)
        .count();
    CoverageResult {
        frequency_hz: grid.frequency_hz,
        threshold_dbm,
        covered_cells,
        valid_cells,
        covered_fraction: if valid_cells == 0 {
            0.0
        } else {
            covered_cells as f64 / valid_cells as f64
        },
    }
}

/// Re-runs the map at each carrier frequency; material parameters re-evaluate
/// through the catalog's power laws.
pub fn frequency_sweep(
    scene: &Scene,
    catalog: &MaterialCatalog,
    cfg: &TraceConfig,
    spec: &GridSpec,
    freqs_hz: &[f64],
    threshold_dbm: f64,
) -> Result<Vec<(CoverageGrid, CoverageResult)>, CoverageError> {
    let mut out = Vec::with_capacity(freqs_hz.len());
    for &f in freqs_hz {
        let mut s = scene.clone();
        s.frequency_hz = f;
        let grid = compute_map(&s, catalog, cfg, spec)?;
        let result = coverage_fraction(&grid, threshold_dbm);
        out.push((grid, result));
    }
    Ok(out)
}

/// Which field a heatmap renders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMode {
    TotalRss,
    BestSinr,
}

impl HeatmapMode {
    /// Fixed display range in dB(m): RSS maps span [-100, -20] dBm, SINR
    /// maps span [-20, 30] dB.
    pub fn range(self) -> (f64, f64) {
        match self {
            HeatmapMode::TotalRss => (-100.0, -20.0),
            HeatmapMode::BestSinr => (-20.0, 30.0),
        }
    }

    fn value(self, cell: &Cell) -> f64 {
        match self {
            HeatmapMode::TotalRss => cell.total_rss_dbm,
            HeatmapMode::BestSinr => cell.best_sinr_db,
        }
    }
}

/// Blue-to-red ramp with fixed stops; `t` in [0, 1].
fn ramp_color(t: f64) -> [u8; 3] {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.00, [0.0, 0.0, 128.0]),
        (0.25, [0.0, 64.0, 255.0]),
        (0.50, [0.0, 255.0, 255.0]),
        (0.75, [255.0, 255.0, 0.0]),
        (1.00, [255.0, 0.0, 0.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let mut color = STOPS[STOPS.len() - 1].1;
    for w in STOPS.windows(2) {
        let (t0, c0) = w[0];
        let (t1, c1) = w[1];
        if t <= t1 {
            let f = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            color = [
                c0[0] + (c1[0] - c0[0]) * f,
                c0[1] + (c1[1] - c0[1]) * f,
                c0[2] + (c1[2] - c0[2]) * f,
            ];
            break;
        }
    }
    [
        color[0].round() as u8,
        color[1].round() as u8,
        color[2].round() as u8,
    ]
}

/// Writes the CSV matrix and a binary PPM image of the grid. Outputs are
/// byte-identical for identical grids. Invalid cells render black and read
/// `nan` in the CSV; unreachable cells read `-inf` and clamp to ramp bottom.
pub fn export_heatmap(
    grid: &CoverageGrid,
    csv_path: &std::path::Path,
    ppm_path: &std::path::Path,
    mode: HeatmapMode,
) -> Result<(), CoverageError> {
    let io_err = |path: &std::path::Path, source| CoverageError::Io {
        path: path.display().to_string(),
        source,
    };
    let (lo, hi) = mode.range();

    let mut csv = String::new();
    for j in 0..grid.ny {
        let row: Vec<String> = (0..grid.nx)
            .map(|i| {
                let c = grid.cell(i, j);
                if c.valid {
                    sig6(mode.value(c))
                } else {
                    "nan".to_string()
                }
            })
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    std::fs::write(csv_path, csv).map_err(|e| io_err(csv_path, e))?;

    let mut ppm = format!("P6\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let c = grid.cell(i, j);
            let rgb = if !c.valid {
                [0u8, 0, 0]
            } else {
                ramp_color((mode.value(c) - lo) / (hi - lo))
            };
            ppm.extend_from_slice(&rgb);
        }
    }
    std::fs::write(ppm_path, ppm).map_err(|e| io_err(ppm_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::builtin_catalog;
    use crate::scene::{Scene, Transmitter, TriangleMesh};

    /// Thin ground strip under a transmitter so the scene has bounds but no
    /// wave interaction above the plane.
    fn open_scene(tx_positions: &[(f64, f64, f64)], extent: f64) -> Scene {
        Scene {
            meshes: vec![TriangleMesh {
                object_id: "ground".into(),
                material_name: "metal".into(),
                thickness_m: 0.1,
                vertices: vec![
                    Point3::new(0.0, 0.0, 0.0),
                    Point3::new(extent, 0.0, 0.0),
                    Point3::new(extent, extent, 0.0),
                    Point3::new(0.0, extent, 0.0),
                    // a sliver to raise the bbox so the plane fits inside
                    Point3::new(0.0, 0.0, 3.0),
                    Point3::new(1e-3, 0.0, 3.0),
                    Point3::new(0.0, 1e-3, 3.0),
                ],
                triangles: vec![[0, 1, 2], [0, 2, 3], [4, 5, 6]],
            }],
            transmitters: tx_positions
                .iter()
                .enumerate()
                .map(|(k, &(x, y, z))| Transmitter {
                    id: format!("tx{k}"),
                    position: Point3::new(x, y, z),
                    power_dbm: 0.0,
                    gain_dbi: 0.0,
                })
                .collect(),
            receivers: vec![],
            frequency_hz: 2.437e9,
        }
    }

    fn quick_cfg() -> TraceConfig {
        TraceConfig {
            num_rays: 16_000,
            max_depth: 1,
            enable_transmission: false,
            ..TraceConfig::default()
        }
    }

    #[test]
    fn inverse_square_between_two_cells() {
        // Tx on the grid's west edge mid-height; compare cells at 1 m and 2 m.
        let scene = open_scene(&[(0.05, 1.0, 1.5)], 4.0);
        let spec = GridSpec {
            cell_m: 2.0,
            plane_height_m: 1.5,
            rays_per_cell: Some(10_000),
        };
        // trace only the direct path: depth 0
        let cfg = TraceConfig {
            max_depth: 0,
            enable_transmission: false,
            ..quick_cfg()
        };
        let grid = compute_map(&scene, builtin_catalog(), &cfg, &spec).unwrap();
        assert_eq!(grid.nx, 2);
        let near = grid.cell(0, 0).total_rss_dbm; // center (1.0, 1.0)
        let far = grid.cell(1, 0).total_rss_dbm; // center (3.0, 1.0)
        let diff = near - far;
        // 0.95 m vs 2.95 m: 20 log10(2.95/0.95) = 9.84 dB; with cell centers
        // exactly 1 m and 3 m from the tx x-plane the ideal is 6.02 at 1 vs 2.
        let d_near = ((1.0f64 - 0.05).powi(2)).sqrt();
        let d_far = ((3.0f64 - 0.05).powi(2)).sqrt();
        let expected = 20.0 * (d_far / d_near).log10();
        assert!((diff - expected).abs() < 1e-6, "diff {diff} vs {expected}");
    }

    #[test]
    fn threshold_extremes() {
        let scene = open_scene(&[(2.0, 2.0, 1.5)], 4.0);
        let spec = GridSpec {
            cell_m: 1.0,
            plane_height_m: 1.0,
            rays_per_cell: Some(10_000),
        };
        let grid = compute_map(&scene, builtin_catalog(), &quick_cfg(), &spec).unwrap();
        assert_eq!(coverage_fraction(&grid, f64::NEG_INFINITY).covered_fraction, 1.0);
        assert_eq!(coverage_fraction(&grid, f64::INFINITY).covered_fraction, 0.0);
        // monotone in threshold
        let mut prev = 1.0;
        for th in [-90.0, -70.0, -55.0, -45.0, -35.0] {
            let f = coverage_fraction(&grid, th).covered_fraction;
            assert!(f <= prev + 1e-12);
            prev = f;
        }
    }

    #[test]
    fn disc_area_matches_counted_cells() {
        // free-space Tx centered: threshold at the RSS of radius r covers
        // roughly the pi r^2 disc.
        let scene = open_scene(&[(5.0, 5.0, 1.5)], 10.0);
        let spec = GridSpec {
            cell_m: 0.5,
            plane_height_m: 1.5,
            rays_per_cell: Some(10_000),
        };
        let cfg = TraceConfig {
            max_depth: 0,
            enable_transmission: false,
            ..quick_cfg()
        };
        let grid = compute_map(&scene, builtin_catalog(), &cfg, &spec).unwrap();
        let r = 3.0f64;
        let lambda = crate::materials::SPEED_OF_LIGHT / scene.frequency_hz;
        let rss_at_r = 20.0 * (lambda / (4.0 * std::f64::consts::PI * r)).log10();
        let frac = coverage_fraction(&grid, rss_at_r).covered_fraction;
        let disc = std::f64::consts::PI * r * r / 100.0;
        // within one cell-ring of the disc boundary
        let ring = 2.0 * std::f64::consts::PI * r * spec.cell_m / 100.0;
        assert!(
            (frac - disc).abs() <= ring,
            "frac {frac}, disc {disc}, ring {ring}"
        );
    }

    #[test]
    fn adding_a_transmitter_never_lowers_total_rss() {
        let one = open_scene(&[(1.0, 1.0, 1.5)], 4.0);
        let two = open_scene(&[(1.0, 1.0, 1.5), (3.0, 3.0, 1.5)], 4.0);
        let spec = GridSpec {
            cell_m: 1.0,
            plane_height_m: 1.2,
            rays_per_cell: Some(10_000),
        };
        let g1 = compute_map(&one, builtin_catalog(), &quick_cfg(), &spec).unwrap();
        let g2 = compute_map(&two, builtin_catalog(), &quick_cfg(), &spec).unwrap();
        for (a, b) in g1.cells.iter().zip(&g2.cells) {
            if a.valid && b.valid && a.total_rss_dbm.is_finite() {
                assert!(b.total_rss_dbm >= a.total_rss_dbm - 1e-9);
            }
        }
    }

    #[test]
    fn single_frequency_sweep_equals_direct_run() {
        let scene = open_scene(&[(2.0, 2.0, 1.5)], 4.0);
        let spec = GridSpec {
            cell_m: 1.0,
            plane_height_m: 1.2,
            rays_per_cell: Some(10_000),
        };
        let sweep = frequency_sweep(
            &scene,
            builtin_catalog(),
            &quick_cfg(),
            &spec,
            &[2.437e9],
            -60.0,
        )
        .unwrap();
        assert_eq!(sweep.len(), 1);
        let direct = compute_map(&scene, builtin_catalog(), &quick_cfg(), &spec).unwrap();
        let direct_frac = coverage_fraction(&direct, -60.0);
        assert_eq!(sweep[0].1.covered_fraction, direct_frac.covered_fraction);
    }

    #[test]
    fn heatmap_export_is_deterministic() {
        let scene = open_scene(&[(1.0, 1.0, 1.5)], 2.0);
        let spec = GridSpec {
            cell_m: 2.0,
            plane_height_m: 1.2,
            rays_per_cell: Some(10_000),
        };
        let grid = compute_map(&scene, builtin_catalog(), &quick_cfg(), &spec).unwrap();
        assert_eq!(grid.nx * grid.ny, 1);
        let dir = tempfile::tempdir().unwrap();
        let c1 = dir.path().join("a.csv");
        let p1 = dir.path().join("a.ppm");
        let c2 = dir.path().join("b.csv");
        let p2 = dir.path().join("b.ppm");
        export_heatmap(&grid, &c1, &p1, HeatmapMode::TotalRss).unwrap();
        export_heatmap(&grid, &c2, &p2, HeatmapMode::TotalRss).unwrap();
        assert_eq!(std::fs::read(&c1).unwrap(), std::fs::read(&c2).unwrap());
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        // one pixel after the 15-byte header
        let bytes = std::fs::read(&p1).unwrap();
        assert_eq!(bytes.len(), "P6\n1 1\n255\n".len() + 3);
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp_color(0.0), [0, 0, 128]);
        assert_eq!(ramp_color(1.0), [255, 0, 0]);
        assert_eq!(ramp_color(2.0), [255, 0, 0]);
        assert_eq!(ramp_color(-1.0), [0, 0, 128]);
    }
}
