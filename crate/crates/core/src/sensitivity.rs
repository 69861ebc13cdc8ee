//! Parameter-sweep harness: ray budget x reflection depth x material
//! perturbation, with errors reported against the highest-complexity cell as
//! the internal ground truth.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::Bvh;
use crate::channel::{delay_stats, path_gain};
use crate::materials::{MaterialCatalog, RadioMaterial};
use crate::scene::Scene;
use crate::tracer::{trace_paths, TraceConfig, TraceError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep spec must list at least one depth, ray budget, and material scale")]
    EmptySpec,
    #[error("material scale must be > 0, got {0}")]
    BadScale(f64),
    #[error("unknown transmitter {0:?}")]
    UnknownTransmitter(String),
    #[error("unknown receiver {0:?}")]
    UnknownReceiver(String),
    #[error("link {tx_id}->{rx_id} produced no paths at depth {depth}, {n_rays} rays")]
    NoPaths {
        tx_id: String,
        rx_id: String,
        depth: usize,
        n_rays: usize,
    },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Cartesian sweep request over one link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub depths: Vec<usize>,
    pub ray_budgets: Vec<usize>,
    pub material_scales: Vec<f64>,
    pub tx_id: String,
    pub rx_id: String,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.depths.is_empty() || self.ray_budgets.is_empty() || self.material_scales.is_empty()
        {
            return Err(SweepError::EmptySpec);
        }
        if let Some(&s) = self.material_scales.iter().find(|&&s| !(s > 0.0)) {
            return Err(SweepError::BadScale(s));
        }
        Ok(())
    }
}

/// One sweep cell with its metric values and errors against the baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub depth: usize,
    pub n_rays: usize,
    pub material_scale: f64,
    pub runtime_s: f64,
    pub mean_delay_ns: f64,
    pub rms_delay_ns: f64,
    pub path_loss_db: f64,
    pub mean_delay_ae_ns: f64,
    pub mean_delay_ne_pct: f64,
    pub rms_delay_ae_ns: f64,
    pub rms_delay_ne_pct: f64,
    pub path_loss_ae_db: f64,
    pub path_loss_ne_pct: f64,
}

/// Scales permittivity and conductivity of every material; the evaluated
/// permittivity floors at 1 so strong downscales stay physical. The input
/// catalog is untouched.
pub fn material_perturb(catalog: &MaterialCatalog, scale: f64) -> MaterialCatalog {
    let materials: Vec<RadioMaterial> = catalog
        .materials()
        .map(|m| RadioMaterial {
            name: m.name.clone(),
            perm_a: m.perm_a * scale,
            perm_b: m.perm_b,
            cond_c: m.cond_c * scale,
            cond_d: m.cond_d,
            valid_ghz: m.valid_ghz,
        })
        .collect();
    // Bypass the >=1 permittivity validation: perturbed values floor at
    // evaluation time instead.
    MaterialCatalog::from_materials_unchecked(
        format!("{}(x{})", catalog.version, scale),
        materials,
    )
}

struct CellMetrics {
    mean_delay_ns: f64,
    rms_delay_ns: f64,
    path_loss_db: f64,
    runtime_s: f64,
}

fn run_cell(
    scene: &Scene,
    bvh: &Bvh,
    catalog: &MaterialCatalog,
    base: &TraceConfig,
    spec: &SweepSpec,
    depth: usize,
    n_rays: usize,
    scale: f64,
) -> Result<CellMetrics, SweepError> {
    let tx = scene
        .transmitter(&spec.tx_id)
        .ok_or_else(|| SweepError::UnknownTransmitter(spec.tx_id.clone()))?;
    let rx = scene
        .receiver(&spec.rx_id)
        .ok_or_else(|| SweepError::UnknownReceiver(spec.rx_id.clone()))?;
    let cfg = TraceConfig {
        num_rays: n_rays,
        max_depth: depth,
        ..base.clone()
    };
    let perturbed;
    let cat = if scale == 1.0 {
        catalog
    } else {
        perturbed = material_perturb(catalog, scale);
        &perturbed
    };
    let start = Instant::now();
    let ps = trace_paths(scene, bvh, cat, tx, rx, &cfg)?;
    let runtime_s = start.elapsed().as_secs_f64();
    if ps.paths.is_empty() {
        return Err(SweepError::NoPaths {
            tx_id: spec.tx_id.clone(),
            rx_id: spec.rx_id.clone(),
            depth,
            n_rays,
        });
    }
    let (mean_d, rms_d) = delay_stats(&ps).expect("nonempty");
    let pg = path_gain(&ps).expect("nonempty");
    Ok(CellMetrics {
        mean_delay_ns: mean_d * 1e9,
        rms_delay_ns: rms_d * 1e9,
        path_loss_db: -pg,
        runtime_s,
    })
}

fn norm_err_pct(abs_err: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        100.0 * abs_err / baseline.abs()
    }
}

/// Runs the full Cartesian sweep. The baseline cell is the highest depth and
/// ray budget at material scale 1.0; rows appear in spec order. Cells run
/// sequentially so per-row runtimes stay comparable.
pub fn run_sweep(
    scene: &Scene,
    bvh: &Bvh,
    catalog: &MaterialCatalog,
    base: &TraceConfig,
    spec: &SweepSpec,
) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let base_depth = *spec.depths.iter().max().unwrap();
    let base_rays = *spec.ray_budgets.iter().max().unwrap();
    let baseline = run_cell(scene, bvh, catalog, base, spec, base_depth, base_rays, 1.0)?;

    let mut rows = Vec::new();
    for &depth in &spec.depths {
        for &n_rays in &spec.ray_budgets {
            for &scale in &spec.material_scales {
                let cell = if depth == base_depth && n_rays == base_rays && scale == 1.0 {
                    CellMetrics {
                        mean_delay_ns: baseline.mean_delay_ns,
                        rms_delay_ns: baseline.rms_delay_ns,
                        path_loss_db: baseline.path_loss_db,
                        runtime_s: baseline.runtime_s,
                    }
                } else {
                    run_cell(scene, bvh, catalog, base, spec, depth, n_rays, scale)?
                };
                let mean_ae = (cell.mean_delay_ns - baseline.mean_delay_ns).abs();
                let rms_ae = (cell.rms_delay_ns - baseline.rms_delay_ns).abs();
                let pl_ae = (cell.path_loss_db - baseline.path_loss_db).abs();
                rows.push(SweepRow {
                    depth,
                    n_rays,
                    material_scale: scale,
                    runtime_s: cell.runtime_s,
                    mean_delay_ns: cell.mean_delay_ns,
                    rms_delay_ns: cell.rms_delay_ns,
                    path_loss_db: cell.path_loss_db,
                    mean_delay_ae_ns: mean_ae,
                    mean_delay_ne_pct: norm_err_pct(mean_ae, baseline.mean_delay_ns),
                    rms_delay_ae_ns: rms_ae,
                    rms_delay_ne_pct: norm_err_pct(rms_ae, baseline.rms_delay_ns),
                    path_loss_ae_db: pl_ae,
                    path_loss_ne_pct: norm_err_pct(pl_ae, baseline.path_loss_db),
                });
            }
        }
    }
    Ok(rows)
}

/// CSV dump with headers matching the sweep-table convention.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    use crate::report::sig6;
    let mut out = String::from(
        "depth,n_rays,material_scale,runtime_s,mean_delay_ns,rms_delay_ns,path_loss_db,\
         mean_delay_ae_ns,mean_delay_ne_pct,rms_delay_ae_ns,rms_delay_ne_pct,\
         path_loss_ae_db,path_loss_ne_pct\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.depth,
            r.n_rays,
            sig6(r.material_scale),
            sig6(r.runtime_s),
            sig6(r.mean_delay_ns),
            sig6(r.rms_delay_ns),
            sig6(r.path_loss_db),
            sig6(r.mean_delay_ae_ns),
            sig6(r.mean_delay_ne_pct),
            sig6(r.rms_delay_ae_ns),
            sig6(r.rms_delay_ne_pct),
            sig6(r.path_loss_ae_db),
            sig6(r.path_loss_ne_pct),
        ));
    }
    out
}
