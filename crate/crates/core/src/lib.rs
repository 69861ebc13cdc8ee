//! Deterministic indoor radio-frequency ray tracing.
//!
//! The crate loads material-tagged triangle-mesh scenes, extracts multipath
//! components between transmitters and receivers with a
//! shooting-and-bouncing-rays tracer, assembles channel impulse responses,
//! and derives the channel-metric, coverage, and statistical-comparison
//! suites on top. Everything is deterministic for a given configuration,
//! independent of worker count.

pub mod bvh;
pub mod channel;
pub mod coverage;
pub mod geom;
pub mod materials;
pub mod registration;
pub mod report;
pub mod scene;
pub mod sensitivity;
pub mod stats;
pub mod tracer;

pub use bvh::{build_bvh, Bvh, Hit};
pub use channel::{
    build_cir, channel_metrics, delay_stats, k_factor, path_gain, rss, sinr, ChannelMetrics, Cir,
    LinkBudget,
};
pub use coverage::{
    compute_map, coverage_fraction, export_heatmap, frequency_sweep, CoverageGrid, CoverageResult,
    GridSpec, HeatmapMode,
};
pub use geom::{Point3, UnitVec3, Vec3};
pub use materials::{
    builtin_catalog, eval_medium, fresnel, material_catalog, slab_transmission, snell,
    ComplexMedium, InteractionCoeffs, MaterialCatalog, PolarizationMode, RadioMaterial,
};
pub use registration::{
    cloud_distance_stats, icp, nearest_neighbor, IcpParams, KdTree, PointCloud,
    RegistrationReport, RigidTransform,
};
pub use scene::{load_scene, Receiver, Scene, Transmitter, TriangleMesh};
pub use sensitivity::{material_perturb, run_sweep, SweepRow, SweepSpec};
pub use stats::{
    abs_db_error, calibrate_rssi, paired_t_test, pearson_r, rel_error, CalibrationResult,
    ErrorSummary, PairedSample, Scale, TTestResult,
};
pub use tracer::{
    launch_directions, los_check, trace_paths, Interaction, InteractionKind, PathRecord, PathSet,
    TraceConfig,
};
