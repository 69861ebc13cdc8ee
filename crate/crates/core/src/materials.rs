//! Frequency-dependent electromagnetic material model and plane-wave
//! interaction coefficients.
//!
//! Materials follow the ITU power-law parameterization: relative permittivity
//! `eps_r(f) = a * f_GHz^b` and conductivity `sigma(f) = c * f_GHz^d` (S/m).
//! The built-in catalog ships as a data file so a perturbed or customized
//! catalog is a config change, not a code change.
//!
//! Time convention is `e^{+j w t}`; loss therefore appears as a negative
//! imaginary part of the complex permittivity, and evanescent/transmitted
//! waves decay with a negative imaginary normal wavenumber.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;
/// Free-space wave impedance, ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730_313_668;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("failed to read material file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse material file {path}: {message}")]
    Parse { path: String, message: String },
    #[error("material {name:?}: eps_r({f_ghz} GHz) = {value} < 1")]
    PermittivityBelowOne { name: String, f_ghz: f64, value: f64 },
    #[error("material {name:?}: sigma({f_ghz} GHz) = {value} < 0")]
    NegativeConductivity { name: String, f_ghz: f64, value: f64 },
    #[error("material {name:?}: empty validity range")]
    EmptyValidity { name: String },
}

/// Power-law material: `eps_r(f) = a f^b`, `sigma(f) = c f^d` with f in GHz.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadioMaterial {
    pub name: String,
    pub perm_a: f64,
    pub perm_b: f64,
    pub cond_c: f64,
    pub cond_d: f64,
    pub valid_ghz: (f64, f64),
}

impl RadioMaterial {
    /// Relative permittivity at `f_hz`, floored at 1 (vacuum) so perturbed
    /// catalogs remain physical.
    pub fn permittivity(&self, f_hz: f64) -> f64 {
        let f_ghz = f_hz / 1e9;
        (self.perm_a * f_ghz.powf(self.perm_b)).max(1.0)
    }

    /// Conductivity in S/m at `f_hz`.
    pub fn conductivity(&self, f_hz: f64) -> f64 {
        let f_ghz = f_hz / 1e9;
        self.cond_c * f_ghz.powf(self.cond_d)
    }

    pub fn in_validity(&self, f_hz: f64) -> bool {
        let f_ghz = f_hz / 1e9;
        f_ghz >= self.valid_ghz.0 && f_ghz <= self.valid_ghz.1
    }
}

/// A material evaluated at one frequency: complex relative permittivity and
/// the wave impedance entering the reflection formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMedium {
    /// `eps_r - j sigma / (w eps0)`; imaginary part <= 0 for passive media.
    pub eta_complex: Complex64,
    /// `eta0 / sqrt(eta_complex)`, ohms.
    pub impedance: Complex64,
}

impl ComplexMedium {
    pub fn vacuum() -> ComplexMedium {
        ComplexMedium {
            eta_complex: Complex64::new(1.0, 0.0),
            impedance: Complex64::new(FREE_SPACE_IMPEDANCE, 0.0),
        }
    }

    /// Complex refractive index `sqrt(eps)`, principal branch (Im <= 0 for
    /// passive media under the `e^{+jwt}` convention).
    pub fn refractive_index(&self) -> Complex64 {
        self.eta_complex.sqrt()
    }
}

/// Evaluates a material at carrier frequency `f_hz`.
///
/// Frequencies outside the material's validity window still evaluate (the
/// power law extrapolates); callers that care use [`RadioMaterial::in_validity`]
/// to warn.
pub fn eval_medium(m: &RadioMaterial, f_hz: f64) -> ComplexMedium {
    let omega = 2.0 * std::f64::consts::PI * f_hz;
    let eps = Complex64::new(
        m.permittivity(f_hz),
        -m.conductivity(f_hz) / (omega * VACUUM_PERMITTIVITY),
    );
    ComplexMedium {
        eta_complex: eps,
        impedance: Complex64::new(FREE_SPACE_IMPEDANCE, 0.0) / eps.sqrt(),
    }
}

/// Reflection and transmission amplitudes at a single interface, both
/// polarizations, plus the (complex) transmission angle.
#[derive(Debug, Clone, Copy)]
pub struct InteractionCoeffs {
    /// Perpendicular (TE) reflection.
    pub r_perp: Complex64,
    /// Parallel (TM) reflection.
    pub r_par: Complex64,
    /// Perpendicular (TE) transmission.
    pub t_perp: Complex64,
    /// Parallel (TM) transmission.
    pub t_par: Complex64,
    /// Transmission angle; complex beyond the critical angle.
    pub theta_t: Complex64,
}

/// How the two polarizations collapse into the scalar amplitude the tracer
/// carries. Isotropic antennas leave the choice open, so both conventions
/// are provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationMode {
    /// Perpendicular (TE) coefficient only.
    PerpOnly,
    /// Magnitude from the mean of the two power coefficients, phase from the
    /// perpendicular coefficient.
    Average,
}

impl Default for PolarizationMode {
    fn default() -> Self {
        PolarizationMode::Average
    }
}

fn collapse(mode: PolarizationMode, perp: Complex64, par: Complex64) -> Complex64 {
    match mode {
        PolarizationMode::PerpOnly => perp,
        PolarizationMode::Average => {
            let mag = (0.5 * (perp.norm_sqr() + par.norm_sqr())).sqrt();
            if perp.norm() < 1e-300 {
                Complex64::new(mag, 0.0)
            } else {
                perp / perp.norm() * mag
            }
        }
    }
}

/// Cosine of the transmission angle, branch chosen so the transmitted wave
/// decays into medium 2.
fn cos_theta_t(theta_i: f64, medium1: &ComplexMedium, medium2: &ComplexMedium) -> Complex64 {
    let n1 = medium1.refractive_index();
    let n2 = medium2.refractive_index();
    let sin_t = theta_i.sin() * n1 / n2;
    let mut cos_t = (Complex64::new(1.0, 0.0) - sin_t * sin_t).sqrt();
    // Transmitted field goes as e^{-j k2 cos(theta_t) z}: decay into medium 2
    // requires Im(n2 cos_t) <= 0.
    if (n2 * cos_t).im > 1e-30 {
        cos_t = -cos_t;
    }
    cos_t
}

/// Snell transmission angle for an interface from `medium1` into `medium2`.
///
/// `sin(theta_t) = sin(theta_i) sqrt(eps1/eps2)`; total internal reflection
/// shows up as a nonzero imaginary part rather than an error.
pub fn snell(theta_i: f64, medium1: &ComplexMedium, medium2: &ComplexMedium) -> Complex64 {
    cos_theta_t(theta_i, medium1, medium2).acos()
}

/// Fresnel coefficients at a planar interface, impedance form:
/// `r_perp = (eta2 cos(theta_i) - eta1 cos(theta_t)) / (eta2 cos(theta_i) + eta1 cos(theta_t))`.
pub fn fresnel(
    theta_i: f64,
    medium1: &ComplexMedium,
    medium2: &ComplexMedium,
) -> InteractionCoeffs {
    let eta1 = medium1.impedance;
    let eta2 = medium2.impedance;
    let cos_i = Complex64::new(theta_i.cos(), 0.0);
    let cos_t = cos_theta_t(theta_i, medium1, medium2);

    let r_perp = (eta2 * cos_i - eta1 * cos_t) / (eta2 * cos_i + eta1 * cos_t);
    let t_perp = 2.0 * eta2 * cos_i / (eta2 * cos_i + eta1 * cos_t);
    let r_par = (eta2 * cos_t - eta1 * cos_i) / (eta2 * cos_t + eta1 * cos_i);
    let t_par = 2.0 * eta2 * cos_i / (eta2 * cos_t + eta1 * cos_i);

    InteractionCoeffs {
        r_perp,
        r_par,
        t_perp,
        t_par,
        theta_t: cos_t.acos(),
    }
}

/// Scalar reflection coefficient under the configured polarization collapse.
pub fn reflection_coeff(
    theta_i: f64,
    medium1: &ComplexMedium,
    medium2: &ComplexMedium,
    mode: PolarizationMode,
) -> Complex64 {
    let c = fresnel(theta_i, medium1, medium2);
    collapse(mode, c.r_perp, c.r_par)
}

/// Single-pass two-interface slab transmission:
/// `T = t_in * exp(-j k_z d) * t_out`, with `k_z` the complex normal
/// wavenumber inside the slab. Internal multiple bounces are ignored; their
/// effect is absorbed into the effective material parameters.
pub fn slab_transmission(
    theta_i: f64,
    outside: &ComplexMedium,
    slab: &ComplexMedium,
    thickness_m: f64,
    f_hz: f64,
    mode: PolarizationMode,
) -> Complex64 {
    let entry = fresnel(theta_i, outside, slab);
    let n_slab = slab.refractive_index();
    let cos_t = cos_theta_t(theta_i, outside, slab);

    // Exit interface: incidence at the internal angle, back into `outside`.
    // Writing the coefficients directly keeps the (complex) internal angle
    // exact instead of round-tripping through acos.
    let eta1 = slab.impedance;
    let eta2 = outside.impedance;
    let cos_exit_t = Complex64::new(theta_i.cos(), 0.0);
    let t_out_perp = 2.0 * eta2 * cos_t / (eta2 * cos_t + eta1 * cos_exit_t);
    let t_out_par = 2.0 * eta2 * cos_t / (eta2 * cos_exit_t + eta1 * cos_t);

    let k_z = 2.0 * std::f64::consts::PI * f_hz / SPEED_OF_LIGHT * n_slab * cos_t;
    let phase = (-Complex64::i() * k_z * thickness_m).exp();

    let t_perp = entry.t_perp * phase * t_out_perp;
    let t_par = entry.t_par * phase * t_out_par;
    collapse(mode, t_perp, t_par)
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CatalogFile {
    #[serde(default)]
    version: String,
    materials: Vec<RadioMaterial>,
}

/// Named, versioned set of materials. Lookup is by exact name.
#[derive(Debug, Clone)]
pub struct MaterialCatalog {
    pub version: String,
    materials: BTreeMap<String, RadioMaterial>,
}

impl MaterialCatalog {
    pub fn from_materials(
        version: impl Into<String>,
        materials: Vec<RadioMaterial>,
    ) -> Result<MaterialCatalog, MaterialError> {
        for m in &materials {
            if m.valid_ghz.1 < m.valid_ghz.0 {
                return Err(MaterialError::EmptyValidity {
                    name: m.name.clone(),
                });
            }
            // Probe the validity endpoints and a midpoint; the power law is
            // monotone so endpoints bound the range.
            let mid = 0.5 * (m.valid_ghz.0 + m.valid_ghz.1);
            for f_ghz in [m.valid_ghz.0, mid, m.valid_ghz.1] {
                let f_hz = f_ghz * 1e9;
                let raw_eps = m.perm_a * (f_ghz).powf(m.perm_b);
                if raw_eps < 1.0 {
                    return Err(MaterialError::PermittivityBelowOne {
                        name: m.name.clone(),
                        f_ghz,
                        value: raw_eps,
                    });
                }
                let sigma = m.conductivity(f_hz);
                if sigma < 0.0 {
                    return Err(MaterialError::NegativeConductivity {
                        name: m.name.clone(),
                        f_ghz,
                        value: sigma,
                    });
                }
            }
        }
        Ok(MaterialCatalog {
            version: version.into(),
            materials: materials.into_iter().map(|m| (m.name.clone(), m)).collect(),
        })
    }

    /// Builds a catalog without the physicality checks. Perturbation sweeps
    /// use this; evaluated permittivity still floors at 1.
    pub fn from_materials_unchecked(
        version: impl Into<String>,
        materials: Vec<RadioMaterial>,
    ) -> MaterialCatalog {
        MaterialCatalog {
            version: version.into(),
            materials: materials.into_iter().map(|m| (m.name.clone(), m)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&RadioMaterial> {
        self.materials.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn materials(&self) -> impl Iterator<Item = &RadioMaterial> {
        self.materials.values()
    }

    /// Loads a replacement catalog from a JSON file (a list of materials or
    /// a `{version, materials}` document).
    pub fn from_file(path: &Path) -> Result<MaterialCatalog, MaterialError> {
        let text = std::fs::read_to_string(path).map_err(|source| MaterialError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let parsed: CatalogFile = match serde_json::from_str(&text) {
            Ok(doc) => doc,
            Err(_) => {
                let materials: Vec<RadioMaterial> =
                    serde_json::from_str(&text).map_err(|e| MaterialError::Parse {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })?;
                CatalogFile {
                    version: String::new(),
                    materials,
                }
            }
        };
        let version = if parsed.version.is_empty() {
            format!("file:{}", path.display())
        } else {
            parsed.version
        };
        MaterialCatalog::from_materials(version, parsed.materials)
    }
}

static BUILTIN: OnceLock<MaterialCatalog> = OnceLock::new();

/// The built-in catalog, parsed once from the bundled data file.
pub fn builtin_catalog() -> &'static MaterialCatalog {
    BUILTIN.get_or_init(|| {
        let doc: CatalogFile = serde_json::from_str(include_str!("../data/materials.json"))
            .expect("bundled material data must parse");
        MaterialCatalog::from_materials(doc.version, doc.materials)
            .expect("bundled material data must validate")
    })
}

/// Alias matching the operation name used by callers.
pub fn material_catalog() -> &'static MaterialCatalog {
    builtin_catalog()
}

#[cfg(test)]
mod tests {
    use super::*;

    const F0: f64 = 2.437e9;

    fn lossless(eps_r: f64) -> ComplexMedium {
        ComplexMedium {
            eta_complex: Complex64::new(eps_r, 0.0),
            impedance: Complex64::new(FREE_SPACE_IMPEDANCE / eps_r.sqrt(), 0.0),
        }
    }

    #[test]
    fn catalog_has_required_materials() {
        let cat = builtin_catalog();
        for name in [
            "concrete",
            "brick",
            "plasterboard",
            "wood",
            "glass",
            "metal",
            "ceiling_board",
            "floorboard",
        ] {
            assert!(cat.get(name).is_some(), "missing {name}");
        }
        assert_eq!(cat.version, "itu-r-p2040-3");
    }

    #[test]
    fn metal_is_near_perfect_reflector() {
        let metal = builtin_catalog().get("metal").unwrap();
        assert!(metal.conductivity(F0) >= 1e6);
    }

    #[test]
    fn permittivity_at_least_one_everywhere() {
        for m in builtin_catalog().materials() {
            assert!(m.permittivity(F0) >= 1.0, "{}", m.name);
        }
    }

    #[test]
    fn power_law_is_monotone_across_wifi_bands() {
        for m in builtin_catalog().materials() {
            let freqs = [2.437e9, 5e9, 6e9];
            let eps: Vec<f64> = freqs.iter().map(|&f| m.permittivity(f)).collect();
            let sig: Vec<f64> = freqs.iter().map(|&f| m.conductivity(f)).collect();
            let monotone = |v: &[f64]| {
                v.windows(2).all(|w| w[1] >= w[0] - 1e-15)
                    || v.windows(2).all(|w| w[1] <= w[0] + 1e-15)
            };
            assert!(monotone(&eps), "{} eps not monotone", m.name);
            assert!(monotone(&sig), "{} sigma not monotone", m.name);
        }
    }

    #[test]
    fn vacuum_impedance_is_eta0() {
        let vac = builtin_catalog().get("vacuum").unwrap();
        let med = eval_medium(vac, F0);
        assert!((med.impedance.re - FREE_SPACE_IMPEDANCE).abs() < 1e-9);
        assert!(med.impedance.im.abs() < 1e-9);
    }

    #[test]
    fn lossless_eps4_halves_impedance() {
        let m = RadioMaterial {
            name: "eps4".into(),
            perm_a: 4.0,
            perm_b: 0.0,
            cond_c: 0.0,
            cond_d: 0.0,
            valid_ghz: (1.0, 100.0),
        };
        let med = eval_medium(&m, F0);
        assert!((med.impedance.re - FREE_SPACE_IMPEDANCE / 2.0).abs() < 1e-9);
    }

    #[test]
    fn conductor_impedance_collapses() {
        let m = RadioMaterial {
            name: "pec-ish".into(),
            perm_a: 1.0,
            perm_b: 0.0,
            cond_c: 1e9,
            cond_d: 0.0,
            valid_ghz: (1.0, 100.0),
        };
        let med = eval_medium(&m, F0);
        assert!(med.impedance.norm() < 0.1);
        assert!(med.eta_complex.im <= 0.0);
    }

    #[test]
    fn snell_normal_incidence_is_zero() {
        let air = ComplexMedium::vacuum();
        let glass = lossless(6.0);
        let t = snell(0.0, &air, &glass);
        assert!(t.norm() < 1e-12);
    }

    #[test]
    fn snell_air_to_glass_bends_toward_normal() {
        let air = ComplexMedium::vacuum();
        let glass = lossless(6.0);
        let theta_i = 45f64.to_radians();
        let t = snell(theta_i, &air, &glass);
        // arcsin(sin(45)/sqrt(6)) = 0.29310 rad
        let expected = (theta_i.sin() / 6f64.sqrt()).asin();
        assert!(t.im.abs() < 1e-12);
        assert!((t.re - expected).abs() < 1e-12);
        assert!(t.re < theta_i);
    }

    #[test]
    fn total_internal_reflection_goes_evanescent() {
        let air = ComplexMedium::vacuum();
        let glass = lossless(6.0);
        // critical angle from glass into air: asin(1/sqrt(6)) = 24.1 deg
        let theta_i = 45f64.to_radians();
        let t = snell(theta_i, &glass, &air);
        assert!(t.im.abs() > 1e-6, "expected evanescent angle, got {t}");
        let c = fresnel(theta_i, &glass, &air);
        assert!((c.r_perp.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normal_incidence_air_to_eps4_is_minus_third() {
        let c = fresnel(0.0, &ComplexMedium::vacuum(), &lossless(4.0));
        assert!((c.r_perp.re + 1.0 / 3.0).abs() < 1e-12, "{}", c.r_perp);
        assert!(c.r_perp.im.abs() < 1e-15);
        // r_par equals r_perp at normal incidence under this convention.
        assert!((c.r_par - c.r_perp).norm() < 1e-12);
    }

    #[test]
    fn grazing_incidence_reflects_fully() {
        let c = fresnel(89.999f64.to_radians(), &ComplexMedium::vacuum(), &lossless(4.0));
        assert!(c.r_perp.norm() > 0.999);
    }

    #[test]
    fn pec_limit_reflects_minus_one() {
        let m = RadioMaterial {
            name: "metalish".into(),
            perm_a: 1.0,
            perm_b: 0.0,
            cond_c: 1e7,
            cond_d: 0.0,
            valid_ghz: (1.0, 100.0),
        };
        let metal = eval_medium(&m, F0);
        let c = fresnel(0.0, &ComplexMedium::vacuum(), &metal);
        assert!((c.r_perp + Complex64::new(1.0, 0.0)).norm() < 1e-3, "{}", c.r_perp);
    }

    #[test]
    fn slab_zero_thickness_identical_media_is_unity() {
        let air = ComplexMedium::vacuum();
        let t = slab_transmission(0.3, &air, &air, 0.0, F0, PolarizationMode::PerpOnly);
        assert!((t - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn lossless_slab_magnitude_has_no_decay() {
        let air = ComplexMedium::vacuum();
        let slab = lossless(4.0);
        let theta = 0.4;
        let t = slab_transmission(theta, &air, &slab, 0.07, F0, PolarizationMode::PerpOnly);
        let entry = fresnel(theta, &air, &slab);
        // |T| reduces to |t_in * t_out| when the slab is lossless.
        let eta1 = slab.impedance;
        let eta2 = air.impedance;
        let cos_t = Complex64::new(1.0, 0.0) - Complex64::new(theta.sin() / 2.0, 0.0).powu(2);
        let cos_t = cos_t.sqrt();
        let t_out = 2.0 * eta2 * cos_t / (eta2 * cos_t + eta1 * Complex64::new(theta.cos(), 0.0));
        assert!((t.norm() - (entry.t_perp * t_out).norm()).abs() < 1e-12);
    }

    #[test]
    fn concrete_slab_matches_independent_evaluation() {
        // 0.1 m of concrete at 2.437 GHz, evaluated separately with the
        // closed form t_in * exp(-j k_z d) * t_out (perpendicular pol).
        let concrete = builtin_catalog().get("concrete").unwrap();
        let med = eval_medium(concrete, F0);
        let air = ComplexMedium::vacuum();
        let t0 = slab_transmission(0.0, &air, &med, 0.1, F0, PolarizationMode::PerpOnly);
        let db0 = 20.0 * t0.norm().log10();
        assert!((db0 - (-8.069373187870385)).abs() < 1e-6, "{db0}");
        let t30 = slab_transmission(
            30f64.to_radians(),
            &air,
            &med,
            0.1,
            F0,
            PolarizationMode::PerpOnly,
        );
        let db30 = 20.0 * t30.norm().log10();
        assert!((db30 - (-8.666912646983992)).abs() < 1e-6, "{db30}");
    }

    #[test]
    fn passivity_over_grid() {
        let air = ComplexMedium::vacuum();
        for m in builtin_catalog().materials() {
            for f in [2.437e9, 5e9, 6e9] {
                let med = eval_medium(m, f);
                for deg in 0..90 {
                    let theta = (deg as f64).to_radians();
                    let c = fresnel(theta, &air, &med);
                    assert!(c.r_perp.norm() <= 1.0 + 1e-12, "{} r_perp", m.name);
                    assert!(c.r_par.norm() <= 1.0 + 1e-12, "{} r_par", m.name);
                    let thickness = crate::scene::default_thickness_m(&m.name);
                    for mode in [PolarizationMode::PerpOnly, PolarizationMode::Average] {
                        let t = slab_transmission(theta, &air, &med, thickness, f, mode);
                        assert!(t.norm() <= 1.0 + 1e-12, "{} slab", m.name);
                    }
                }
            }
        }
    }

    #[test]
    fn lossless_energy_conservation() {
        let air = ComplexMedium::vacuum();
        for eps in [1.5, 2.73, 4.0, 6.31, 9.0] {
            let med = lossless(eps);
            for deg in 0..90 {
                let theta = (deg as f64).to_radians();
                let c = fresnel(theta, &air, &med);
                let cos_i = theta.cos();
                let cos_t = c.theta_t.re.cos();
                let weight = (air.impedance.re * cos_t) / (med.impedance.re * cos_i);
                let perp = c.r_perp.norm_sqr() + weight * c.t_perp.norm_sqr();
                let par = c.r_par.norm_sqr() + weight * c.t_par.norm_sqr();
                assert!((perp - 1.0).abs() < 1e-9, "perp {perp} at {deg}");
                assert!((par - 1.0).abs() < 1e-9, "par {par} at {deg}");
            }
        }
    }

    #[test]
    fn reciprocity_for_lossless_pairs() {
        let a = lossless(1.0);
        let b = lossless(4.0);
        for deg in [5.0, 20.0, 40.0, 60.0, 80.0] {
            let theta_i = (deg as f64).to_radians();
            let fwd = fresnel(theta_i, &a, &b);
            let theta_t = fwd.theta_t.re;
            let rev = fresnel(theta_t, &b, &a);
            assert!((fwd.r_perp + rev.r_perp).norm() < 1e-9);
        }
    }

    #[test]
    fn override_file_round_trip() {
        let json = r#"[{"name":"custom","perm_a":3.0,"perm_b":0.0,"cond_c":0.01,"cond_d":1.0,"valid_ghz":[1.0,10.0]}]"#;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, json.as_bytes()).unwrap();
        let cat = MaterialCatalog::from_file(f.path()).unwrap();
        assert!(cat.get("custom").is_some());
        assert!(cat.get("concrete").is_none());
    }

    #[test]
    fn invalid_override_rejected() {
        let json = r#"[{"name":"bad","perm_a":0.5,"perm_b":0.0,"cond_c":0.0,"cond_d":0.0,"valid_ghz":[1.0,10.0]}]"#;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, json.as_bytes()).unwrap();
        assert!(matches!(
            MaterialCatalog::from_file(f.path()),
            Err(MaterialError::PermittivityBelowOne { .. })
        ));
    }
}
