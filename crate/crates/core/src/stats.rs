//! Cross-platform comparison statistics: relative and absolute error
//! summaries, the paired Student t test with confidence intervals, RSSI
//! level calibration, and Pearson correlation.
//!
//! The t critical value and the p-value both come from one regularized
//! incomplete-beta routine; there are no lookup tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample {label:?} has zero reference; relative error undefined")]
    ZeroReference { label: String },
    #[error("zero variance; the t statistic is undefined")]
    ZeroVariance,
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("constant input; correlation undefined")]
    ConstantInput,
    #[error("sample {label:?} is not on the {expected:?} scale")]
    WrongScale { label: String, expected: Scale },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Db,
}

/// One (proposed, reference) metric pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedSample {
    pub label: String,
    pub proposed: f64,
    pub reference: f64,
    pub scale: Scale,
}

impl PairedSample {
    pub fn new(label: impl Into<String>, proposed: f64, reference: f64, scale: Scale) -> Self {
        PairedSample {
            label: label.into(),
            proposed,
            reference,
            scale,
        }
    }
}

/// Per-pair errors plus their mean and max.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub errors: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub n: usize,
}

impl ErrorSummary {
    fn from_errors(errors: Vec<f64>) -> ErrorSummary {
        let n = errors.len();
        let mean = errors.iter().sum::<f64>() / n as f64;
        let max = errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ErrorSummary {
            errors,
            mean,
            max,
            n,
        }
    }
}

/// Relative normalized error `|proposed - reference| / |reference|` per pair.
pub fn rel_error(samples: &[PairedSample]) -> Result<ErrorSummary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut errors = Vec::with_capacity(samples.len());
    for s in samples {
        if s.scale != Scale::Linear {
            return Err(StatsError::WrongScale {
                label: s.label.clone(),
                expected: Scale::Linear,
            });
        }
        if s.reference == 0.0 {
            return Err(StatsError::ZeroReference {
                label: s.label.clone(),
            });
        }
        errors.push((s.proposed - s.reference).abs() / s.reference.abs());
    }
    Ok(ErrorSummary::from_errors(errors))
}

/// Absolute deviation in dB per pair; stable near zero where relative error
/// is ill-conditioned.
pub fn abs_db_error(samples: &[PairedSample]) -> Result<ErrorSummary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, got: 0 });
    }
    for s in samples {
        if s.scale != Scale::Db {
            return Err(StatsError::WrongScale {
                label: s.label.clone(),
                expected: Scale::Db,
            });
        }
    }
    Ok(ErrorSummary::from_errors(
        samples
            .iter()
            .map(|s| (s.proposed - s.reference).abs())
            .collect(),
    ))
}

/// Paired t-test result with the two-sided p-value and confidence interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TTestResult {
    pub mean_diff: f64,
    pub std_diff: f64,
    pub n: usize,
    pub t_stat: f64,
    pub dof: usize,
    pub p_two_sided: f64,
    pub confidence: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Two-sided paired t test of the differences against zero mean, with a
/// `confidence` interval (default 0.95 at the CLI).
pub fn paired_t_test(differences: &[f64], confidence: f64) -> Result<TTestResult, StatsError> {
    let n = differences.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: n });
    }
    let mean = differences.iter().sum::<f64>() / n as f64;
    let ss: f64 = differences.iter().map(|d| (d - mean).powi(2)).sum();
    let var = ss / (n as f64 - 1.0);
    if var <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let std = var.sqrt();
    let se = std / (n as f64).sqrt();
    let t_stat = mean / se;
    let dof = n - 1;
    let p_two_sided = 2.0 * (1.0 - student_t_cdf(t_stat.abs(), dof as f64));
    let t_crit = student_t_quantile(0.5 + confidence / 2.0, dof as f64);
    Ok(TTestResult {
        mean_diff: mean,
        std_diff: std,
        n,
        t_stat,
        dof,
        p_two_sided,
        confidence,
        ci_low: mean - t_crit * se,
        ci_high: mean + t_crit * se,
    })
}

/// RSSI level-alignment result. `offset_db` is the mean simulated-minus-
/// measured level; alignment subtracts it from the simulated values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub offset_db: f64,
    pub mae_raw: f64,
    pub rmse_raw: f64,
    pub mae_aligned: f64,
    pub rmse_aligned: f64,
    pub pearson_r: f64,
    pub n: usize,
}

fn mae_rmse(errors: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = errors.clone().count() as f64;
    let mae = errors.clone().map(f64::abs).sum::<f64>() / n;
    let rmse = (errors.map(|e| e * e).sum::<f64>() / n).sqrt();
    (mae, rmse)
}

/// Level alignment of simulated against measured RSSI: recovers the constant
/// offset, reports MAE/RMSE before and after, and Pearson r (unchanged by
/// alignment).
pub fn calibrate_rssi(
    measured_dbm: &[f64],
    simulated_dbm: &[f64],
) -> Result<CalibrationResult, StatsError> {
    if measured_dbm.len() != simulated_dbm.len() {
        return Err(StatsError::LengthMismatch {
            left: measured_dbm.len(),
            right: simulated_dbm.len(),
        });
    }
    let n = measured_dbm.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: n });
    }
    let offset_db = simulated_dbm
        .iter()
        .zip(measured_dbm)
        .map(|(s, m)| s - m)
        .sum::<f64>()
        / n as f64;
    let raw = simulated_dbm.iter().zip(measured_dbm).map(|(s, m)| s - m);
    let aligned = simulated_dbm
        .iter()
        .zip(measured_dbm)
        .map(move |(s, m)| (s - offset_db) - m);
    let (mae_raw, rmse_raw) = mae_rmse(raw);
    let (mae_aligned, rmse_aligned) = mae_rmse(aligned);
    Ok(CalibrationResult {
        offset_db,
        mae_raw,
        rmse_raw,
        mae_aligned,
        rmse_aligned,
        pearson_r: pearson_r(measured_dbm, simulated_dbm)?,
        n,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx).powi(2);
        syy += (yi - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

// ---------------------------------------------------------------------------
// Student t distribution via the regularized incomplete beta function
// ---------------------------------------------------------------------------

/// Lanczos approximation of `ln Gamma(x)` for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut sum = 1.000000000190015;
    for (i, c) in COEFFS.iter().enumerate() {
        sum += c / (x + i as f64 + 1.0);
    }
    let tmp = x + 5.5;
    (x + 0.5) * tmp.ln() - tmp + (2.5066282746310005 * sum / x).ln()
}

/// Continued-fraction kernel for the incomplete beta function.
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const FPMIN: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// CDF of Student's t with `dof` degrees of freedom.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    let tail = 0.5 * inc_beta(0.5 * dof, 0.5, x);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Quantile (inverse CDF) by bisection on the CDF; deterministic and free of
/// tables.
pub fn student_t_quantile(p: f64, dof: f64) -> f64 {
    assert!((0.0..1.0).contains(&p) || p == 1.0, "p out of range");
    if p == 0.5 {
        return 0.0;
    }
    let (mut lo, mut hi) = if p > 0.5 { (0.0, 1e6) } else { (-1e6, 0.0) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, dof) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_pairs(pairs: &[(f64, f64)]) -> Vec<PairedSample> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, &(p, r))| PairedSample::new(format!("pair{i}"), p, r, Scale::Linear))
            .collect()
    }

    fn db_pairs(pairs: &[(f64, f64)]) -> Vec<PairedSample> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, &(p, r))| PairedSample::new(format!("pair{i}"), p, r, Scale::Db))
            .collect()
    }

    #[test]
    fn rel_error_reference_rows() {
        // office mean-delay row
        let s = rel_error(&linear_pairs(&[(10.04, 11.97), (15.55, 27.30), (16.88, 25.95)]))
            .unwrap();
        assert!((s.mean * 100.0 - 31.4).abs() < 0.1, "{}", s.mean * 100.0);
        // office path-loss row
        let s = rel_error(&linear_pairs(&[(38.25, 48.81), (44.77, 44.77), (43.50, 57.57)]))
            .unwrap();
        assert!((s.mean * 100.0 - 15.4).abs() < 0.1);
        // identical pair
        let s = rel_error(&linear_pairs(&[(5.0, 5.0)])).unwrap();
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn rel_error_rejects_zero_reference() {
        assert!(matches!(
            rel_error(&linear_pairs(&[(1.0, 0.0)])),
            Err(StatsError::ZeroReference { .. })
        ));
    }

    #[test]
    fn abs_db_error_reference_rows() {
        let s = abs_db_error(&db_pairs(&[(2.83, 3.80), (-7.65, -8.40), (-6.12, -6.95)]))
            .unwrap();
        assert!((s.mean - 0.85).abs() < 0.005, "{}", s.mean);
        assert!((s.max - 0.97).abs() < 0.005);
        // ill-conditioned near zero stays finite
        let s = abs_db_error(&db_pairs(&[(0.0, 0.0)])).unwrap();
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn t_test_reference_differences() {
        let diffs = [10.56, 0.0, 14.07, 20.91, 3.87, 9.98, 11.08, 16.88];
        let r = paired_t_test(&diffs, 0.95).unwrap();
        assert!((r.mean_diff - 10.9).abs() < 0.05);
        assert!((r.ci_low - 5.3).abs() < 0.1, "{}", r.ci_low);
        assert!((r.ci_high - 16.5).abs() < 0.1, "{}", r.ci_high);
        assert!((r.p_two_sided - 0.0025).abs() < 0.0005, "{}", r.p_two_sided);
        assert_eq!(r.dof, 7);
    }

    #[test]
    fn t_test_near_degenerate() {
        let diffs = [1.0, 1.0 + 1e-9, 1.0 - 1e-9, 1.0 + 2e-9];
        let r = paired_t_test(&diffs, 0.95).unwrap();
        assert!(r.ci_low < 1.0 && 1.0 < r.ci_high);
        assert!(r.p_two_sided < 1e-12);
    }

    #[test]
    fn t_test_errors() {
        assert!(matches!(
            paired_t_test(&[1.0], 0.95),
            Err(StatsError::TooFewSamples { .. })
        ));
        assert!(matches!(
            paired_t_test(&[2.0, 2.0, 2.0], 0.95),
            Err(StatsError::ZeroVariance)
        ));
    }

    #[test]
    fn t_cdf_spot_value() {
        // classic two-sided 95% critical value at dof 7
        assert!((student_t_cdf(2.365, 7.0) - 0.975).abs() < 1e-4);
        let q = student_t_quantile(0.975, 7.0);
        assert!((q - 2.3646242515927844).abs() < 1e-9, "{q}");
    }

    #[test]
    fn calibration_recovers_offset() {
        let measured: Vec<f64> = (0..21).map(|i| -40.0 - 1.3 * i as f64).collect();
        let simulated: Vec<f64> = measured.iter().map(|m| m - 8.04).collect();
        let c = calibrate_rssi(&measured, &simulated).unwrap();
        assert!((c.offset_db + 8.04).abs() < 1e-12, "{}", c.offset_db);
        assert!(c.mae_aligned < 1e-12);
        assert!(c.rmse_aligned < 1e-12);
        assert!((c.mae_raw - 8.04).abs() < 1e-12);
        assert!((c.pearson_r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_identity_and_affine() {
        let measured = [1.0, 2.0, 4.0, 8.0];
        let c = calibrate_rssi(&measured, &measured).unwrap();
        assert_eq!(c.offset_db, 0.0);
        assert!((c.pearson_r - 1.0).abs() < 1e-12);

        // simulated = a*measured + c with a > 0: perfectly correlated but
        // level alignment cannot fix the slope
        let simulated: Vec<f64> = measured.iter().map(|m| 1.5 * m + 2.0).collect();
        let c = calibrate_rssi(&measured, &simulated).unwrap();
        assert!((c.pearson_r - 1.0).abs() < 1e-12);
        assert!(c.mae_aligned > 0.0);
    }

    #[test]
    fn calibration_alignment_preserves_r() {
        let measured = [-50.0, -55.0, -61.0, -47.0, -70.0];
        let simulated = [-44.0, -50.1, -55.0, -40.2, -61.9];
        let c = calibrate_rssi(&measured, &simulated).unwrap();
        // the reported r is computed on raw values and is therefore
        // bit-identical before/after the (constant) alignment
        assert_eq!(
            c.pearson_r.to_bits(),
            pearson_r(&measured, &simulated).unwrap().to_bits()
        );
        let aligned: Vec<f64> = simulated.iter().map(|s| s - c.offset_db).collect();
        let r_aligned = pearson_r(&measured, &aligned).unwrap();
        assert!((c.pearson_r - r_aligned).abs() < 1e-12);
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson_r(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        // hand computation: covariance 3, variances 5 and 5
        let y = [2.0, 1.0, 4.0, 3.0];
        assert!((pearson_r(&x, &y).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson_r(&[1.0, 1.0], &[2.0, 3.0]),
            Err(StatsError::ConstantInput)
        ));
        assert!(matches!(
            pearson_r(&[1.0], &[2.0]),
            Err(StatsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn mae_never_exceeds_rmse() {
        let mut state = 0x1234_5678_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 20.0 - 10.0
        };
        for _ in 0..200 {
            let n = 2 + (next().abs() as usize % 30);
            let measured: Vec<f64> = (0..n).map(|_| next()).collect();
            let simulated: Vec<f64> = (0..n).map(|_| next()).collect();
            if let Ok(c) = calibrate_rssi(&measured, &simulated) {
                assert!(c.mae_raw <= c.rmse_raw + 1e-12);
                assert!(c.mae_aligned <= c.rmse_aligned + 1e-12);
            }
        }
    }
}
