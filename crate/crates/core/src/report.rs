//! Shared numeric formatting for CSV/JSON reports.
//!
//! All CSV output is fixed at six significant digits with one rounding rule
//! so identical runs produce byte-identical files on any platform.

/// Formats `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{:.5e}", x);
    }
    let decimals = (5 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}
