//! Channel impulse response assembly and the derived metric suite: path
//! gain, RSS, SINR, delay statistics, angular spreads, and Ricean K-factor.
//!
//! Azimuth statistics are computed after re-centering all azimuths into the
//! half-open 360-degree window around the strongest path, which keeps the
//! linear standard deviation meaningful across the +/-180 wrap. Azimuth 0 is
//! the scene-global +x axis; zenith is measured from +z.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::BOLTZMANN;
use crate::tracer::PathSet;

/// Taps closer than this merge by complex addition.
pub const TAP_MERGE_S: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("path set for {tx_id}->{rx_id} is empty")]
    EmptyPathSet { tx_id: String, rx_id: String },
}

/// Discrete complex baseband impulse response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cir {
    pub tx_id: String,
    pub rx_id: String,
    /// `(delay_s, amplitude)` with strictly increasing delays.
    pub taps: Vec<(f64, Complex64)>,
}

/// Link-budget terms entering RSS and SINR.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub noise_temp_k: f64,
    pub bandwidth_hz: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            tx_power_dbm: 0.0,
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
            noise_temp_k: 290.0,
            bandwidth_hz: 20e6,
        }
    }
}

impl LinkBudget {
    /// Thermal noise power `k T B` in dBm.
    pub fn noise_dbm(&self) -> f64 {
        10.0 * (BOLTZMANN * self.noise_temp_k * self.bandwidth_hz * 1000.0).log10()
    }
}

/// Scalar channel metrics for one link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub tx_id: String,
    pub rx_id: String,
    pub n_paths: usize,
    pub path_gain_db: f64,
    pub rss_dbm: f64,
    pub mean_delay_s: f64,
    pub rms_delay_s: f64,
    pub mean_azimuth_deg: f64,
    pub mean_zenith_deg: f64,
    pub asa_deg: f64,
    pub zsa_deg: f64,
    /// Positive infinity when a single path carries all power.
    pub k_factor_db: f64,
}

fn require_nonempty(ps: &PathSet) -> Result<(), ChannelError> {
    if ps.paths.is_empty() {
        return Err(ChannelError::EmptyPathSet {
            tx_id: ps.tx_id.clone(),
            rx_id: ps.rx_id.clone(),
        });
    }
    Ok(())
}

/// Sums taps into the discrete CIR, merging taps within [`TAP_MERGE_S`].
pub fn build_cir(ps: &PathSet) -> Result<Cir, ChannelError> {
    require_nonempty(ps)?;
    let mut taps: Vec<(f64, Complex64)> = ps
        .paths
        .iter()
        .map(|p| (p.delay_s, p.amplitude))
        .collect();
    taps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(f64, Complex64)> = Vec::with_capacity(taps.len());
    for (delay, amp) in taps {
        match merged.last_mut() {
            Some((d, a)) if (delay - *d).abs() <= TAP_MERGE_S => *a += amp,
            _ => merged.push((delay, amp)),
        }
    }
    Ok(Cir {
        tx_id: ps.tx_id.clone(),
        rx_id: ps.rx_id.clone(),
        taps: merged,
    })
}

/// Total multipath gain `10 log10(sum |a_l|^2)` in dB.
pub fn path_gain(ps: &PathSet) -> Result<f64, ChannelError> {
    require_nonempty(ps)?;
    let total: f64 = ps.paths.iter().map(|p| p.power_linear()).sum();
    Ok(10.0 * total.log10())
}

/// Received signal strength: transmit power, antenna gains, and path gain.
pub fn rss(ps: &PathSet, budget: &LinkBudget) -> Result<f64, ChannelError> {
    Ok(budget.tx_power_dbm + budget.tx_gain_dbi + budget.rx_gain_dbi + path_gain(ps)?)
}

/// SINR in dB: target power over interferer sum plus thermal noise.
pub fn sinr(target_rss_dbm: f64, interferer_rss_dbm: &[f64], budget: &LinkBudget) -> f64 {
    let target_mw = 10f64.powf(target_rss_dbm / 10.0);
    let interference_mw: f64 = interferer_rss_dbm
        .iter()
        .map(|&p| 10f64.powf(p / 10.0))
        .sum();
    let noise_mw = BOLTZMANN * budget.noise_temp_k * budget.bandwidth_hz * 1000.0;
    10.0 * (target_mw / (interference_mw + noise_mw)).log10()
}

/// Power-weighted mean delay and RMS delay spread, seconds.
pub fn delay_stats(ps: &PathSet) -> Result<(f64, f64), ChannelError> {
    require_nonempty(ps)?;
    let total: f64 = ps.paths.iter().map(|p| p.power_linear()).sum();
    let mean: f64 = ps
        .paths
        .iter()
        .map(|p| p.power_linear() * p.delay_s)
        .sum::<f64>()
        / total;
    let var: f64 = ps
        .paths
        .iter()
        .map(|p| p.power_linear() * (p.delay_s - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok((mean, var.max(0.0).sqrt()))
}

fn wrap_deg_180(x: f64) -> f64 {
    let mut v = x % 360.0;
    if v <= -180.0 {
        v += 360.0;
    } else if v > 180.0 {
        v -= 360.0;
    }
    v
}

/// Angular spreads of arrival `(asa, zsa, mean_azimuth, mean_zenith)` in
/// degrees. Azimuths re-center on the strongest path before the linear
/// weighted standard deviation.
pub fn angular_spreads(ps: &PathSet) -> Result<(f64, f64, f64, f64), ChannelError> {
    require_nonempty(ps)?;
    let strongest = ps
        .paths
        .iter()
        .enumerate()
        .max_by(|(ai, a), (bi, b)| {
            a.power_linear()
                .partial_cmp(&b.power_linear())
                .unwrap()
                .then(bi.cmp(ai)) // first index wins ties
        })
        .map(|(_, p)| p)
        .unwrap();
    let ref_az = strongest.aoa_azimuth_deg;

    let total: f64 = ps.paths.iter().map(|p| p.power_linear()).sum();
    let mut mean_az = 0.0;
    let mut mean_zen = 0.0;
    for p in &ps.paths {
        let az = ref_az + wrap_deg_180(p.aoa_azimuth_deg - ref_az);
        mean_az += p.power_linear() * az;
        mean_zen += p.power_linear() * p.aoa_zenith_deg;
    }
    mean_az /= total;
    mean_zen /= total;

    let mut var_az = 0.0;
    let mut var_zen = 0.0;
    for p in &ps.paths {
        let az = ref_az + wrap_deg_180(p.aoa_azimuth_deg - ref_az);
        var_az += p.power_linear() * (az - mean_az).powi(2);
        var_zen += p.power_linear() * (p.aoa_zenith_deg - mean_zen).powi(2);
    }
    var_az /= total;
    var_zen /= total;

    Ok((
        var_az.max(0.0).sqrt(),
        var_zen.max(0.0).sqrt(),
        wrap_deg_180(mean_az),
        mean_zen,
    ))
}

/// Ricean K-factor: strongest path power over the sum of the rest, dB.
/// A single-path set returns positive infinity.
pub fn k_factor(ps: &PathSet) -> Result<f64, ChannelError> {
    require_nonempty(ps)?;
    let mut strongest = f64::NEG_INFINITY;
    let mut total = 0.0;
    for p in &ps.paths {
        let pw = p.power_linear();
        total += pw;
        if pw > strongest {
            strongest = pw;
        }
    }
    let rest = total - strongest;
    if rest <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (strongest / rest).log10())
}

/// Computes the full metric row for one path set.
pub fn channel_metrics(ps: &PathSet, budget: &LinkBudget) -> Result<ChannelMetrics, ChannelError> {
    let pg = path_gain(ps)?;
    let (mean_delay, rms_delay) = delay_stats(ps)?;
    let (asa, zsa, mean_az, mean_zen) = angular_spreads(ps)?;
    Ok(ChannelMetrics {
        tx_id: ps.tx_id.clone(),
        rx_id: ps.rx_id.clone(),
        n_paths: ps.paths.len(),
        path_gain_db: pg,
        rss_dbm: budget.tx_power_dbm + budget.tx_gain_dbi + budget.rx_gain_dbi + pg,
        mean_delay_s: mean_delay,
        rms_delay_s: rms_delay,
        mean_azimuth_deg: mean_az,
        mean_zenith_deg: mean_zen,
        asa_deg: asa,
        zsa_deg: zsa,
        k_factor_db: k_factor(ps)?,
    })
}

/// CSV header for metric reports; column order follows the comparison-table
/// convention (delays, then gain/loss, then SINR, then angular stats).
pub const METRICS_CSV_HEADER: &str = "tx_id,rx_id,mean_delay_ns,rms_delay_ns,path_gain_db,path_loss_db,sinr_db,asa_deg,zsa_deg,mean_az_deg,mean_zen_deg,k_factor_db,rss_dbm,n_paths";

/// One metrics CSV row; `sinr_db` is supplied by the caller because it needs
/// the other transmitters.
pub fn metrics_csv_row(m: &ChannelMetrics, sinr_db: f64) -> String {
    use crate::report::sig6;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        m.tx_id,
        m.rx_id,
        sig6(m.mean_delay_s * 1e9),
        sig6(m.rms_delay_s * 1e9),
        sig6(m.path_gain_db),
        sig6(-m.path_gain_db),
        sig6(sinr_db),
        sig6(m.asa_deg),
        sig6(m.zsa_deg),
        sig6(m.mean_azimuth_deg),
        sig6(m.mean_zenith_deg),
        sig6(m.k_factor_db),
        sig6(m.rss_dbm),
        m.n_paths,
    )
}
