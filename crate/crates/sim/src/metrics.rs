//! Aggregation of trial records. Sums are taken in trial order, so results
//! do not depend on how trials were scheduled.

use serde::Serialize;

use crate::experiment::TrialRecord;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Half-width of the 95% normal interval of a binomial proportion.
pub fn proportion_ci95(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    Z95 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub trials: usize,
    pub bits: usize,
    pub bit_errors: usize,
    pub erasures: usize,
    pub ber: f64,
    pub ber_ci95: f64,
    pub frames: usize,
    pub frames_ok: usize,
    pub delivered_bits: usize,
    pub seconds: f64,
    pub throughput_bps: f64,
    pub throughput_ci95: f64,
}

impl Metrics {
    pub fn from_records(records: &[TrialRecord]) -> Metrics {
        let bits: usize = records.iter().map(|r| r.bits_sent + r.bits_unsent).sum();
        let bit_errors: usize = records.iter().map(|r| r.bit_errors).sum();
        let delivered_bits: usize = records.iter().map(|r| r.delivered_bits()).sum();
        let seconds: f64 = records.iter().map(|r| r.seconds).sum();
        let ber = if bits == 0 { 0.0 } else { bit_errors as f64 / bits as f64 };
        let n = records.len();
        let throughput_bps = if seconds > 0.0 { delivered_bits as f64 / seconds } else { 0.0 };
        let throughput_ci95 = if n > 1 {
            let per: Vec<f64> = records.iter().map(|r| r.throughput_bps()).collect();
            let mean = per.iter().sum::<f64>() / n as f64;
            let var = per.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z95 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        Metrics {
            trials: n,
            bits,
            bit_errors,
            erasures: records.iter().map(|r| r.erasures).sum(),
            ber,
            ber_ci95: proportion_ci95(ber, bits),
            frames: n,
            frames_ok: records.iter().filter(|r| r.frame_ok).count(),
            delivered_bits,
            seconds,
            throughput_bps,
            throughput_ci95,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_shrinks_with_root_n() {
        let a = proportion_ci95(0.1, 1000);
        let b = proportion_ci95(0.1, 4000);
        assert!((a / b - 2.0).abs() < 1e-12);
        assert_eq!(proportion_ci95(0.0, 10), 0.0);
    }
}
