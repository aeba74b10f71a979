//! Parameter sweeps: every (shift, SNR) grid point becomes one table row.

use serde::Serialize;

use crate::config::{Direction, ExperimentConfig};
use crate::experiment::{GridPoint, Scenario};
use crate::legacy::{self, LegacyKind};
use crate::metrics::Metrics;
use crate::Result;

/// One row of the sweep table. Side-channel columns stay empty on legacy
/// rows and the reverse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub direction: &'static str,
    pub wifi_channel: u8,
    pub shift_khz: Option<f64>,
    pub snr_db: f64,
    pub distance_m: Option<f64>,
    pub trials: usize,
    pub bits: Option<usize>,
    pub bit_errors: Option<usize>,
    pub ber: Option<f64>,
    pub ber_ci95: Option<f64>,
    pub frames: Option<usize>,
    pub frames_ok: Option<usize>,
    pub throughput_bps: Option<f64>,
    pub throughput_ci95: Option<f64>,
    pub legacy_packets: Option<usize>,
    pub legacy_per: Option<f64>,
    pub legacy_throughput_loss: Option<f64>,
    pub legacy_ci95: Option<f64>,
}

pub fn grid(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let shifts: Vec<Option<f64>> = match &cfg.sweep.shifts_khz {
        Some(s) => s.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let snrs = cfg.snr_points();
    shifts
        .iter()
        .flat_map(|&shift_khz| snrs.iter().map(move |&(snr_db, distance_m)| GridPoint { shift_khz, snr_db, distance_m }))
        .collect()
}

pub fn side_channel_row(sc: &Scenario, m: &Metrics) -> SweepRow {
    SweepRow {
        direction: sc.direction.name(),
        wifi_channel: sc.wifi.index(),
        shift_khz: sc.point.shift_khz,
        snr_db: sc.point.snr_db,
        distance_m: sc.point.distance_m,
        trials: m.trials,
        bits: Some(m.bits),
        bit_errors: Some(m.bit_errors),
        ber: Some(m.ber),
        ber_ci95: Some(m.ber_ci95),
        frames: Some(m.frames),
        frames_ok: Some(m.frames_ok),
        throughput_bps: Some(m.throughput_bps),
        throughput_ci95: Some(m.throughput_ci95),
        legacy_packets: None,
        legacy_per: None,
        legacy_throughput_loss: None,
        legacy_ci95: None,
    }
}

/// Metrics at one grid point.
pub fn run_point(cfg: &ExperimentConfig, point: GridPoint) -> Result<SweepRow> {
    let kind = match cfg.direction {
        Direction::LegacyWifi => LegacyKind::Wifi,
        Direction::LegacyBle => LegacyKind::Ble,
        Direction::W2b | Direction::B2w => {
            let sc = Scenario::new(cfg, point)?;
            let records = sc.run_trials(cfg.trials)?;
            return Ok(side_channel_row(&sc, &Metrics::from_records(&records)));
        }
    };
    let shift = point.shift_khz.unwrap_or(match kind {
        LegacyKind::Wifi => cfg.shifts.wifi_khz[0].abs().max(cfg.shifts.wifi_khz[1].abs()),
        LegacyKind::Ble => cfg.shifts.ble_khz[0].abs().max(cfg.shifts.ble_khz[1].abs()),
    });
    let r = legacy::legacy_rows(cfg, kind, &[shift], point.snr_db, cfg.legacy.packets)?.remove(0);
    Ok(SweepRow {
        direction: cfg.direction.name(),
        wifi_channel: cfg.wifi_channel,
        shift_khz: Some(shift),
        snr_db: point.snr_db,
        distance_m: point.distance_m,
        trials: 1,
        bits: None,
        bit_errors: None,
        ber: None,
        ber_ci95: None,
        frames: None,
        frames_ok: None,
        throughput_bps: None,
        throughput_ci95: None,
        legacy_packets: Some(r.packets),
        legacy_per: Some(r.legacy_per),
        legacy_throughput_loss: Some(r.legacy_throughput_loss),
        legacy_ci95: Some(r.loss_ci95),
    })
}

/// Rows in grid order: shifts outer, SNR inner.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    grid(cfg).into_iter().map(|p| run_point(cfg, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_is_shift_major() {
        let cfg = ExperimentConfig::from_toml("snr_db = [5.0, 10.0]\n[sweep]\nshifts_khz = [100.0, 130.0]\n").unwrap();
        let g = grid(&cfg);
        let pairs: Vec<(Option<f64>, f64)> = g.iter().map(|p| (p.shift_khz, p.snr_db)).collect();
        assert_eq!(pairs, vec![(Some(100.0), 5.0), (Some(100.0), 10.0), (Some(130.0), 5.0), (Some(130.0), 10.0)]);
    }

    #[test]
    fn distances_map_to_falling_snr() {
        let cfg = ExperimentConfig::from_toml("[sweep]\ndistances_m = [1.0, 2.0, 10.0]\n").unwrap();
        let snr: Vec<f64> = grid(&cfg).iter().map(|p| p.snr_db).collect();
        assert!((snr[0] - 30.0).abs() < 1e-12);
        assert!((snr[1] - (30.0 - 20.0 * 2f64.log10())).abs() < 1e-12);
        assert!((snr[2] - 10.0).abs() < 1e-12);
    }
}
