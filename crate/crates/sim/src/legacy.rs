//! Legacy transparency: packet success of ordinary Wi-Fi and BLE receivers
//! when their packets carry an artificial shift, against an unshifted
//! baseline that sees the same payloads and noise.

use dopplerfi_core::band::{BleChannel, WIFI_OCCUPIED_HALF_WIDTH};
use dopplerfi_core::ble_rx;
use dopplerfi_core::iq::apply_freq_shift;
use dopplerfi_core::medium::{self, BandTimeline, Emission, ImpairmentSpec};
use dopplerfi_core::rng;
use dopplerfi_core::waveforms::{self, BlePacketSpec, Mcs, WifiFrameSpec};
use dopplerfi_core::wifi_rx;
use dopplerfi_core::{Complex64, IqBuffer};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiment::FRAME_LEAD;
use crate::metrics::proportion_ci95;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LegacyKind {
    Wifi,
    Ble,
}

impl LegacyKind {
    pub fn name(self) -> &'static str {
        match self {
            LegacyKind::Wifi => "wifi",
            LegacyKind::Ble => "ble",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegacyRow {
    pub kind: LegacyKind,
    pub shift_khz: f64,
    pub snr_db: f64,
    pub packets: usize,
    pub baseline_ok: usize,
    pub shifted_ok: usize,
    pub legacy_per: f64,
    pub legacy_throughput_loss: f64,
    pub loss_ci95: f64,
}

/// BLE packets are padded with this many samples of silence on both sides.
const BLE_PAD: usize = 16;

/// Shift signs alternate so both bit values are exercised.
fn signed(shift_hz: f64, i: usize) -> f64 {
    if i.is_multiple_of(2) {
        shift_hz
    } else {
        -shift_hz
    }
}

fn impairment(cfg: &ExperimentConfig, snr_db: f64, i: usize) -> ImpairmentSpec {
    let spec = ImpairmentSpec::awgn(snr_db, rng::stream(cfg.seed, rng::salt("legacy.noise"), 0).random(), i as u64)
        .with_reference_power(1.0);
    if cfg.random_offsets {
        spec.with_random_offsets()
    } else {
        spec
    }
}

fn payload(cfg: &ExperimentConfig, kind: LegacyKind, i: usize, n: usize) -> Vec<bool> {
    let mut r = rng::stream(cfg.seed, rng::salt(kind.name()), i as u64);
    (0..n).map(|_| r.random()).collect()
}

/// Whether a legacy Wi-Fi receiver decodes packet `i` carrying `shift_hz`.
/// Shifts past the generator's limit are applied to the finished frame.
pub fn wifi_packet_ok(cfg: &ExperimentConfig, shift_hz: f64, snr_db: f64, i: usize) -> Result<bool> {
    let wifi = cfg.wifi()?;
    let bits = payload(cfg, LegacyKind::Wifi, i, cfg.timing.wifi_payload_bits);
    let spec = WifiFrameSpec { airtime: cfg.timing.wifi_airtime_us * 1e-6, ..WifiFrameSpec::new(bits.clone(), wifi) };
    let frame = apply_freq_shift(&waveforms::gen_wifi_frame(&spec)?, signed(shift_hz, i));
    let mut tl = BandTimeline::new(wifi.center_hz(), 2.0 * FRAME_LEAD + frame.duration());
    let bandwidth = 2.0 * (WIFI_OCCUPIED_HALF_WIDTH + shift_hz.abs());
    tl.push(Emission::at_center(frame, FRAME_LEAD, wifi.center_hz(), bandwidth));
    let sig = medium::impair(&medium::render(&tl)?, &impairment(cfg, snr_db, i));
    let layout = cfg.wifi_layout()?;
    Ok(wifi_rx::receive_legacy(&sig, Mcs::Bpsk12, layout.payload_symbols, bits.len()).is_some_and(|r| r.bits == bits))
}

/// Whether a legacy BLE receiver decodes packet `i` carrying `shift_hz`.
pub fn ble_packet_ok(cfg: &ExperimentConfig, shift_hz: f64, snr_db: f64, i: usize) -> Result<bool> {
    let bits = payload(cfg, LegacyKind::Ble, i, cfg.timing.ble_payload_bits);
    let spec = BlePacketSpec::new(bits.clone(), BleChannel::new(0)?).with_shift(signed(shift_hz, i));
    let pkt = waveforms::gen_ble_packet(&spec)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut samples = vec![zero; BLE_PAD];
    samples.extend_from_slice(pkt.samples());
    samples.extend(std::iter::repeat_n(zero, BLE_PAD));
    let sig = IqBuffer::new(samples, pkt.sample_rate(), pkt.center_freq())?;
    let sig = medium::impair(&sig, &impairment(cfg, snr_db, i));
    let sps = (pkt.sample_rate() / spec.symbol_rate).round() as usize;
    Ok(ble_rx::decode_legacy(&sig, BLE_PAD, bits.len(), sps) == bits)
}

fn successes(cfg: &ExperimentConfig, kind: LegacyKind, shift_hz: f64, snr_db: f64, packets: usize) -> Result<usize> {
    let ok = (0..packets)
        .into_par_iter()
        .map(|i| match kind {
            LegacyKind::Wifi => wifi_packet_ok(cfg, shift_hz, snr_db, i),
            LegacyKind::Ble => ble_packet_ok(cfg, shift_hz, snr_db, i),
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(ok.iter().filter(|&&b| b).count())
}

fn row(kind: LegacyKind, shift_khz: f64, snr_db: f64, packets: usize, baseline_ok: usize, shifted_ok: usize) -> LegacyRow {
    let n = packets as f64;
    let pb = baseline_ok as f64 / n;
    let ps = shifted_ok as f64 / n;
    let loss = if baseline_ok == 0 { 1.0 } else { (1.0 - ps / pb).clamp(0.0, 1.0) };
    // Delta method on the ratio of two proportions.
    let loss_ci95 = if pb > 0.0 {
        (proportion_ci95(ps, packets).powi(2) + (ps / pb * proportion_ci95(pb, packets)).powi(2)).sqrt() / pb
    } else {
        0.0
    };
    LegacyRow {
        kind,
        shift_khz,
        snr_db,
        packets,
        baseline_ok,
        shifted_ok,
        legacy_per: 1.0 - ps,
        legacy_throughput_loss: loss,
        loss_ci95,
    }
}

/// Loss for each shift in `shifts_khz` against one shared baseline.
pub fn legacy_rows(cfg: &ExperimentConfig, kind: LegacyKind, shifts_khz: &[f64], snr_db: f64, packets: usize) -> Result<Vec<LegacyRow>> {
    let baseline_ok = successes(cfg, kind, 0.0, snr_db, packets)?;
    shifts_khz
        .iter()
        .map(|&s| {
            let shifted_ok = if s == 0.0 { baseline_ok } else { successes(cfg, kind, s * 1e3, snr_db, packets)? };
            Ok(row(kind, s, snr_db, packets, baseline_ok, shifted_ok))
        })
        .collect()
}

/// Wi-Fi rows then BLE rows for the `[legacy]` section.
pub fn legacy_impact(cfg: &ExperimentConfig) -> Result<Vec<LegacyRow>> {
    let l = &cfg.legacy;
    let mut rows = legacy_rows(cfg, LegacyKind::Wifi, &l.wifi_shifts_khz, l.snr_db, l.packets)?;
    rows.extend(legacy_rows(cfg, LegacyKind::Ble, &l.ble_shifts_khz, l.snr_db, l.packets)?);
    Ok(rows)
}
