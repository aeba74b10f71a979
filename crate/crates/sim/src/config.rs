//! Experiment configuration, read from TOML.
//!
//! Every key has a default, so an empty file is a valid W2B experiment.
//! Frequencies are in kHz and times in µs to keep files readable. Channel
//! tables use the BLE channel index as a string key, e.g. `"5" = [-100, 130]`.

use std::collections::BTreeMap;
use std::path::Path;

use dopplerfi_core::band::{BleChannel, WifiChannel};
use dopplerfi_core::ble_rx::BleRxConfig;
use dopplerfi_core::codec::Code;
use dopplerfi_core::dsk::{self, ShiftMap, ShiftPair};
use dopplerfi_core::waveforms::{BlePacketSpec, Mcs, WifiFrameLayout, BLE_MAX_SHIFT, WIFI_MAX_SHIFT};
use dopplerfi_core::wifi_rx::{ThresholdRule, WifiRxConfig};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    W2b,
    B2w,
    LegacyWifi,
    LegacyBle,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::W2b => "w2b",
            Direction::B2w => "b2w",
            Direction::LegacyWifi => "legacy_wifi",
            Direction::LegacyBle => "legacy_ble",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeChoice {
    #[default]
    None,
    H74,
    H1511,
}

impl From<CodeChoice> for Code {
    fn from(c: CodeChoice) -> Code {
        match c {
            CodeChoice::None => Code::None,
            CodeChoice::H74 => Code::H74,
            CodeChoice::H1511 => Code::H1511,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Side-channel payload bits per trial, one frame per trial.
    #[serde(default = "default_payload_bits")]
    pub payload_bits: usize,
    #[serde(default)]
    pub code: CodeChoice,
    #[serde(default = "default_wifi_channel")]
    pub wifi_channel: u8,
    /// Fraction of transmission opportunities the sender wins; stands in for
    /// contention with other networks.
    #[serde(default = "default_duty_cycle")]
    pub duty_cycle: f64,
    /// SNR grid in dB; `inf` means noiseless.
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    /// Extra attenuation of the side-channel sender, e.g. a wall.
    #[serde(default)]
    pub gain_db: f64,
    /// Random oscillator CFO (±400 Hz) and Doppler (±50 Hz) per packet.
    #[serde(default = "yes")]
    pub random_offsets: bool,
    #[serde(default)]
    pub hops: HopsConfig,
    #[serde(default)]
    pub shifts: ShiftsConfig,
    #[serde(default)]
    pub eta: EtaConfig,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    #[serde(default)]
    pub timing: TimingConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub legacy: LegacyConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopsConfig {
    /// Hop set; hops are uniform over it. Absent means all 40 channels.
    pub channels: Option<Vec<u8>>,
    /// Seed of the hop sequence; absent means derived from the trial seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftsConfig {
    /// BLE pair (bit 0, bit 1) in kHz.
    #[serde(default = "default_ble_pair")]
    pub ble_khz: [f64; 2],
    /// Default Wi-Fi pair (bit 0, bit 1) in kHz.
    #[serde(default = "default_wifi_pair")]
    pub wifi_khz: [f64; 2],
    /// Mirror the Wi-Fi pair on channels whose STF tones sit below the BLE
    /// center.
    #[serde(default = "yes")]
    pub adjust: bool,
    #[serde(default)]
    pub wifi_overrides: BTreeMap<String, [f64; 2]>,
}

impl Default for ShiftsConfig {
    fn default() -> Self {
        ShiftsConfig { ble_khz: default_ble_pair(), wifi_khz: default_wifi_pair(), adjust: true, wifi_overrides: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaConfig {
    /// Slicer-sum gate for channels without an override or calibration.
    #[serde(default = "default_eta")]
    pub default: u32,
    /// Set each channel's gate halfway between the noiseless ones counts of
    /// its two shifts.
    #[serde(default = "yes")]
    pub calibrate: bool,
    #[serde(default)]
    pub overrides: BTreeMap<String, u32>,
}

impl Default for EtaConfig {
    fn default() -> Self {
        EtaConfig { default: default_eta(), calibrate: true, overrides: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiRule {
    MeanStd,
    MedianMad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    #[serde(default = "default_rssi_threshold")]
    pub rssi_threshold: f64,
    #[serde(default = "default_csi_rule")]
    pub csi_rule: CsiRule,
    #[serde(default = "default_csi_k")]
    pub csi_k: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig { rssi_threshold: default_rssi_threshold(), csi_rule: default_csi_rule(), csi_k: default_csi_k() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    #[serde(default = "default_wifi_airtime")]
    pub wifi_airtime_us: f64,
    #[serde(default = "default_wifi_interval")]
    pub wifi_interval_us: f64,
    /// Legacy payload carried by every Wi-Fi frame (BPSK 1/2).
    #[serde(default = "default_wifi_legacy_bits")]
    pub wifi_payload_bits: usize,
    /// Legacy payload carried by every BLE packet.
    #[serde(default = "default_ble_legacy_bits")]
    pub ble_payload_bits: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            wifi_airtime_us: default_wifi_airtime(),
            wifi_interval_us: default_wifi_interval(),
            wifi_payload_bits: default_wifi_legacy_bits(),
            ble_payload_bits: default_ble_legacy_bits(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Symmetric shift magnitudes in kHz; each point uses (−s, +s) for the
    /// sending side. Absent means the configured shift map.
    pub shifts_khz: Option<Vec<f64>>,
    /// Distances in meters, mapped to SNR by `path_loss`. Overrides `snr_db`.
    pub distances_m: Option<Vec<f64>>,
    #[serde(default)]
    pub path_loss: PathLoss,
}

/// SNR(d) = ref_snr_db − 10·exponent·log10(d / ref_distance_m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLoss {
    #[serde(default = "default_ref_snr")]
    pub ref_snr_db: f64,
    #[serde(default = "default_ref_distance")]
    pub ref_distance_m: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss { ref_snr_db: default_ref_snr(), ref_distance_m: default_ref_distance(), exponent: default_exponent() }
    }
}

impl PathLoss {
    pub fn snr_at(&self, distance_m: f64) -> f64 {
        self.ref_snr_db - 10.0 * self.exponent * (distance_m / self.ref_distance_m).log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegacyConfig {
    #[serde(default = "default_legacy_packets")]
    pub packets: usize,
    #[serde(default = "default_legacy_snr")]
    pub snr_db: f64,
    #[serde(default = "default_legacy_wifi_shifts")]
    pub wifi_shifts_khz: Vec<f64>,
    #[serde(default = "default_legacy_ble_shifts")]
    pub ble_shifts_khz: Vec<f64>,
}

impl Default for LegacyConfig {
    fn default() -> Self {
        LegacyConfig {
            packets: default_legacy_packets(),
            snr_db: default_legacy_snr(),
            wifi_shifts_khz: default_legacy_wifi_shifts(),
            ble_shifts_khz: default_legacy_ble_shifts(),
        }
    }
}

fn default_direction() -> Direction {
    Direction::W2b
}
fn default_seed() -> u64 {
    1
}
fn default_trials() -> usize {
    10
}
fn default_payload_bits() -> usize {
    64
}
fn default_wifi_channel() -> u8 {
    1
}
fn default_duty_cycle() -> f64 {
    1.0
}
fn default_snr() -> Vec<f64> {
    vec![f64::INFINITY]
}
fn yes() -> bool {
    true
}
fn default_ble_pair() -> [f64; 2] {
    [-80.0, 80.0]
}
fn default_wifi_pair() -> [f64; 2] {
    [-130.0, 100.0]
}
fn default_eta() -> u32 {
    8
}
fn default_rssi_threshold() -> f64 {
    BleRxConfig::default().rssi_threshold
}
fn default_csi_rule() -> CsiRule {
    CsiRule::MeanStd
}
fn default_csi_k() -> f64 {
    3.0
}
fn default_wifi_airtime() -> f64 {
    100.0
}
fn default_wifi_interval() -> f64 {
    40.0
}
fn default_wifi_legacy_bits() -> usize {
    400
}
fn default_ble_legacy_bits() -> usize {
    368
}
fn default_ref_snr() -> f64 {
    30.0
}
fn default_ref_distance() -> f64 {
    1.0
}
fn default_exponent() -> f64 {
    2.0
}
fn default_legacy_packets() -> usize {
    10_000
}
fn default_legacy_snr() -> f64 {
    25.0
}
fn default_legacy_wifi_shifts() -> Vec<f64> {
    vec![0.0, 100.0, 130.0, 150.0, 700.0]
}
fn default_legacy_ble_shifts() -> Vec<f64> {
    vec![0.0, 80.0, 100.0]
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn ble_key(key: &str) -> Result<BleChannel> {
    let i: u8 = key.trim().parse().map_err(|_| bad(format!("`{key}` is not a BLE channel index")))?;
    Ok(BleChannel::new(i)?)
}

fn pair_hz(p: [f64; 2]) -> ShiftPair {
    ShiftPair::new(p[0] * 1e3, p[1] * 1e3)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_owned(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn wifi(&self) -> Result<WifiChannel> {
        Ok(WifiChannel::new(self.wifi_channel)?)
    }

    pub fn code(&self) -> Code {
        self.code.into()
    }

    pub fn hop_set(&self) -> Result<Vec<BleChannel>> {
        match &self.hops.channels {
            Some(list) => list.iter().map(|&c| Ok(BleChannel::new(c)?)).collect(),
            None => Ok(BleChannel::all().collect()),
        }
    }

    pub fn wifi_period(&self) -> f64 {
        (self.timing.wifi_airtime_us + self.timing.wifi_interval_us) * 1e-6
    }

    pub fn wifi_layout(&self) -> Result<WifiFrameLayout> {
        Ok(WifiFrameLayout::for_airtime(self.timing.wifi_airtime_us * 1e-6)?)
    }

    /// Shift map with the configured pairs, mirroring and overrides.
    pub fn shift_map(&self) -> Result<ShiftMap> {
        let mut map = ShiftMap { ble: pair_hz(self.shifts.ble_khz), wifi_default: pair_hz(self.shifts.wifi_khz), ..ShiftMap::default() };
        if self.shifts.adjust {
            map = map.mirrored_below(self.wifi()?);
        }
        for (key, &p) in &self.shifts.wifi_overrides {
            map.wifi_overrides.insert(ble_key(key)?, pair_hz(p));
        }
        Ok(map)
    }

    pub fn eta_overrides(&self) -> Result<BTreeMap<BleChannel, u32>> {
        self.eta.overrides.iter().map(|(k, &v)| Ok((ble_key(k)?, v))).collect()
    }

    pub fn ble_rx(&self) -> BleRxConfig {
        BleRxConfig { rssi_threshold: self.receiver.rssi_threshold, eta: self.eta.default, ..BleRxConfig::default() }
    }

    pub fn wifi_rx(&self, nominal_index: f64) -> WifiRxConfig {
        let threshold = match self.receiver.csi_rule {
            CsiRule::MeanStd => ThresholdRule::MeanStd(self.receiver.csi_k),
            CsiRule::MedianMad => ThresholdRule::MedianMad(self.receiver.csi_k),
        };
        WifiRxConfig { threshold, ..WifiRxConfig::with_nominal(nominal_index) }
    }

    /// SNR grid after the distance mapping, paired with the distance.
    pub fn snr_points(&self) -> Vec<(f64, Option<f64>)> {
        match &self.sweep.distances_m {
            Some(d) => d.iter().map(|&m| (self.sweep.path_loss.snr_at(m), Some(m))).collect(),
            None => self.snr_db.iter().map(|&s| (s, None)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(bad("trials must be at least 1"));
        }
        if self.payload_bits == 0 {
            return Err(bad("payload_bits must be positive"));
        }
        let k = self.code().k();
        if !self.payload_bits.is_multiple_of(k) {
            return Err(bad(format!("payload_bits {} is not a multiple of the code's {k} data bits", self.payload_bits)));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(bad("duty_cycle must lie in (0, 1]"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(bad("snr_db must be a non-empty list of numbers"));
        }
        if !self.gain_db.is_finite() {
            return Err(bad("gain_db must be finite"));
        }
        let wifi = self.wifi()?;
        let hops = self.hop_set()?;
        if hops.is_empty() {
            return Err(bad("hop set is empty"));
        }
        let overlap = dsk::overlap_set(wifi);
        if matches!(self.direction, Direction::W2b | Direction::B2w) && !hops.iter().any(|c| overlap.contains(c)) {
            return Err(bad(format!("no hop channel overlaps Wi-Fi channel {}", wifi.index())));
        }
        let map = self.shift_map()?;
        map.validate()?;
        for pair in core::iter::once(map.wifi_default).chain(map.wifi_overrides.values().copied()) {
            if pair.bit0.abs().max(pair.bit1.abs()) > WIFI_MAX_SHIFT {
                return Err(bad("Wi-Fi shift exceeds the 625 kHz CFO range"));
            }
        }
        if map.ble.bit0.abs().max(map.ble.bit1.abs()) > BLE_MAX_SHIFT {
            return Err(bad("BLE shift exceeds 130 kHz"));
        }
        self.eta_overrides()?;
        if self.eta.default > 16 || self.eta.overrides.values().any(|&e| e > 16) {
            return Err(bad("eta must not exceed the 16-sample window"));
        }
        if !(self.timing.wifi_interval_us >= 0.0) {
            return Err(bad("wifi_interval_us must be non-negative"));
        }
        let layout = self.wifi_layout()?;
        let capacity = layout.capacity(Mcs::Bpsk12);
        if self.timing.wifi_payload_bits > capacity {
            return Err(bad(format!("wifi_payload_bits {} exceeds the frame capacity {capacity}", self.timing.wifi_payload_bits)));
        }
        let ble = BlePacketSpec::new(vec![false; self.timing.ble_payload_bits], hops[0]);
        ble.validate()?;
        // A slot's packet must end before the next slot's first CSI window.
        if ble.airtime() > dsk::SLOT_DURATION - crate::experiment::SLOT_LEAD {
            return Err(bad("BLE packet leaves no gap before the next slot"));
        }
        if let Some(s) = &self.sweep.shifts_khz {
            if s.is_empty() {
                return Err(bad("sweep.shifts_khz must not be empty"));
            }
            let limit = match self.direction {
                Direction::W2b => WIFI_MAX_SHIFT / 1e3,
                Direction::LegacyWifi => f64::INFINITY,
                Direction::B2w | Direction::LegacyBle => BLE_MAX_SHIFT / 1e3,
            };
            // Below the design separation is allowed: sweeps chart how the
            // error rate degrades there.
            if s.iter().any(|v| !(v.abs() <= limit) || *v == 0.0 && matches!(self.direction, Direction::W2b | Direction::B2w)) {
                return Err(bad("sweep shift out of range"));
            }
        }
        if let Some(d) = &self.sweep.distances_m {
            if d.is_empty() || d.iter().any(|m| !(*m > 0.0)) {
                return Err(bad("sweep.distances_m must be a non-empty list of positive distances"));
            }
        }
        if !(self.sweep.path_loss.ref_distance_m > 0.0) || !(self.sweep.path_loss.exponent > 0.0) {
            return Err(bad("path_loss needs a positive reference distance and exponent"));
        }
        if self.legacy.packets == 0 {
            return Err(bad("legacy.packets must be positive"));
        }
        if self.legacy.wifi_shifts_khz.is_empty() || self.legacy.ble_shifts_khz.is_empty() {
            return Err(bad("legacy shift lists must not be empty"));
        }
        if self.legacy.ble_shifts_khz.iter().any(|v| !(v.abs() <= BLE_MAX_SHIFT / 1e3)) {
            return Err(bad("legacy BLE shift exceeds 130 kHz"));
        }
        Ok(())
    }
}
