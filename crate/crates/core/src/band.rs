//! 2.4 GHz channel plan shared by both technologies.

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // method syntax on f64 needs it when std is absent
use num_traits::Float;


use crate::{Error, Result};

pub const WIFI_SAMPLE_RATE: f64 = 20e6;
pub const BLE_SAMPLE_RATE: f64 = 2e6;
pub const BLE_SYMBOL_RATE: f64 = 1e6;
pub const SUBCARRIER_SPACING: f64 = 312.5e3;
pub const BLE_CHANNEL_WIDTH: f64 = 2e6;
pub const BLE_CHANNEL_COUNT: u8 = 40;

/// Non-zero short-training-field subcarriers.
pub const STF_SUBCARRIERS: [i32; 12] = [-24, -20, -16, -12, -8, -4, 4, 8, 12, 16, 20, 24];

/// One-sided extent of the occupied OFDM band: 26 used subcarriers plus half a bin.
pub const WIFI_OCCUPIED_HALF_WIDTH: f64 = 26.5 * SUBCARRIER_SPACING;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WifiChannel(u8);

impl WifiChannel {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=14).contains(&index) {
            Ok(WifiChannel(index))
        } else {
            Err(Error::InvalidWifiChannel(index))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn center_hz(self) -> f64 {
        if self.0 == 14 {
            2484e6
        } else {
            2412e6 + 5e6 * (self.0 as f64 - 1.0)
        }
    }
}

impl fmt::Display for WifiChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "wifi{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BleChannel(u8);

impl BleChannel {
    pub fn new(index: u8) -> Result<Self> {
        if index < BLE_CHANNEL_COUNT {
            Ok(BleChannel(index))
        } else {
            Err(Error::InvalidBleChannel(index))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn center_hz(self) -> f64 {
        2404e6 + 2e6 * self.0 as f64
    }

    pub fn all() -> impl Iterator<Item = BleChannel> {
        (0..BLE_CHANNEL_COUNT).map(BleChannel)
    }
}

impl fmt::Display for BleChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ble{}", self.0)
    }
}

/// BLE center relative to the Wi-Fi center.
pub fn ble_offset_hz(wifi: WifiChannel, ble: BleChannel) -> f64 {
    ble.center_hz() - wifi.center_hz()
}

/// BLE carrier position in units of Wi-Fi subcarriers.
pub fn nominal_subcarrier(wifi: WifiChannel, ble: BleChannel) -> f64 {
    ble_offset_hz(wifi, ble) / SUBCARRIER_SPACING
}

/// BLE channels whose 2 MHz span intersects the occupied Wi-Fi band.
pub fn geometric_overlap(wifi: WifiChannel) -> Vec<BleChannel> {
    BleChannel::all()
        .filter(|&b| {
            let off = ble_offset_hz(wifi, b);
            off - BLE_CHANNEL_WIDTH / 2.0 < WIFI_OCCUPIED_HALF_WIDTH
                && off + BLE_CHANNEL_WIDTH / 2.0 > -WIFI_OCCUPIED_HALF_WIDTH
        })
        .collect()
}

/// STF subcarriers that land inside the BLE channel's 2 MHz span.
pub fn stf_subcarriers_in(wifi: WifiChannel, ble: BleChannel) -> Vec<i32> {
    let off = ble_offset_hz(wifi, ble);
    STF_SUBCARRIERS
        .iter()
        .copied()
        .filter(|&k| (k as f64 * SUBCARRIER_SPACING - off).abs() <= BLE_CHANNEL_WIDTH / 2.0 + 1e-6)
        .collect()
}

/// Mean frequency, relative to the BLE center, of the in-band STF tones.
///
/// With two equal tones the quadrature demodulator alternates between this
/// mean and the mean plus π, so the slicer bias flips exactly where a shift
/// moves this value across zero. A pair of shifts can only carry a bit
/// across that point if it straddles `-stf_mean_offset`.
pub fn stf_mean_offset_hz(wifi: WifiChannel, ble: BleChannel) -> Option<f64> {
    let tones = stf_subcarriers_in(wifi, ble);
    if tones.is_empty() {
        return None;
    }
    let off = ble_offset_hz(wifi, ble);
    let sum: f64 = tones.iter().map(|&k| k as f64 * SUBCARRIER_SPACING - off).sum();
    Some(sum / tones.len() as f64)
}

/// `true` when the in-band STF pattern is two tones whose mean frequency
/// sits between the two shifts of a pair, i.e. the GFSK bias test can
/// separate them. Tones at exactly the channel edge alias to the Nyquist
/// frequency of the 2 Msps stream and are counted as ambiguous.
pub fn w2b_separable(wifi: WifiChannel, ble: BleChannel, bit0_hz: f64, bit1_hz: f64) -> bool {
    let off = ble_offset_hz(wifi, ble);
    let tones = stf_subcarriers_in(wifi, ble);
    let at_edge = tones
        .iter()
        .any(|&k| ((k as f64 * SUBCARRIER_SPACING - off).abs() - BLE_CHANNEL_WIDTH / 2.0).abs() < 1.0);
    if tones.len() != 2 || at_edge {
        return false;
    }
    let mean = stf_mean_offset_hz(wifi, ble).unwrap_or(0.0);
    let (lo, hi) = if bit0_hz < bit1_hz { (bit0_hz, bit1_hz) } else { (bit1_hz, bit0_hz) };
    lo < -mean && -mean < hi && (-mean - lo).abs() > 1.0 && (hi + mean).abs() > 1.0
}

/// `true` when the two shifted carrier positions round to different
/// subcarriers on opposite sides of the nominal position, so an integer
/// spike location can tell them apart.
pub fn b2w_separable(wifi: WifiChannel, ble: BleChannel, bit0_hz: f64, bit1_hz: f64) -> bool {
    let nominal = nominal_subcarrier(wifi, ble);
    let i0 = (nominal + bit0_hz / SUBCARRIER_SPACING).round();
    let i1 = (nominal + bit1_hz / SUBCARRIER_SPACING).round();
    let in_range = |i: f64| i != 0.0 && i.abs() <= 26.0;
    in_range(i0) && in_range(i1) && (i0 < nominal) != (i1 < nominal) && (i0 < nominal) == (bit0_hz < bit1_hz)
}
