//! Transmit-side waveform generation and the wideband-to-BLE channelizer.

mod ble;
mod channelize;
mod wifi;

pub use ble::{gen_ble_packet, gen_ble_packet_at, gaussian_taps, BlePacketSpec, BLE_MAX_SHIFT, BLE_PREAMBLE};
pub use channelize::{ble_channelize, channel_filter, CHANNELIZER_DECIMATION};
pub use wifi::{gen_wifi_frame, Mcs, WifiFrameLayout, WifiFrameSpec, WIFI_MAX_SHIFT};

pub use crate::iq::apply_freq_shift;
