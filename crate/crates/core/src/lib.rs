//! Baseband models for an artificial-Doppler side channel between Wi-Fi and
//! BLE.
//!
//! Senders embed one bit per legacy packet as a small carrier-frequency
//! shift. A BLE receiver reads Wi-Fi shifts from the slicer bias its GFSK
//! demodulator shows on the Wi-Fi short training field; a Wi-Fi receiver
//! reads BLE shifts from where the BLE carrier lands in its per-subcarrier
//! channel estimate.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs; randomness comes from explicitly seeded streams.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod band;
pub mod ble_rx;
pub mod codec;
pub mod convcode;
pub mod dsk;
pub mod dsp;
mod error;
pub mod iq;
pub mod medium;
pub mod ofdm;
pub mod rng;
pub mod waveforms;
pub mod wifi_rx;

pub use error::{Error, Result};
pub use iq::IqBuffer;

pub use num_complex::Complex64;
