use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // method syntax on f64 needs it when std is absent
use num_traits::Float;

use crate::band::{BleChannel, BLE_SAMPLE_RATE, BLE_SYMBOL_RATE};
use crate::{Error, IqBuffer, Result};

/// Shift cap for BLE packets; the link tolerates 150 kHz of offset and the
/// side channel stays well inside it.
pub const BLE_MAX_SHIFT: f64 = 130e3;

/// Alternating preamble sent ahead of the payload for timing acquisition.
pub const BLE_PREAMBLE: [bool; 8] = [true, false, true, false, true, false, true, false];

const SLOT_SYMBOLS: usize = 625;
const GAUSSIAN_SPAN: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BlePacketSpec {
    pub payload_bits: Vec<bool>,
    pub channel: BleChannel,
    pub artificial_shift: f64,
    pub symbol_rate: f64,
    pub deviation: f64,
    pub gaussian_bt: f64,
}

impl BlePacketSpec {
    pub fn new(payload_bits: Vec<bool>, channel: BleChannel) -> Self {
        BlePacketSpec {
            payload_bits,
            channel,
            artificial_shift: 0.0,
            symbol_rate: BLE_SYMBOL_RATE,
            deviation: 250e3,
            gaussian_bt: 0.5,
        }
    }

    pub fn with_shift(mut self, shift_hz: f64) -> Self {
        self.artificial_shift = shift_hz;
        self
    }

    pub fn symbols(&self) -> usize {
        BLE_PREAMBLE.len() + self.payload_bits.len()
    }

    pub fn airtime(&self) -> f64 {
        self.symbols() as f64 / self.symbol_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.artificial_shift.abs() <= BLE_MAX_SHIFT) {
            return Err(Error::ShiftOutOfRange { shift_hz: self.artificial_shift, limit_hz: BLE_MAX_SHIFT });
        }
        if self.symbols() as f64 / self.symbol_rate > SLOT_SYMBOLS as f64 / BLE_SYMBOL_RATE + 1e-12 {
            return Err(Error::PayloadTooLong {
                bits: self.payload_bits.len(),
                capacity: SLOT_SYMBOLS - BLE_PREAMBLE.len(),
            });
        }
        if !(self.symbol_rate > 0.0) || self.deviation <= 0.0 || self.gaussian_bt <= 0.0 {
            return Err(Error::Config("BLE symbol rate, deviation and BT must be positive"));
        }
        Ok(())
    }
}

/// Gaussian-smoothed rectangular frequency pulse spanning three symbols,
/// normalized per polyphase branch so a constant symbol run lands exactly
/// on the nominal deviation.
pub fn gaussian_taps(sps: usize, bt: f64) -> Vec<f64> {
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * bt);
    let half = (GAUSSIAN_SPAN * sps) / 2;
    let mut taps: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let t = (i as f64 - half as f64) / sps as f64;
            let s = sigma * 2f64.sqrt();
            0.5 * (libm::erf((t + 0.5) / s) - libm::erf((t - 0.5) / s))
        })
        .collect();
    for phase in 0..sps {
        let idx: Vec<usize> = (phase..taps.len()).step_by(sps).collect();
        let sum: f64 = idx.iter().map(|&i| taps[i]).sum();
        for i in idx {
            taps[i] /= sum;
        }
    }
    taps
}

/// GFSK packet (preamble then payload) at 2 samples per symbol.
pub fn gen_ble_packet(spec: &BlePacketSpec) -> Result<IqBuffer> {
    gen_ble_packet_at(spec, BLE_SAMPLE_RATE)
}

/// GFSK packet at any sample rate that is an integer multiple of the symbol
/// rate. Symbol `k` is centered on sample `k * sps`, and the phase step from
/// sample `n` to `n + 1` is `2π f[n] / fs`.
pub fn gen_ble_packet_at(spec: &BlePacketSpec, sample_rate: f64) -> Result<IqBuffer> {
    spec.validate()?;
    let ratio = sample_rate / spec.symbol_rate;
    let sps = ratio.round() as usize;
    if sps < 2 || (ratio - sps as f64).abs() > 1e-9 {
        return Err(Error::RateMismatch { from: spec.symbol_rate, to: sample_rate });
    }
    let taps = gaussian_taps(sps, spec.gaussian_bt);
    let half = taps.len() / 2;
    let symbols: Vec<f64> = BLE_PREAMBLE
        .iter()
        .chain(&spec.payload_bits)
        .map(|&b| if b { 1.0 } else { -1.0 })
        .collect();
    let len = symbols.len() * sps;
    let mut freq = alloc::vec![0.0f64; len];
    for (k, &a) in symbols.iter().enumerate() {
        let center = k * sps;
        for (i, &t) in taps.iter().enumerate() {
            let n = center as isize + i as isize - half as isize;
            if n >= 0 && (n as usize) < len {
                freq[n as usize] += a * t;
            }
        }
    }
    let step = 2.0 * PI * spec.deviation / sample_rate;
    let mut phase = 0.0f64;
    let mut samples = Vec::with_capacity(len);
    for f in &freq {
        samples.push(Complex64::cis(phase));
        phase = (phase + step * f) % (2.0 * PI);
    }
    let packet = IqBuffer::new(samples, sample_rate, spec.channel.center_hz())?;
    Ok(packet.shifted(spec.artificial_shift))
}
