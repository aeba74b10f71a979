use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // method syntax on f64 needs it when std is absent
use num_traits::Float;

use crate::band::{WifiChannel, WIFI_SAMPLE_RATE};
use crate::convcode;
use crate::ofdm::{self, PREAMBLE_LEN, SYMBOL_LEN};
use crate::{Error, IqBuffer, Result};

/// Largest shift the two-stage CFO estimator can undo.
pub const WIFI_MAX_SHIFT: f64 = 625e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mcs {
    /// BPSK, rate 1/2 (6 Mb/s).
    #[default]
    Bpsk12,
    /// QPSK, rate 1/2 (12 Mb/s).
    Qpsk12,
}

impl Mcs {
    pub fn bits_per_subcarrier(self) -> usize {
        match self {
            Mcs::Bpsk12 => 1,
            Mcs::Qpsk12 => 2,
        }
    }

    pub fn coded_bits_per_symbol(self) -> usize {
        48 * self.bits_per_subcarrier()
    }

    /// Maps coded bits to one constellation point (unit average energy).
    pub fn map(self, bits: &[bool]) -> Complex64 {
        let pm = |b: bool| if b { 1.0 } else { -1.0 };
        match self {
            Mcs::Bpsk12 => Complex64::new(pm(bits[0]), 0.0),
            Mcs::Qpsk12 => Complex64::new(pm(bits[0]), pm(bits[1])) / 2f64.sqrt(),
        }
    }

    /// Hard decisions for one equalized point.
    pub fn demap(self, point: Complex64, out: &mut Vec<bool>) {
        out.push(point.re > 0.0);
        if self == Mcs::Qpsk12 {
            out.push(point.im > 0.0);
        }
    }
}

/// Sample layout of a frame with a given airtime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WifiFrameLayout {
    pub payload_symbols: usize,
}

impl WifiFrameLayout {
    pub fn for_airtime(airtime_s: f64) -> Result<Self> {
        let total = (airtime_s * WIFI_SAMPLE_RATE).round() as usize;
        if total < PREAMBLE_LEN + SYMBOL_LEN {
            return Err(Error::Config("Wi-Fi airtime too short for preamble plus one symbol"));
        }
        Ok(WifiFrameLayout { payload_symbols: (total - PREAMBLE_LEN) / SYMBOL_LEN })
    }

    pub fn len(&self) -> usize {
        PREAMBLE_LEN + self.payload_symbols * SYMBOL_LEN
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Payload bits that fit once the encoder tail is accounted for.
    pub fn capacity(&self, mcs: Mcs) -> usize {
        (self.payload_symbols * mcs.coded_bits_per_symbol() / 2).saturating_sub(convcode::TAIL_BITS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WifiFrameSpec {
    pub payload_bits: Vec<bool>,
    pub mcs: Mcs,
    pub channel: WifiChannel,
    /// Artificial carrier shift in Hz.
    pub artificial_shift: f64,
    /// Total frame airtime in seconds.
    pub airtime: f64,
}

impl WifiFrameSpec {
    pub fn new(payload_bits: Vec<bool>, channel: WifiChannel) -> Self {
        WifiFrameSpec { payload_bits, mcs: Mcs::Bpsk12, channel, artificial_shift: 0.0, airtime: 100e-6 }
    }

    pub fn with_shift(mut self, shift_hz: f64) -> Self {
        self.artificial_shift = shift_hz;
        self
    }

    pub fn layout(&self) -> Result<WifiFrameLayout> {
        WifiFrameLayout::for_airtime(self.airtime)
    }

    pub fn validate(&self) -> Result<WifiFrameLayout> {
        if !(self.artificial_shift.abs() <= WIFI_MAX_SHIFT) {
            return Err(Error::ShiftOutOfRange { shift_hz: self.artificial_shift, limit_hz: WIFI_MAX_SHIFT });
        }
        let layout = self.layout()?;
        let capacity = layout.capacity(self.mcs);
        if self.payload_bits.len() > capacity {
            return Err(Error::PayloadTooLong { bits: self.payload_bits.len(), capacity });
        }
        Ok(layout)
    }
}

/// STF, LTF and convolutionally coded payload symbols at 20 Msps with the
/// artificial shift applied as a rotation.
///
/// The payload is zero-padded to the frame capacity and scrambled before
/// coding, so every symbol looks random. Each section is built at unit
/// average power by construction; OFDM peaks exceed 1.0.
pub fn gen_wifi_frame(spec: &WifiFrameSpec) -> Result<IqBuffer> {
    gen_unshifted(spec).map(|frame| frame.shifted(spec.artificial_shift))
}

fn gen_unshifted(spec: &WifiFrameSpec) -> Result<IqBuffer> {
    let layout = spec.validate()?;
    let mut data = spec.payload_bits.clone();
    data.resize(layout.capacity(spec.mcs), false);
    ofdm::scramble(&mut data);
    let coded = convcode::encode(&data);
    let per_symbol = spec.mcs.coded_bits_per_symbol();
    debug_assert_eq!(coded.len(), layout.payload_symbols * per_symbol);

    let mut samples = Vec::with_capacity(layout.len());
    samples.extend(ofdm::stf());
    samples.extend(ofdm::ltf());
    let bps = spec.mcs.bits_per_subcarrier();
    for (s, chunk) in coded.chunks(per_symbol).enumerate() {
        let points: Vec<Complex64> = chunk.chunks(bps).map(|b| spec.mcs.map(b)).collect();
        samples.extend_from_slice(&ofdm::data_symbol(&points, s));
    }
    IqBuffer::new(samples, WIFI_SAMPLE_RATE, spec.channel.center_hz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp;
    use core::f64::consts::PI;

    fn spec(shift: f64) -> WifiFrameSpec {
        let bits = (0..400).map(|i| i % 3 == 0).collect();
        WifiFrameSpec::new(bits, WifiChannel::new(1).unwrap()).with_shift(shift)
    }

    #[test]
    fn default_frame_fills_100_us() {
        let f = gen_wifi_frame(&spec(0.0)).unwrap();
        assert_eq!(f.len(), 2000);
        assert_eq!(f.sample_rate(), 20e6);
        assert!((f.mean_power() - 1.0).abs() < 0.03, "{}", f.mean_power());
        assert_eq!(spec(0.0).layout().unwrap().capacity(Mcs::Bpsk12), 498);
        assert_eq!(spec(0.0).layout().unwrap().capacity(Mcs::Qpsk12), 1002);
    }

    #[test]
    fn unshifted_stf_repeats_every_16_samples() {
        let f = gen_wifi_frame(&spec(0.0)).unwrap();
        let x = f.samples();
        for n in 0..144 {
            assert!((x[n + 16] - x[n]).norm() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn shifted_stf_autocorrelation_angle() {
        let f = gen_wifi_frame(&spec(100e3)).unwrap();
        let angle = dsp::lagged_correlation(f.samples(), 16, 0..144).arg();
        assert!((angle - 2.0 * PI * 100e3 * 16.0 / 20e6).abs() < 1e-9);
        assert!((angle - 0.50265).abs() < 1e-5);
    }

    #[test]
    fn stf_spectrum_has_twelve_lines_spaced_by_four() {
        let f = gen_wifi_frame(&spec(0.0)).unwrap();
        let spectrum = dsp::fft(&f.samples()[..64]);
        let peak = spectrum.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let nonzero: Vec<i32> = (-32..32).filter(|&k| spectrum[dsp::bin(k, 64)].norm() > peak * 1e-3).collect();
        assert_eq!(nonzero, alloc::vec![-24, -20, -16, -12, -8, -4, 4, 8, 12, 16, 20, 24]);
        for k in -32..32 {
            if !nonzero.contains(&k) {
                let rel_db = 20.0 * (spectrum[dsp::bin(k, 64)].norm() / peak).max(1e-30).log10();
                assert!(rel_db < -60.0);
            }
        }
    }

    #[test]
    fn rejects_oversized_payload_and_shift() {
        let mut s = spec(0.0);
        s.payload_bits = alloc::vec![true; 499];
        assert!(matches!(gen_wifi_frame(&s), Err(Error::PayloadTooLong { capacity: 498, .. })));
        assert!(matches!(gen_wifi_frame(&spec(700e3)), Err(Error::ShiftOutOfRange { .. })));
    }

    #[test]
    fn qpsk_frame_generates() {
        let mut s = spec(0.0);
        s.mcs = Mcs::Qpsk12;
        s.payload_bits = alloc::vec![true; 1002];
        assert_eq!(gen_wifi_frame(&s).unwrap().len(), 2000);
    }
}
