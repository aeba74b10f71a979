use crate::band::{BleChannel, BLE_SAMPLE_RATE, WIFI_SAMPLE_RATE};
use crate::dsp::{self, Fir};
use crate::{Error, IqBuffer, Result};

pub const CHANNELIZER_DECIMATION: usize = 10;
const CHANNEL_TAPS: usize = 161;
const CHANNEL_CUTOFF: f64 = 1.25e6;

/// Linear-phase low-pass for the BLE channel: flat to 1 MHz, at least 40 dB
/// down from 1.5 MHz. 161 taps keep the group delay at exactly 8 output
/// samples.
pub fn channel_filter() -> Fir {
    Fir::lowpass(CHANNEL_TAPS, CHANNEL_CUTOFF, WIFI_SAMPLE_RATE)
}

/// Mixes the BLE channel center to DC, low-passes and decimates a 20 Msps
/// stream down to 2 Msps. Output sample `m` lines up with input sample `10 m`.
pub fn ble_channelize(wideband: &IqBuffer, ble_channel: BleChannel) -> Result<IqBuffer> {
    if (wideband.sample_rate() - WIFI_SAMPLE_RATE).abs() > 1e-6 {
        return Err(Error::RateMismatch { from: wideband.sample_rate(), to: WIFI_SAMPLE_RATE });
    }
    let offset = ble_channel.center_hz() - wideband.center_freq();
    let span = wideband.sample_rate();
    if offset.abs() > span / 2.0 {
        return Err(Error::OutsideSpan { offset_hz: offset, span_hz: span });
    }
    let mut mixed = wideband.samples().to_vec();
    dsp::rotate_in_place(&mut mixed, -offset, span);
    let out = channel_filter().decimate(&mixed, CHANNELIZER_DECIMATION);
    IqBuffer::new(out, BLE_SAMPLE_RATE, ble_channel.center_hz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::WifiChannel;
    use crate::ble_rx::quad_demod;
    use crate::waveforms::{gen_wifi_frame, WifiFrameSpec};
    use alloc::vec::Vec;
    use num_complex::Complex64;

    #[test]
    fn filter_meets_mask() {
        let fir = channel_filter();
        for f in [0.0, 0.25e6, 0.5e6, 0.75e6, 1.0e6] {
            let g = fir.gain(f, 20e6);
            assert!((g - 1.0).abs() < 0.05, "passband {f}: {g}");
        }
        let mut f = 1.5e6;
        while f < 10e6 {
            let db = 20.0 * fir.gain(f, 20e6).log10();
            assert!(db < -40.0, "stopband {f}: {db} dB");
            f += 10e3;
        }
    }

    #[test]
    fn channel_center_tone_comes_out_at_dc() {
        let ch = BleChannel::new(5).unwrap();
        let wifi = WifiChannel::new(1).unwrap();
        let off = ch.center_hz() - wifi.center_hz();
        let tone: Vec<Complex64> = (0..20_000).map(|n| dsp::phasor(off, 20e6, n)).collect();
        let wide = IqBuffer::new(tone, 20e6, wifi.center_hz()).unwrap();
        let narrow = ble_channelize(&wide, ch).unwrap();
        assert_eq!(narrow.sample_rate(), 2e6);
        assert_eq!(narrow.center_freq(), 2414e6);
        let phi = quad_demod(&narrow);
        let inner = &phi[50..phi.len() - 50];
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!(mean.abs() < 1e-3);
    }

    #[test]
    fn rejects_channel_outside_span() {
        let wide = IqBuffer::zeros(100, 20e6, 2412e6).unwrap();
        assert!(ble_channelize(&wide, BleChannel::new(9).unwrap()).is_ok());
        assert!(matches!(ble_channelize(&wide, BleChannel::new(10).unwrap()), Err(Error::OutsideSpan { .. })));
        assert!(ble_channelize(&IqBuffer::zeros(100, 2e6, 2412e6).unwrap(), BleChannel::new(4).unwrap()).is_err());
    }

    #[test]
    fn stf_occupies_16_ble_samples() {
        let bits = alloc::vec![false; 100];
        let frame = gen_wifi_frame(&WifiFrameSpec::new(bits, WifiChannel::new(1).unwrap())).unwrap();
        let narrow = ble_channelize(&frame, BleChannel::new(3).unwrap()).unwrap();
        assert_eq!(narrow.len(), 200);
        assert_eq!(crate::ofdm::STF_LEN / CHANNELIZER_DECIMATION, 16);
    }

    #[test]
    fn stf_tones_in_channel_three_and_four() {
        // Energy of a clean STF after channelization: two in-band lines in
        // ch3. Channel 4 has none in band; the ±4 lines sit 1.25 MHz out, in
        // the filter's transition band.
        let bits = alloc::vec![false; 10];
        let frame = gen_wifi_frame(&WifiFrameSpec::new(bits, WifiChannel::new(1).unwrap())).unwrap();
        let stf = frame.slice(0..800);
        let mut periodic = Vec::new();
        for _ in 0..8 {
            periodic.extend_from_slice(&stf.samples()[..160]);
        }
        let wide = IqBuffer::new(periodic, 20e6, 2412e6).unwrap();
        let p3 = ble_channelize(&wide, BleChannel::new(3).unwrap()).unwrap();
        let p4 = ble_channelize(&wide, BleChannel::new(4).unwrap()).unwrap();
        let mid = |b: &IqBuffer| b.slice(20..100).mean_power();
        assert!((mid(&p3) - 2.0 / 12.0).abs() < 0.01, "{}", mid(&p3));
        let leak = 2.0 / 12.0 * channel_filter().gain(1.25e6, 20e6).powi(2);
        assert!((mid(&p4) - leak).abs() < 0.005, "{} vs {leak}", mid(&p4));
        assert!(mid(&p4) < mid(&p3) / 3.0);
    }
}
