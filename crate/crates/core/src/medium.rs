//! Shared-band timeline and impairments.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // method syntax on f64 needs it when std is absent
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::band::WIFI_SAMPLE_RATE;
use crate::dsp;
use crate::rng;
use crate::{Error, IqBuffer, Result};

/// One waveform placed on the timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub buffer: IqBuffer,
    pub start_time: f64,
    /// Translation from baseband to the band center.
    pub freq_offset: f64,
    pub gain_db: f64,
    /// Two-sided occupied bandwidth, used for the in-band check.
    pub bandwidth: f64,
}

impl Emission {
    pub fn new(buffer: IqBuffer, start_time: f64, freq_offset: f64, bandwidth: f64) -> Self {
        Emission { buffer, start_time, freq_offset, gain_db: 0.0, bandwidth }
    }

    /// Offset taken from the buffer's nominal center relative to `band_center`.
    pub fn at_center(buffer: IqBuffer, start_time: f64, band_center: f64, bandwidth: f64) -> Self {
        let offset = buffer.center_freq() - band_center;
        Self::new(buffer, start_time, offset, bandwidth)
    }

    pub fn with_gain(mut self, gain_db: f64) -> Self {
        self.gain_db = gain_db;
        self
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.buffer.duration()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandTimeline {
    pub band_center: f64,
    pub sample_rate: f64,
    pub duration: f64,
    pub emissions: Vec<Emission>,
}

impl BandTimeline {
    pub fn new(band_center: f64, duration: f64) -> Self {
        BandTimeline { band_center, sample_rate: WIFI_SAMPLE_RATE, duration, emissions: Vec::new() }
    }

    pub fn push(&mut self, emission: Emission) {
        self.emissions.push(emission);
    }

    pub fn len(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index_of(&self, time: f64) -> usize {
        (time * self.sample_rate).round() as usize
    }
}

fn to_band_rate(buffer: &IqBuffer, fs: f64) -> Result<Vec<Complex64>> {
    let ratio = fs / buffer.sample_rate();
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 {
        return Err(Error::RateMismatch { from: buffer.sample_rate(), to: fs });
    }
    Ok(dsp::upsample(buffer.samples(), factor as usize))
}

/// Sum of all emissions, each resampled to the band rate, gained, translated
/// by its offset (on the global sample clock) and placed at its start time.
pub fn render(timeline: &BandTimeline) -> Result<IqBuffer> {
    let fs = timeline.sample_rate;
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); timeline.len()];
    for (index, e) in timeline.emissions.iter().enumerate() {
        if e.freq_offset.abs() + e.bandwidth / 2.0 > fs / 2.0 {
            return Err(Error::EmissionOutOfBounds { index, reason: "occupied band leaves the band span" });
        }
        if !(e.start_time >= 0.0) {
            return Err(Error::EmissionOutOfBounds { index, reason: "starts before the timeline" });
        }
        let samples = to_band_rate(&e.buffer, fs)?;
        let start = timeline.index_of(e.start_time);
        if start + samples.len() > out.len() {
            return Err(Error::EmissionOutOfBounds { index, reason: "ends after the timeline" });
        }
        let gain = 10f64.powf(e.gain_db / 20.0);
        for (i, &s) in samples.iter().enumerate() {
            let n = start + i;
            out[n] += s * dsp::phasor(e.freq_offset, fs, n) * gain;
        }
    }
    IqBuffer::new(out, fs, timeline.band_center)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentSpec {
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub inherent_cfo: f64,
    pub doppler: f64,
    pub gain_db: f64,
    pub rng_seed: u64,
    /// Trial index; selects an independent noise substream.
    pub stream: u64,
    /// Power the SNR refers to. `None` uses the occupied power of the
    /// impaired signal itself.
    pub reference_power: Option<f64>,
}

pub const MAX_INHERENT_CFO: f64 = 400.0;
pub const MAX_DOPPLER: f64 = 50.0;

impl ImpairmentSpec {
    pub fn noiseless() -> Self {
        ImpairmentSpec { snr_db: f64::INFINITY, inherent_cfo: 0.0, doppler: 0.0, gain_db: 0.0, rng_seed: 0, stream: 0, reference_power: None }
    }

    pub fn awgn(snr_db: f64, rng_seed: u64, stream: u64) -> Self {
        ImpairmentSpec { snr_db, rng_seed, stream, ..Self::noiseless() }
    }

    /// Oscillator CFO uniform in ±400 Hz and motion Doppler uniform in
    /// ±50 Hz, drawn from their own substream.
    pub fn with_random_offsets(mut self) -> Self {
        let mut r = rng::stream(self.rng_seed, rng::salt("medium.offsets"), self.stream);
        self.inherent_cfo = r.random_range(-MAX_INHERENT_CFO..=MAX_INHERENT_CFO);
        self.doppler = r.random_range(-MAX_DOPPLER..=MAX_DOPPLER);
        self
    }

    pub fn with_reference_power(mut self, power: f64) -> Self {
        self.reference_power = Some(power);
        self
    }
}

/// Mean power over samples that carry signal; silence does not dilute it.
pub fn occupied_power(samples: &[Complex64]) -> f64 {
    let peak = samples.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
    let floor = peak * 1e-9;
    let (sum, count) = samples
        .iter()
        .map(|s| s.norm_sqr())
        .filter(|&p| p > floor)
        .fold((0.0, 0usize), |(s, c), p| (s + p, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Frequency offset (CFO plus Doppler), gain, then circular Gaussian noise
/// at the requested SNR relative to the occupied signal power.
pub fn impair(sig: &IqBuffer, spec: &ImpairmentSpec) -> IqBuffer {
    let mut out = sig.shifted(spec.inherent_cfo + spec.doppler);
    if spec.gain_db != 0.0 {
        out.scale(10f64.powf(spec.gain_db / 20.0));
    }
    if spec.snr_db.is_finite() {
        let p = spec.reference_power.unwrap_or_else(|| occupied_power(out.samples()));
        let sigma = (p / 10f64.powf(spec.snr_db / 10.0) / 2.0).sqrt();
        let mut r = rng::stream(spec.rng_seed, rng::salt("medium.noise"), spec.stream);
        for s in out.samples_mut() {
            let re: f64 = r.sample(StandardNormal);
            let im: f64 = r.sample(StandardNormal);
            *s += Complex64::new(re, im) * sigma;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::{BleChannel, WifiChannel};
    use crate::ble_rx::{gfsk_demap, gfsk_extract, BleRxConfig};
    use crate::waveforms::{ble_channelize, gen_ble_packet_at, gen_wifi_frame, BlePacketSpec, WifiFrameSpec};
    use alloc::vec;

    fn tone(len: usize, f: f64) -> IqBuffer {
        IqBuffer::new((0..len).map(|n| dsp::phasor(f, 20e6, n)).collect(), 20e6, 2412e6).unwrap()
    }

    #[test]
    fn empty_timeline_renders_silence() {
        let out = render(&BandTimeline::new(2412e6, 50e-6)).unwrap();
        assert_eq!(out.len(), 1000);
        assert!(out.samples().iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn single_emission_is_zero_padded() {
        let e = tone(300, 1e6);
        let mut t = BandTimeline::new(2412e6, 50e-6);
        t.push(Emission::new(e.clone(), 0.0, 0.0, 2e6));
        let out = render(&t).unwrap();
        assert_eq!(&out.samples()[..300], e.samples());
        assert!(out.samples()[300..].iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn render_is_linear() {
        let a = Emission::new(tone(400, 1e6), 3e-6, 2e6, 2e6).with_gain(-3.0);
        let b = Emission::new(tone(500, -2e6), 10e-6, -4e6, 2e6);
        let mut ta = BandTimeline::new(2412e6, 60e-6);
        ta.push(a.clone());
        let mut tb = BandTimeline::new(2412e6, 60e-6);
        tb.push(b.clone());
        let mut tab = BandTimeline::new(2412e6, 60e-6);
        tab.push(a);
        tab.push(b);
        let (ra, rb, rab) = (render(&ta).unwrap(), render(&tb).unwrap(), render(&tab).unwrap());
        for i in 0..rab.len() {
            assert!((rab.samples()[i] - ra.samples()[i] - rb.samples()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn out_of_band_and_overlong_emissions_rejected() {
        let mut t = BandTimeline::new(2412e6, 50e-6);
        t.push(Emission::new(tone(100, 0.0), 0.0, 9.5e6, 2e6));
        assert!(matches!(render(&t), Err(Error::EmissionOutOfBounds { index: 0, .. })));
        let mut t = BandTimeline::new(2412e6, 5e-6);
        t.push(Emission::new(tone(200, 0.0), 0.0, 0.0, 2e6));
        assert!(render(&t).is_err());
        let mut t = BandTimeline::new(2412e6, 50e-6);
        t.push(Emission::new(IqBuffer::zeros(10, 3e6, 0.0).unwrap(), 0.0, 0.0, 2e6));
        assert!(matches!(render(&t), Err(Error::RateMismatch { .. })));
    }

    #[test]
    fn ble_packet_spans_several_wifi_frames() {
        let wifi = WifiChannel::new(1).unwrap();
        let ble = BleChannel::new(3).unwrap();
        let frame = gen_wifi_frame(&WifiFrameSpec::new(vec![false; 64], wifi)).unwrap();
        let pkt = gen_ble_packet_at(&BlePacketSpec::new(vec![true; 600], ble), 20e6).unwrap();
        let mut t = BandTimeline::new(wifi.center_hz(), 1e-3);
        for i in 0..7 {
            t.push(Emission::at_center(frame.clone(), i as f64 * 140e-6, wifi.center_hz(), 16.6e6));
        }
        t.push(Emission::at_center(pkt, 20e-6, wifi.center_hz(), 2e6));
        assert!(render(&t).is_ok());
        let (b0, b1) = (t.emissions[7].start_time, t.emissions[7].end_time());
        let hit = t.emissions[..7].iter().filter(|w| w.start_time < b1 && w.end_time() > b0).count();
        assert!(hit >= 3, "{hit}");
    }

    #[test]
    fn noiseless_spec_is_identity() {
        let x = tone(1000, 1.5e6);
        assert_eq!(impair(&x, &ImpairmentSpec::noiseless()), x);
    }

    #[test]
    fn noise_power_matches_snr() {
        let x = tone(200_000, 1e6);
        let y = impair(&x, &ImpairmentSpec::awgn(10.0, 42, 0));
        let noise: f64 = x.samples().iter().zip(y.samples()).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((noise - 0.1).abs() < 0.005, "{noise}");
    }

    #[test]
    fn fixed_reference_sets_noise_on_silence() {
        let x = IqBuffer::zeros(100_000, 20e6, 0.0).unwrap();
        let y = impair(&x, &ImpairmentSpec::awgn(10.0, 3, 0).with_reference_power(2.0));
        assert!((y.mean_power() - 0.2).abs() < 0.01, "{}", y.mean_power());
    }

    #[test]
    fn snr_ignores_silence() {
        let mut s = tone(20_000, 1e6).into_samples();
        s.extend(vec![Complex64::new(0.0, 0.0); 60_000]);
        let x = IqBuffer::new(s, 20e6, 0.0).unwrap();
        assert!((occupied_power(x.samples()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seeds_reproduce_and_streams_differ() {
        let x = tone(5000, 0.0);
        let a = impair(&x, &ImpairmentSpec::awgn(5.0, 9, 1));
        let b = impair(&x, &ImpairmentSpec::awgn(5.0, 9, 1));
        let c = impair(&x, &ImpairmentSpec::awgn(5.0, 9, 2));
        assert_eq!(a, b);
        let na: Vec<Complex64> = a.samples().iter().zip(x.samples()).map(|(p, q)| p - q).collect();
        let nc: Vec<Complex64> = c.samples().iter().zip(x.samples()).map(|(p, q)| p - q).collect();
        let cross: Complex64 = na.iter().zip(&nc).map(|(p, q)| p * q.conj()).sum();
        let norm = (dsp::energy(&na) * dsp::energy(&nc)).sqrt();
        assert!(cross.norm() / norm < 0.05);
    }

    #[test]
    fn random_offsets_stay_in_range() {
        for i in 0..200 {
            let s = ImpairmentSpec::awgn(20.0, 3, i).with_random_offsets();
            assert!(s.inherent_cfo.abs() <= 400.0 && s.doppler.abs() <= 50.0);
        }
    }

    #[test]
    fn inherent_cfo_does_not_change_demapping() {
        let wifi = WifiChannel::new(1).unwrap();
        let ble = BleChannel::new(3).unwrap();
        let cfg = BleRxConfig::default();
        for trial in 0..1000u32 {
            let bit = trial % 2 == 1;
            let shift = if bit { 100e3 } else { -130e3 };
            let payload: Vec<bool> = (0..64).map(|i| (i * 7 + trial) % 3 == 0).collect();
            let frame = gen_wifi_frame(&WifiFrameSpec::new(payload, wifi).with_shift(shift)).unwrap();
            let mut s = vec![Complex64::new(0.0, 0.0); 200];
            s.extend_from_slice(&frame.samples()[..600]);
            let wide = IqBuffer::new(s, 20e6, wifi.center_hz()).unwrap();
            let decide = |cfo: f64| {
                let spec = ImpairmentSpec { inherent_cfo: cfo, ..ImpairmentSpec::noiseless() };
                let e = gfsk_extract(&ble_channelize(&impair(&wide, &spec), ble).unwrap(), &cfg).unwrap().unwrap();
                gfsk_demap(&e.bits, cfg.eta)
            };
            assert_eq!(decide(400.0), decide(0.0));
            assert_eq!(decide(-400.0), bit);
        }
    }
}
