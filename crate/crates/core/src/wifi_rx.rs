//! Wi-Fi receive chain: preamble sync, two-stage CFO correction, LTF channel
//! estimate and payload decode, plus the CSI extractor and demapper that read
//! BLE shifts from where the BLE carrier disturbs the channel estimate.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // method syntax on f64 needs it when std is absent
use num_traits::Float;

use crate::band::WIFI_SAMPLE_RATE;
use crate::convcode;
use crate::ofdm::{self, CP_LEN, FFT_LEN, LTF1_START, LTF2_START, PREAMBLE_LEN, STF_LEN, STF_PERIOD, SYMBOL_LEN};
use crate::waveforms::Mcs;
use crate::{dsp, Error, IqBuffer, Result};

const SYNC_WINDOW: usize = 48;
const SYNC_TRIGGER: f64 = 0.6;
const PLATEAU_FRACTION: f64 = 0.9;
const LTF_SEARCH: isize = 32;

/// Normalized delay-16 correlation |P|² / (R₀ R₁) over a sliding window.
fn autocorr_metric(x: &[Complex64]) -> Vec<f64> {
    let lag = STF_PERIOD;
    let w = SYNC_WINDOW;
    if x.len() < lag + w {
        return Vec::new();
    }
    let n_out = x.len() - lag - w + 1;
    let mut p: Complex64 = (0..w).map(|m| x[m + lag] * x[m].conj()).sum();
    let mut r0: f64 = (0..w).map(|m| x[m].norm_sqr()).sum();
    let mut r1: f64 = (0..w).map(|m| x[m + lag].norm_sqr()).sum();
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out {
        let denom = r0 * r1;
        out.push(if denom > 1e-24 { (p.norm_sqr() / denom).min(1.0) } else { 0.0 });
        if n + 1 < n_out {
            p += x[n + w + lag] * x[n + w].conj() - x[n + lag] * x[n].conj();
            r0 += x[n + w].norm_sqr() - x[n].norm_sqr();
            r1 += x[n + w + lag].norm_sqr() - x[n + lag].norm_sqr();
        }
    }
    out
}

fn coarse_angle(x: &[Complex64]) -> f64 {
    dsp::lagged_correlation(x, STF_PERIOD, STF_PERIOD..STF_LEN - STF_PERIOD).arg()
}

/// Frame start: delay-16 autocorrelation metric, first sample above 90% of
/// the plateau peak, then refined by cross-correlating against the known LTF
/// symbol after a coarse CFO correction.
pub fn detect_and_sync(sig: &IqBuffer) -> Option<usize> {
    detect_and_sync_from(sig, 0)
}

pub fn detect_and_sync_from(sig: &IqBuffer, from: usize) -> Option<usize> {
    let x = sig.samples();
    if from >= x.len() {
        return None;
    }
    let m = autocorr_metric(&x[from..]);
    let trigger = m.iter().position(|&v| v > SYNC_TRIGGER)?;
    let plateau_end = (trigger + STF_LEN - STF_PERIOD - SYNC_WINDOW).min(m.len());
    let peak = m[trigger..plateau_end].iter().copied().fold(0.0, f64::max);
    let coarse = from + trigger + m[trigger..plateau_end].iter().position(|&v| v >= PLATEAU_FRACTION * peak).unwrap_or(0);
    Some(refine_with_ltf(x, coarse).unwrap_or(coarse))
}

fn refine_with_ltf(x: &[Complex64], coarse: usize) -> Option<usize> {
    if coarse + PREAMBLE_LEN + LTF_SEARCH as usize > x.len() {
        return None;
    }
    let cfo = coarse_angle(&x[coarse..coarse + STF_LEN]) * WIFI_SAMPLE_RATE / (2.0 * PI * STF_PERIOD as f64);
    let reference = ofdm::ltf_symbol();
    let score = |start: usize| -> f64 {
        [LTF1_START, LTF2_START]
            .iter()
            .map(|&off| {
                (0..FFT_LEN)
                    .map(|i| {
                        let n = start + off + i;
                        x[n] * dsp::phasor(-cfo, WIFI_SAMPLE_RATE, n) * reference[i].conj()
                    })
                    .sum::<Complex64>()
                    .norm()
            })
            .sum()
    };
    (-LTF_SEARCH..=LTF_SEARCH)
        .map(|d| coarse as isize + d)
        .filter(|&s| s >= 0 && s as usize + PREAMBLE_LEN <= x.len())
        .map(|s| (s as usize, score(s as usize)))
        .fold(None, |best: Option<(usize, f64)>, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
        .map(|b| b.0)
}

/// Two-stage CFO estimate of a synced frame: delay-16 on the STF (±625 kHz
/// range), then delay-64 on the LTF after removing the coarse part
/// (±156.25 kHz range).
pub fn estimate_cfo(frame: &IqBuffer) -> f64 {
    let x = frame.samples();
    let fs = frame.sample_rate();
    if x.len() < PREAMBLE_LEN {
        return 0.0;
    }
    let coarse = coarse_angle(x) * fs / (2.0 * PI * STF_PERIOD as f64);
    let fine_angle: Complex64 = (LTF1_START..LTF1_START + FFT_LEN)
        .map(|n| {
            let a = x[n + FFT_LEN] * dsp::phasor(-coarse, fs, n + FFT_LEN);
            let b = x[n] * dsp::phasor(-coarse, fs, n);
            a * b.conj()
        })
        .sum();
    coarse + fine_angle.arg() * fs / (2.0 * PI * FFT_LEN as f64)
}

pub fn compensate(frame: &IqBuffer, cfo_hat: f64) -> IqBuffer {
    frame.shifted(-cfo_hat)
}

/// Channel estimate on the 52 used subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiVector {
    /// Ordered by subcarrier: −26..=−1 then 1..=26.
    pub csi: Vec<Complex64>,
    pub packet_time: f64,
}

impl CsiVector {
    pub fn new(csi: Vec<Complex64>, packet_time: f64) -> Self {
        assert_eq!(csi.len(), ofdm::USED_SUBCARRIERS);
        CsiVector { csi, packet_time }
    }

    pub fn subcarriers() -> impl Iterator<Item = i32> + Clone {
        ofdm::used_subcarriers()
    }

    pub fn position(k: i32) -> Option<usize> {
        match k {
            -26..=-1 => Some((k + 26) as usize),
            1..=26 => Some((k + 25) as usize),
            _ => None,
        }
    }

    pub fn get(&self, k: i32) -> Option<Complex64> {
        Self::position(k).map(|i| self.csi[i])
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.csi.iter().map(|c| c.norm()).collect()
    }

    pub fn scaled(&self, gain: f64) -> CsiVector {
        CsiVector { csi: self.csi.iter().map(|c| c * gain).collect(), packet_time: self.packet_time }
    }
}

/// CSI[k] = Y[k] / L[k] averaged over the two LTF symbols of a compensated,
/// synced frame.
pub fn estimate_csi(frame: &IqBuffer) -> CsiVector {
    estimate_csi_at(frame, 0.0)
}

pub fn estimate_csi_at(frame: &IqBuffer, packet_time: f64) -> CsiVector {
    let x = frame.samples();
    let y1 = ofdm::fft_symbol(&x[LTF1_START..LTF1_START + FFT_LEN]);
    let y2 = ofdm::fft_symbol(&x[LTF2_START..LTF2_START + FFT_LEN]);
    let csi = ofdm::used_subcarriers()
        .map(|k| {
            let b = dsp::bin(k, FFT_LEN);
            (y1[b] + y2[b]) / (2.0 * ofdm::ltf_value(k))
        })
        .collect();
    CsiVector::new(csi, packet_time)
}

/// Payload bits of a compensated, synced frame: zero-forcing with the CSI,
/// per-symbol common phase from the pilots, hard demapping, Viterbi and
/// descrambling.
pub fn decode_payload(frame: &IqBuffer, csi: &CsiVector, mcs: Mcs, data_len: usize) -> Vec<bool> {
    let x = frame.samples();
    let symbols = (x.len().saturating_sub(PREAMBLE_LEN)) / SYMBOL_LEN;
    let mut coded = Vec::with_capacity(symbols * mcs.coded_bits_per_symbol());
    for s in 0..symbols {
        let start = PREAMBLE_LEN + s * SYMBOL_LEN + CP_LEN;
        let y = ofdm::fft_symbol(&x[start..start + FFT_LEN]);
        let eq = |k: i32| -> Complex64 {
            let h = csi.get(k).unwrap_or(Complex64::new(1.0, 0.0));
            if h.norm_sqr() > 1e-18 {
                y[dsp::bin(k, FFT_LEN)] / h
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        let pol = ofdm::pilot_polarity(s + 1);
        let pilot: Complex64 = ofdm::PILOT_SUBCARRIERS
            .iter()
            .zip(ofdm::PILOT_VALUES)
            .map(|(&k, v)| eq(k) * (v * pol))
            .sum();
        let derotate = Complex64::cis(-pilot.arg());
        for k in ofdm::data_subcarriers() {
            mcs.demap(eq(k) * derotate, &mut coded);
        }
    }
    let capacity = (coded.len() / 2).saturating_sub(convcode::TAIL_BITS);
    let mut data = convcode::decode(&coded, capacity);
    ofdm::scramble(&mut data);
    data.truncate(data_len);
    data
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegacyReception {
    pub start: usize,
    pub cfo_hat: f64,
    pub csi: CsiVector,
    pub bits: Vec<bool>,
}

/// Full legacy receive of the first frame in `sig`.
pub fn receive_legacy(sig: &IqBuffer, mcs: Mcs, payload_symbols: usize, data_len: usize) -> Option<LegacyReception> {
    let start = detect_and_sync(sig)?;
    receive_at(sig, start, mcs, payload_symbols, data_len)
}

/// Legacy receive of a frame whose start is already known.
pub fn receive_at(sig: &IqBuffer, start: usize, mcs: Mcs, payload_symbols: usize, data_len: usize) -> Option<LegacyReception> {
    let end = start + PREAMBLE_LEN + payload_symbols * SYMBOL_LEN;
    if end > sig.len() {
        return None;
    }
    let frame = sig.slice(start..end);
    let cfo_hat = estimate_cfo(&frame);
    let frame = compensate(&frame, cfo_hat);
    let csi = estimate_csi_at(&frame, start as f64 / sig.sample_rate());
    let bits = decode_payload(&frame, &csi, mcs, data_len);
    Some(LegacyReception { start, cfo_hat, csi, bits })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// μ + kσ of the adjacent-difference vector.
    MeanStd(f64),
    /// median + k · 1.4826 · MAD.
    MedianMad(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WifiRxConfig {
    pub threshold: ThresholdRule,
    /// Floor on the threshold as a fraction of the mean CSI amplitude, so a
    /// flat vector's numerical ripple never registers as a hit.
    pub relative_floor: f64,
    /// Expected BLE carrier position in subcarriers.
    pub nominal_index: f64,
}

impl Default for WifiRxConfig {
    fn default() -> Self {
        WifiRxConfig { threshold: ThresholdRule::MeanStd(3.0), relative_floor: 0.1, nominal_index: 0.0 }
    }
}

impl WifiRxConfig {
    pub fn with_nominal(nominal_index: f64) -> Self {
        WifiRxConfig { nominal_index, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let k = match self.threshold {
            ThresholdRule::MeanStd(k) | ThresholdRule::MedianMad(k) => k,
        };
        if !(k > 0.0) || !(self.relative_floor >= 0.0) {
            return Err(Error::Config("CSI threshold parameters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiHit {
    pub vector: CsiVector,
    /// |A[k] − A[k−1]| over the 51 adjacent pairs; the pair straddling DC is
    /// held at 0 and ignored.
    pub diff: Vec<f64>,
    pub peak_index: i32,
}

/// Index of the −1/+1 pair in the difference vector.
pub const DC_GAP: usize = 25;

/// Adjacent amplitude differences, DC pair zeroed.
pub fn amplitude_diff(v: &CsiVector) -> Vec<f64> {
    let a = v.amplitudes();
    let mut d: Vec<f64> = a.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    d[DC_GAP] = 0.0;
    d
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Hit threshold for one difference vector.
pub fn threshold(diff: &[f64], mean_amplitude: f64, cfg: &WifiRxConfig) -> f64 {
    let d: Vec<f64> = diff.iter().enumerate().filter(|&(i, _)| i != DC_GAP).map(|(_, &v)| v).collect();
    let n = d.len() as f64;
    let stat = match cfg.threshold {
        ThresholdRule::MeanStd(k) => {
            let mu = d.iter().sum::<f64>() / n;
            let var = d.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            mu + k * var.sqrt()
        }
        ThresholdRule::MedianMad(k) => {
            let med = median(d.clone());
            let mad = median(d.iter().map(|v| (v - med).abs()).collect());
            med + k * 1.4826 * mad
        }
    };
    stat.max(cfg.relative_floor * mean_amplitude)
}

/// argmax_k | |CSI[k]| − mean |CSI| |.
pub fn peak_index(v: &CsiVector) -> i32 {
    let a = v.amplitudes();
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    let (pos, _) = a
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &x)| if (x - mean).abs() > best.1 { (i, (x - mean).abs()) } else { best });
    CsiVector::subcarriers().nth(pos).expect("52 subcarriers")
}

pub fn csi_hit(v: &CsiVector, cfg: &WifiRxConfig) -> Option<CsiHit> {
    let diff = amplitude_diff(v);
    let a = v.amplitudes();
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    let max = diff.iter().copied().fold(0.0, f64::max);
    (max > threshold(&diff, mean, cfg)).then(|| CsiHit { vector: v.clone(), diff, peak_index: peak_index(v) })
}

pub fn csi_extract(stream: &[CsiVector], cfg: &WifiRxConfig) -> Vec<CsiHit> {
    stream.iter().filter_map(|v| csi_hit(v, cfg)).collect()
}

/// Averaged peak position against the nominal index: below reads 0, above
/// reads 1. An empty slot or an exact tie is an erasure.
pub fn csi_demap(hits: &[CsiHit], cfg: &WifiRxConfig) -> Result<bool> {
    if hits.is_empty() {
        return Err(Error::Erasure);
    }
    let avg = hits.iter().map(|h| h.peak_index as f64).sum::<f64>() / hits.len() as f64;
    if avg < cfg.nominal_index {
        Ok(false)
    } else if avg > cfg.nominal_index {
        Ok(true)
    } else {
        Err(Error::Erasure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::{self, BleChannel, WifiChannel};
    use crate::medium::{impair, ImpairmentSpec};
    use crate::waveforms::{gen_wifi_frame, WifiFrameSpec};
    use alloc::vec;
    use rand::{Rng, SeedableRng};

    fn payload(n: usize, seed: u64) -> Vec<bool> {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| r.random()).collect()
    }

    fn frame(shift: f64, bits: Vec<bool>) -> IqBuffer {
        gen_wifi_frame(&WifiFrameSpec::new(bits, WifiChannel::new(1).unwrap()).with_shift(shift)).unwrap()
    }

    fn padded(f: &IqBuffer, before: usize, after: usize) -> IqBuffer {
        let mut s = vec![Complex64::new(0.0, 0.0); before];
        s.extend_from_slice(f.samples());
        s.extend(vec![Complex64::new(0.0, 0.0); after]);
        IqBuffer::new(s, 20e6, f.center_freq()).unwrap()
    }

    #[test]
    fn sync_on_clean_frame() {
        let f = frame(0.0, payload(200, 1));
        let n = detect_and_sync(&f).unwrap();
        assert!(n <= 1, "{n}");
    }

    #[test]
    fn sync_at_4000_in_noise() {
        for trial in 0..20 {
            let sig = padded(&frame(50e3, payload(300, trial)), 4000, 500);
            let noisy = impair(&sig, &ImpairmentSpec::awgn(10.0, 77, trial));
            let n = detect_and_sync(&noisy).unwrap();
            assert!((n as i64 - 4000).abs() <= 4, "trial {trial}: {n}");
        }
    }

    #[test]
    fn silence_has_no_frame() {
        assert_eq!(detect_and_sync(&IqBuffer::zeros(5000, 20e6, 2412e6).unwrap()), None);
        let noise = impair(&IqBuffer::new(vec![Complex64::new(1e-3, 0.0); 5000], 20e6, 0.0).unwrap(), &ImpairmentSpec::awgn(-40.0, 1, 0));
        assert_eq!(detect_and_sync(&noise), None);
    }

    #[test]
    fn cfo_estimates() {
        let f = frame(100e3, payload(100, 2));
        assert!((estimate_cfo(&f) - 100e3).abs() < 50.0);
        assert!(estimate_cfo(&frame(0.0, payload(100, 2))).abs() < 50.0);
        let mut sum = 0.0;
        for t in 0..100 {
            let noisy = impair(&frame(-130e3, payload(100, t)), &ImpairmentSpec::awgn(20.0, 5, t));
            sum += estimate_cfo(&noisy);
        }
        assert!((sum / 100.0 + 130e3).abs() < 500.0, "{}", sum / 100.0);
    }

    #[test]
    fn cfo_exact_across_recoverable_range() {
        let base = frame(0.0, payload(100, 3));
        let mut f = -620e3;
        while f <= 620e3 {
            let est = estimate_cfo(&base.shifted(f));
            assert!((est - f).abs() <= 1.0, "{f}: {est}");
            f += 20e3;
        }
    }

    #[test]
    fn compensation_leaves_no_residual() {
        let f = frame(100e3, payload(100, 4));
        let c = compensate(&f, estimate_cfo(&f));
        assert!(estimate_cfo(&c).abs() < 50.0);
    }

    #[test]
    fn flat_channel_csi_is_unit() {
        let c = estimate_csi(&frame(0.0, payload(100, 5)));
        assert_eq!(c.csi.len(), 52);
        for a in c.amplitudes() {
            assert!((a - 1.0).abs() < 0.01, "{a}");
        }
        assert!(csi_hit(&c, &WifiRxConfig::default()).is_none());
    }

    #[test]
    fn payload_round_trip() {
        for (mcs, n) in [(Mcs::Bpsk12, 498), (Mcs::Qpsk12, 1002)] {
            let bits = payload(n, 6);
            let mut spec = WifiFrameSpec::new(bits.clone(), WifiChannel::new(1).unwrap()).with_shift(130e3);
            spec.mcs = mcs;
            let sig = padded(&gen_wifi_frame(&spec).unwrap(), 300, 100);
            let rx = receive_legacy(&sig, mcs, 21, n).unwrap();
            assert_eq!(rx.start, 300);
            assert_eq!(rx.bits, bits);
        }
    }

    #[test]
    fn beyond_coarse_range_breaks_payload() {
        let bits = payload(498, 7);
        let f = frame(0.0, bits.clone()).shifted(700e3);
        let rx = receive_at(&f, 0, Mcs::Bpsk12, 21, 498).unwrap();
        let errs = rx.bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
        assert!(errs as f64 / 498.0 > 0.1, "{errs}");
    }

    fn constructed(spike_at: i32, level: f64) -> CsiVector {
        let mut v = CsiVector::new(vec![Complex64::new(1.0, 0.0); 52], 0.0);
        let p = CsiVector::position(spike_at).unwrap();
        v.csi[p] = Complex64::new(level, 0.0);
        v
    }

    #[test]
    fn extraction_on_constructed_vectors() {
        let cfg = WifiRxConfig::default();
        let flat = vec![CsiVector::new(vec![Complex64::new(0.9, 0.1); 52], 0.0); 5];
        assert!(csi_extract(&flat, &cfg).is_empty());
        let hits = csi_extract(&[constructed(-7, 3.0)], &cfg);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].peak_index, -7);
        assert_eq!(hits[0].diff.len(), 51);
        let drop = csi_extract(&[constructed(12, 0.05)], &WifiRxConfig { threshold: ThresholdRule::MedianMad(3.0), ..cfg });
        assert_eq!(drop[0].peak_index, 12);
    }

    #[test]
    fn demap_direction_for_channel_three() {
        let wifi = WifiChannel::new(1).unwrap();
        let nominal = band::nominal_subcarrier(wifi, BleChannel::new(3).unwrap());
        assert!((nominal + 6.4).abs() < 1e-12);
        let cfg = WifiRxConfig::with_nominal(nominal);
        let hits = |idx: &[i32]| csi_extract(&idx.iter().map(|&k| constructed(k, 2.5)).collect::<Vec<_>>(), &cfg);
        assert_eq!(csi_demap(&hits(&[-7]), &cfg), Ok(false));
        assert_eq!(csi_demap(&hits(&[-6]), &cfg), Ok(true));
        assert_eq!(csi_demap(&hits(&[-7, -7, -6]), &cfg), Ok(false));
        assert_eq!(csi_demap(&[], &cfg), Err(Error::Erasure));
        let tie = WifiRxConfig::with_nominal(-6.5);
        assert_eq!(csi_demap(&hits(&[-7, -6]), &tie), Err(Error::Erasure));
    }

    #[test]
    fn demap_is_scale_invariant() {
        let cfg = WifiRxConfig::with_nominal(-6.4);
        for gain in [1e-3, 0.5, 7.0, 1e4] {
            for k in [-7, -6] {
                let v = constructed(k, 2.0).scaled(gain);
                let hits = csi_extract(&[v], &cfg);
                assert_eq!(csi_demap(&hits, &cfg), Ok(k == -6));
            }
        }
    }

    #[test]
    fn ble_tone_during_ltf_registers() {
        let f = frame(0.0, payload(100, 8));
        let tone: Vec<Complex64> = (0..f.len()).map(|n| dsp::phasor(-6.4 * 312.5e3, 20e6, n)).collect();
        let mixed: Vec<Complex64> = f.samples().iter().zip(&tone).map(|(a, b)| a + b).collect();
        let c = estimate_csi(&IqBuffer::new(mixed, 20e6, f.center_freq()).unwrap());
        let hit = csi_hit(&c, &WifiRxConfig::default()).expect("spike");
        assert!((-8..=-5).contains(&hit.peak_index), "{}", hit.peak_index);
    }
}
