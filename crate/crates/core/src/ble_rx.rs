//! BLE receive chain: quadrature demodulator, clock recovery and binary
//! slicer for legacy packets, plus the GFSK extractor and demapper that read
//! Wi-Fi artificial shifts out of the slicer bias on the Wi-Fi STF.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // method syntax on f64 needs it when std is absent
use num_traits::Float;

use crate::band::BleChannel;
use crate::dsp;
use crate::waveforms::BLE_PREAMBLE;
use crate::{Error, IqBuffer, Result};

pub const PREAMBLE_WINDOW: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct BleRxConfig {
    /// Linear power at which a Wi-Fi frame start is declared.
    pub rssi_threshold: f64,
    /// Decision gate on the 16-bit slicer sum.
    pub eta: u32,
    pub eta_overrides: BTreeMap<BleChannel, u32>,
    pub preamble_window: usize,
    /// Moving-average length applied to |x|² before thresholding.
    pub rssi_smoothing: usize,
}

impl Default for BleRxConfig {
    fn default() -> Self {
        BleRxConfig {
            rssi_threshold: 0.02,
            eta: 8,
            eta_overrides: BTreeMap::new(),
            preamble_window: PREAMBLE_WINDOW,
            rssi_smoothing: 4,
        }
    }
}

impl BleRxConfig {
    pub fn validate(&self) -> Result<()> {
        let window = self.preamble_window as u32;
        let ok = |eta: u32| eta > 0 && eta < window;
        if !ok(self.eta) || !self.eta_overrides.values().all(|&e| ok(e)) {
            return Err(Error::Config("eta must lie strictly between 0 and the preamble window"));
        }
        if !(self.rssi_threshold > 0.0) {
            return Err(Error::Config("RSSI threshold must be positive"));
        }
        Ok(())
    }

    pub fn eta_for(&self, channel: Option<BleChannel>) -> u32 {
        channel.and_then(|c| self.eta_overrides.get(&c).copied()).unwrap_or(self.eta)
    }
}

/// Receive-chain intermediates for one capture.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodTrace {
    /// φ[n] for n = 1..len, i.e. `phi[i]` is the step from sample i to i + 1.
    pub phi: Vec<f64>,
    pub rssi: Vec<f64>,
    pub slicer_bits: Vec<bool>,
    pub symbol_bits: Vec<bool>,
    /// Indices into `phi` where a zero sample forced φ = 0.
    pub degenerate: Vec<usize>,
}

impl DemodTrace {
    pub fn capture(sig: &IqBuffer, cfg: &BleRxConfig, sps: usize) -> DemodTrace {
        let x = sig.samples();
        let mut degenerate = Vec::new();
        let phi = demod_samples(x, Some(&mut degenerate));
        let slicer_bits = slice(&phi);
        let symbol_bits = slice(&clock_recover(&phi, sps));
        DemodTrace { rssi: rssi(sig, cfg.rssi_smoothing), phi, slicer_bits, symbol_bits, degenerate }
    }
}

#[inline]
fn wrapped_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

fn demod_samples(x: &[Complex64], mut degenerate: Option<&mut Vec<usize>>) -> Vec<f64> {
    x.windows(2)
        .enumerate()
        .map(|(i, w)| {
            if w[0] == Complex64::new(0.0, 0.0) || w[1] == Complex64::new(0.0, 0.0) {
                if let Some(d) = degenerate.as_deref_mut() {
                    d.push(i);
                }
                0.0
            } else {
                wrapped_arg(w[1] * w[0].conj())
            }
        })
        .collect()
}

/// φ[n] = arg(x[n] · conj(x[n−1])) in (−π, π]; `len(out) = len(sig) − 1`.
pub fn quad_demod(sig: &IqBuffer) -> Vec<f64> {
    demod_samples(sig.samples(), None)
}

/// Binary slicer: positive phase is 1, zero or negative is 0.
pub fn slice(phases: &[f64]) -> Vec<bool> {
    phases.iter().map(|&p| p > 0.0).collect()
}

pub fn rssi(sig: &IqBuffer, smoothing: usize) -> Vec<f64> {
    dsp::smoothed_power(sig.samples(), smoothing)
}

/// Four-point Lagrange interpolation of `y` at fractional position `t`.
fn interp(y: &[f64], t: f64) -> f64 {
    let i = t.floor() as isize;
    let mu = t - i as f64;
    let at = |k: isize| -> f64 {
        let idx = (i + k).clamp(0, y.len() as isize - 1);
        y[idx as usize]
    };
    let (ym1, y0, y1, y2) = (at(-1), at(0), at(1), at(2));
    let c0 = -mu * (mu - 1.0) * (mu - 2.0) / 6.0;
    let c1 = (mu + 1.0) * (mu - 1.0) * (mu - 2.0) / 2.0;
    let c2 = -(mu + 1.0) * mu * (mu - 2.0) / 2.0;
    let c3 = (mu + 1.0) * mu * (mu - 1.0) / 6.0;
    c0 * ym1 + c1 * y0 + c2 * y1 + c3 * y2
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Symbol-rate samples from a phase stream at `sps` samples per symbol.
///
/// Coarse timing comes from the fractional offset that maximizes mean |φ|
/// over the first 32 symbols. A Mueller–Müller detector then drives a
/// second-order loop (normalized bandwidth 0.01, damping 1/√2) on a cubic
/// interpolator.
pub fn clock_recover(phases: &[f64], sps: usize) -> Vec<f64> {
    assert!(sps >= 2, "clock recovery needs at least 2 samples per symbol");
    let omega_nominal = sps as f64;
    if phases.len() < 2 * sps {
        return phases.iter().step_by(sps).copied().collect();
    }
    let candidates = 8 * sps;
    let acq_symbols = (phases.len() / sps).saturating_sub(1).clamp(1, 32);
    let mut best = (0.0, f64::MIN);
    for c in 0..candidates {
        let tau = c as f64 / 8.0;
        let score: f64 = (0..acq_symbols).map(|k| interp(phases, tau + k as f64 * omega_nominal).abs()).sum();
        if score > best.1 + 1e-12 {
            best = (tau, score);
        }
    }

    let bn = 0.01;
    let zeta = 1.0 / 2f64.sqrt();
    let theta = bn / (zeta + 0.25 / zeta);
    let denom = 1.0 + 2.0 * zeta * theta + theta * theta;
    let gain_mu = 4.0 * zeta * theta / denom;
    let gain_omega = 4.0 * theta * theta / denom;
    let amplitude = best.1 / acq_symbols as f64;
    let norm = if amplitude > 0.0 { 1.0 / amplitude } else { 1.0 };

    let mut out = Vec::with_capacity(phases.len() / sps + 1);
    let mut t = best.0;
    let mut omega = omega_nominal;
    let mut prev = interp(phases, t) * norm;
    out.push(prev * amplitude);
    t += omega;
    while t <= (phases.len() - 1) as f64 {
        let cur = interp(phases, t) * norm;
        let err = (sign(prev) * cur - sign(cur) * prev) * 0.5;
        omega = (omega + gain_omega * err * omega_nominal).clamp(omega_nominal * 0.99, omega_nominal * 1.01);
        out.push(cur * amplitude);
        prev = cur;
        t += omega + gain_mu * err * omega_nominal;
    }
    out
}

/// Legacy BLE decode of a packet starting near `start`: frequency offset
/// removed using the mean phase step over the alternating preamble, symbol
/// timing from [`clock_recover`], alignment on the preamble, then
/// `payload_len` sliced bits.
pub fn decode_legacy(sig: &IqBuffer, start: usize, payload_len: usize, sps: usize) -> Vec<bool> {
    let x = sig.samples();
    let end = x.len().min(start + (BLE_PREAMBLE.len() + payload_len + 2) * sps + 1);
    let mut phi = demod_samples(&x[start.min(end)..end], None);
    let pre = phi.len().min(BLE_PREAMBLE.len() * sps);
    if pre > 0 {
        let offset = phi[..pre].iter().sum::<f64>() / pre as f64;
        phi.iter_mut().for_each(|p| *p -= offset);
    }
    let bits = slice(&clock_recover(&phi, sps));
    let offset = (0..=2)
        .min_by_key(|&j| {
            BLE_PREAMBLE
                .iter()
                .enumerate()
                .filter(|&(i, &b)| bits.get(j + i) != Some(&b))
                .count()
        })
        .unwrap_or(0);
    let mut payload: Vec<bool> = bits.iter().skip(offset + BLE_PREAMBLE.len()).take(payload_len).copied().collect();
    payload.resize(payload_len, false);
    payload
}

/// Smallest n ≥ 1 with RSSI[n−1] < threshold < RSSI[n].
pub fn detect_wifi_start(rssi: &[f64], cfg: &BleRxConfig) -> Option<usize> {
    detect_wifi_start_from(rssi, cfg, 0)
}

pub fn detect_wifi_start_from(rssi: &[f64], cfg: &BleRxConfig, from: usize) -> Option<usize> {
    let thr = cfg.rssi_threshold;
    (from.max(1)..rssi.len()).find(|&n| rssi[n - 1] < thr && thr < rssi[n])
}

/// Slicer output over the STF of one detected Wi-Fi frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extraction {
    pub start: usize,
    pub bits: [bool; PREAMBLE_WINDOW],
}

impl Extraction {
    pub fn ones(&self) -> u32 {
        self.bits.iter().filter(|&&b| b).count() as u32
    }
}

fn extract_at(x: &[Complex64], start: usize) -> Result<Extraction> {
    let needed = start + PREAMBLE_WINDOW + 1;
    if x.len() < needed {
        return Err(Error::TooShort { needed, got: x.len() });
    }
    let phi = demod_samples(&x[start..needed], None);
    let mut bits = [false; PREAMBLE_WINDOW];
    for (b, &p) in bits.iter_mut().zip(&phi) {
        *b = p > 0.0;
    }
    Ok(Extraction { start, bits })
}

/// RSSI start detection, then the raw 2 Msps slicer output on the 16 samples
/// that follow. `Ok(None)` when no frame start is found.
pub fn gfsk_extract(sig: &IqBuffer, cfg: &BleRxConfig) -> Result<Option<Extraction>> {
    let r = rssi(sig, cfg.rssi_smoothing);
    match detect_wifi_start(&r, cfg) {
        None => Ok(None),
        Some(start) => extract_at(sig.samples(), start).map(Some),
    }
}

/// Bias rule: more than η ones reads as 0, otherwise 1.
pub fn gfsk_demap(o: &[bool], eta: u32) -> bool {
    let sum = o.iter().filter(|&&b| b).count() as u32;
    sum <= eta
}

/// Streaming extractor: after each detection the next search starts
/// `holdoff` samples later, so one Wi-Fi frame yields one extraction.
#[derive(Debug, Clone)]
pub struct GfskExtractor {
    cfg: BleRxConfig,
    holdoff: usize,
}

impl GfskExtractor {
    pub fn new(cfg: BleRxConfig, holdoff: usize) -> Self {
        GfskExtractor { cfg, holdoff }
    }

    pub fn run(&self, sig: &IqBuffer) -> Vec<Extraction> {
        let r = rssi(sig, self.cfg.rssi_smoothing);
        let mut out = Vec::new();
        let mut from = 0;
        while let Some(start) = detect_wifi_start_from(&r, &self.cfg, from) {
            match extract_at(sig.samples(), start) {
                Ok(e) => out.push(e),
                Err(_) => break,
            }
            from = start + self.holdoff.max(1);
        }
        out
    }
}
