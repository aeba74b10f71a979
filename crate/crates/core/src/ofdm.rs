//! 802.11a/g OFDM numerology: training fields, pilots and subcarrier maps.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // method syntax on f64 needs it when std is absent
use num_traits::Float;

use crate::dsp::{self, bin};

pub const FFT_LEN: usize = 64;
pub const CP_LEN: usize = 16;
pub const SYMBOL_LEN: usize = FFT_LEN + CP_LEN;
pub const STF_PERIOD: usize = 16;
pub const STF_LEN: usize = 10 * STF_PERIOD;
pub const LTF_GUARD: usize = 32;
pub const LTF_LEN: usize = LTF_GUARD + 2 * FFT_LEN;
pub const PREAMBLE_LEN: usize = STF_LEN + LTF_LEN;
/// Offset of the first full LTF symbol from the frame start.
pub const LTF1_START: usize = STF_LEN + LTF_GUARD;
pub const LTF2_START: usize = LTF1_START + FFT_LEN;
pub const USED_SUBCARRIERS: usize = 52;
pub const PILOT_SUBCARRIERS: [i32; 4] = [-21, -7, 7, 21];
pub const PILOT_VALUES: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

const LTF_SEQUENCE: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1, -1, -1, 1, 1, -1, 1, -1,
    1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

/// Used subcarrier indices in ascending order: -26..=-1, 1..=26.
pub fn used_subcarriers() -> impl Iterator<Item = i32> + Clone {
    (-26..=26).filter(|&k| k != 0)
}

/// The 48 data subcarriers in ascending order.
pub fn data_subcarriers() -> impl Iterator<Item = i32> + Clone {
    used_subcarriers().filter(|k| !PILOT_SUBCARRIERS.contains(k))
}

/// Frequency-domain STF value at subcarrier `k` (sqrt(13/6)-scaled).
pub fn stf_value(k: i32) -> Complex64 {
    let s = (13.0f64 / 6.0).sqrt();
    let one = Complex64::new(s, s);
    match k {
        -24 | -16 | -4 | 12 | 16 | 20 | 24 => one,
        -20 | -12 | -8 | 4 | 8 => -one,
        _ => Complex64::new(0.0, 0.0),
    }
}

pub fn ltf_value(k: i32) -> f64 {
    if (-26..=26).contains(&k) {
        LTF_SEQUENCE[(k + 26) as usize] as f64
    } else {
        0.0
    }
}

/// Time-domain scale so 52 unit-magnitude subcarriers give unit power.
pub fn time_scale() -> f64 {
    1.0 / (USED_SUBCARRIERS as f64).sqrt()
}

/// 64-sample IFFT of a subcarrier map, scaled by [`time_scale`].
pub fn ifft_symbol(mut freq: [Complex64; FFT_LEN]) -> [Complex64; FFT_LEN] {
    dsp::fft_in_place(&mut freq, true);
    let g = time_scale();
    freq.iter_mut().for_each(|v| *v *= g);
    freq
}

/// Inverse of [`ifft_symbol`]: subcarrier values from 64 time samples.
pub fn fft_symbol(time: &[Complex64]) -> [Complex64; FFT_LEN] {
    let mut buf = [Complex64::new(0.0, 0.0); FFT_LEN];
    buf.copy_from_slice(&time[..FFT_LEN]);
    dsp::fft_in_place(&mut buf, false);
    let g = 1.0 / (time_scale() * FFT_LEN as f64);
    buf.iter_mut().for_each(|v| *v *= g);
    buf
}

pub fn stf() -> Vec<Complex64> {
    let mut f = [Complex64::new(0.0, 0.0); FFT_LEN];
    for k in crate::band::STF_SUBCARRIERS {
        f[bin(k, FFT_LEN)] = stf_value(k);
    }
    let t = ifft_symbol(f);
    (0..STF_LEN).map(|n| t[n % STF_PERIOD]).collect()
}

pub fn ltf_symbol() -> [Complex64; FFT_LEN] {
    let mut f = [Complex64::new(0.0, 0.0); FFT_LEN];
    for k in used_subcarriers() {
        f[bin(k, FFT_LEN)] = Complex64::new(ltf_value(k), 0.0);
    }
    ifft_symbol(f)
}

pub fn ltf() -> Vec<Complex64> {
    let sym = ltf_symbol();
    let mut out = Vec::with_capacity(LTF_LEN);
    out.extend_from_slice(&sym[FFT_LEN - LTF_GUARD..]);
    out.extend_from_slice(&sym);
    out.extend_from_slice(&sym);
    out
}

fn lfsr_sequence(seed: u8) -> [u8; 127] {
    let mut state = seed & 0x7f;
    let mut seq = [0u8; 127];
    for s in seq.iter_mut() {
        let b = ((state >> 6) ^ (state >> 3)) & 1;
        state = ((state << 1) | b) & 0x7f;
        *s = b;
    }
    seq
}

/// Initial state of the data scrambler.
pub const SCRAMBLER_SEED: u8 = 0b101_1101;

/// XORs `bits` with the x^7 + x^4 + 1 scrambler sequence; applying it twice
/// restores the input.
pub fn scramble(bits: &mut [bool]) {
    let seq = lfsr_sequence(SCRAMBLER_SEED);
    for (i, b) in bits.iter_mut().enumerate() {
        *b ^= seq[i % 127] == 1;
    }
}

/// Pilot polarity p_0..p_126 from the all-ones x^7 + x^4 + 1 scrambler.
pub fn pilot_polarity(symbol_index: usize) -> f64 {
    if lfsr_sequence(0x7f)[symbol_index % 127] == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Cyclic-prefixed data symbol. The SIGNAL field is not modeled, so payload
/// symbol `s` uses polarity `p_{s+1}`.
pub fn data_symbol(points: &[Complex64], symbol_index: usize) -> [Complex64; SYMBOL_LEN] {
    debug_assert_eq!(points.len(), 48);
    let mut f = [Complex64::new(0.0, 0.0); FFT_LEN];
    for (k, &p) in data_subcarriers().zip(points) {
        f[bin(k, FFT_LEN)] = p;
    }
    let pol = pilot_polarity(symbol_index + 1);
    for (k, v) in PILOT_SUBCARRIERS.iter().zip(PILOT_VALUES) {
        f[bin(*k, FFT_LEN)] = Complex64::new(v * pol, 0.0);
    }
    let t = ifft_symbol(f);
    let mut out = [Complex64::new(0.0, 0.0); SYMBOL_LEN];
    out[..CP_LEN].copy_from_slice(&t[FFT_LEN - CP_LEN..]);
    out[CP_LEN..].copy_from_slice(&t);
    out
}
