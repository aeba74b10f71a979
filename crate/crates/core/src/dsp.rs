//! Small DSP kernels shared by the transmit and receive chains.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // method syntax on f64 needs it when std is absent
use num_traits::Float;

/// In-place iterative radix-2 FFT. `inverse` selects the positive exponent;
/// no scaling is applied in either direction.
///
/// Panics if the length is not a power of two.
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let step = sign * 2.0 * PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = Complex64::cis(step * k as f64);
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

pub fn fft(input: &[Complex64]) -> Vec<Complex64> {
    let mut out = input.to_vec();
    fft_in_place(&mut out, false);
    out
}

/// Maps a signed subcarrier index onto an FFT bin of an `n`-point transform.
#[inline]
pub fn bin(k: i32, n: usize) -> usize {
    k.rem_euclid(n as i32) as usize
}

/// `e^{i 2π f n / fs}` without accumulating phase error over long buffers.
#[inline]
pub fn phasor(freq_hz: f64, sample_rate: f64, n: usize) -> Complex64 {
    let cycles = freq_hz * n as f64 / sample_rate;
    Complex64::cis(2.0 * PI * (cycles - cycles.round()))
}

/// Multiplies `samples[n]` by `e^{i 2π f n / fs}`.
pub fn rotate_in_place(samples: &mut [Complex64], freq_hz: f64, sample_rate: f64) {
    if freq_hz == 0.0 {
        return;
    }
    for (n, s) in samples.iter_mut().enumerate() {
        *s *= phasor(freq_hz, sample_rate, n);
    }
}

pub fn energy(samples: &[Complex64]) -> f64 {
    samples.iter().map(|s| s.norm_sqr()).sum()
}

/// Sum of `x[n + lag] · conj(x[n])` over `n in range`.
pub fn lagged_correlation(x: &[Complex64], lag: usize, range: core::ops::Range<usize>) -> Complex64 {
    range.map(|n| x[n + lag] * x[n].conj()).sum()
}

/// Linear-phase FIR filter with an odd tap count, applied with its group
/// delay removed so output sample `n` lines up with input sample `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fir {
    taps: Vec<f64>,
}

impl Fir {
    pub fn new(taps: Vec<f64>) -> Self {
        assert!(taps.len() % 2 == 1, "linear-phase FIR needs an odd tap count");
        Fir { taps }
    }

    /// Hamming-windowed sinc low-pass with unit DC gain.
    pub fn lowpass(num_taps: usize, cutoff_hz: f64, sample_rate: f64) -> Self {
        assert!(num_taps % 2 == 1);
        let fc = cutoff_hz / sample_rate;
        let mid = (num_taps / 2) as f64;
        let mut taps: Vec<f64> = (0..num_taps)
            .map(|i| {
                let t = i as f64 - mid;
                let sinc = if t == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * t).sin() / (PI * t) };
                let window = 0.54 - 0.46 * (2.0 * PI * i as f64 / (num_taps - 1) as f64).cos();
                sinc * window
            })
            .collect();
        let dc: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= dc);
        Fir { taps }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn delay(&self) -> usize {
        self.taps.len() / 2
    }

    /// Magnitude response at `freq_hz`.
    pub fn gain(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let w = -2.0 * PI * freq_hz / sample_rate;
        self.taps
            .iter()
            .enumerate()
            .map(|(i, &t)| Complex64::cis(w * i as f64) * t)
            .sum::<Complex64>()
            .norm()
    }

    /// Delay-compensated output at input position `n`, zero outside the input.
    #[inline]
    pub fn output_at(&self, x: &[Complex64], n: usize) -> Complex64 {
        let d = self.delay() as isize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &t) in self.taps.iter().enumerate() {
            let idx = n as isize + d - k as isize;
            if idx >= 0 && (idx as usize) < x.len() {
                acc += x[idx as usize] * t;
            }
        }
        acc
    }

    /// Filters and keeps every `factor`-th output, starting at index 0.
    pub fn decimate(&self, x: &[Complex64], factor: usize) -> Vec<Complex64> {
        (0..x.len().div_ceil(factor)).map(|m| self.output_at(x, m * factor)).collect()
    }
}

/// Integer-factor interpolator: zero-stuff then low-pass at the old Nyquist.
pub fn upsample(x: &[Complex64], factor: usize) -> Vec<Complex64> {
    if factor == 1 {
        return x.to_vec();
    }
    let mut stuffed = vec![Complex64::new(0.0, 0.0); x.len() * factor];
    for (i, &s) in x.iter().enumerate() {
        stuffed[i * factor] = s * factor as f64;
    }
    let fir = Fir::lowpass(16 * factor + 1, 0.5 / factor as f64, 1.0);
    (0..stuffed.len()).map(|n| fir.output_at(&stuffed, n)).collect()
}

/// Trailing moving average of `|x|²` over `window` samples.
pub fn smoothed_power(x: &[Complex64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for n in 0..x.len() {
        acc += x[n].norm_sqr();
        if n >= window {
            acc -= x[n - window].norm_sqr();
        }
        out.push(acc.max(0.0) / window as f64);
    }
    out
}
