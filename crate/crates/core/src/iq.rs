use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // method syntax on f64 needs it when std is absent
use num_traits::Float;

use crate::dsp;
use crate::{Error, Result};

/// Complex baseband samples with their sample rate and the nominal RF
/// center they are referenced to.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    samples: Vec<Complex64>,
    sample_rate: f64,
    center_freq: f64,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, center_freq: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::InvalidSampleRate(sample_rate));
        }
        Ok(IqBuffer { samples, sample_rate, center_freq })
    }

    pub fn zeros(len: usize, sample_rate: f64, center_freq: f64) -> Result<Self> {
        Self::new(alloc::vec![Complex64::new(0.0, 0.0); len], sample_rate, center_freq)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn center_freq(&self) -> f64 {
        self.center_freq
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        dsp::energy(&self.samples)
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// Scales the buffer to unit average power. Silent buffers are left alone.
    pub fn normalize_power(&mut self) {
        let p = self.mean_power();
        if p > 0.0 {
            let g = 1.0 / p.sqrt();
            self.samples.iter_mut().for_each(|s| *s *= g);
        }
    }

    pub fn scale(&mut self, gain: f64) {
        self.samples.iter_mut().for_each(|s| *s *= gain);
    }

    /// Copy of `samples[range]` with the same rate and center.
    pub fn slice(&self, range: core::ops::Range<usize>) -> IqBuffer {
        IqBuffer {
            samples: self.samples[range].to_vec(),
            sample_rate: self.sample_rate,
            center_freq: self.center_freq,
        }
    }

    /// Realizes the frequency shifter: `samples[n] · e^{i2π·Δf·n/fs}`.
    pub fn shifted(&self, delta_f: f64) -> IqBuffer {
        let mut out = self.clone();
        dsp::rotate_in_place(&mut out.samples, delta_f, self.sample_rate);
        out
    }
}

pub fn apply_freq_shift(sig: &IqBuffer, delta_f: f64) -> IqBuffer {
    sig.shifted(delta_f)
}
