//! Framing for the side channel: a fixed 1,0,1,0 preamble followed by a
//! systematic Hamming-coded payload.
//!
//! Codewords carry data bits first and parity bits after them. Column `j` of
//! the parity-check matrix is the binary number assigned to position `j`:
//! data positions take the non-powers of two in increasing order (3, 5, 6,
//! 7, ...) and parity positions take 1, 2, 4 (, 8). The syndrome of a single
//! error is therefore that position's number.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::{Error, Result};

pub const PREAMBLE: [bool; 4] = [true, false, true, false];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Code {
    #[default]
    None,
    H74,
    H1511,
}

impl Code {
    /// Codeword length n.
    pub fn n(self) -> usize {
        match self {
            Code::None => 1,
            Code::H74 => 7,
            Code::H1511 => 15,
        }
    }

    /// Data bits per codeword k.
    pub fn k(self) -> usize {
        match self {
            Code::None => 1,
            Code::H74 => 4,
            Code::H1511 => 11,
        }
    }

    fn parity_bits(self) -> usize {
        self.n() - self.k()
    }

    pub fn rate(self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn coded_len(self, data_len: usize) -> usize {
        data_len / self.k() * self.n()
    }

    /// Parity-check column of every codeword position.
    fn columns(self) -> Vec<u16> {
        let r = self.parity_bits();
        let mut cols: Vec<u16> = (1..=self.n() as u16).filter(|c| !c.is_power_of_two()).collect();
        cols.extend((0..r).map(|j| 1u16 << j));
        cols
    }
}

fn check_len(len: usize, block: usize) -> Result<()> {
    if len.is_multiple_of(block) {
        Ok(())
    } else {
        Err(Error::BlockLength { len, block })
    }
}

pub fn hamming_encode(data: &[bool], code: Code) -> Result<Vec<bool>> {
    if code == Code::None {
        return Ok(data.to_vec());
    }
    check_len(data.len(), code.k())?;
    let cols = code.columns();
    let k = code.k();
    let mut out = Vec::with_capacity(code.coded_len(data.len()));
    for word in data.chunks(k) {
        let syndrome = word.iter().zip(&cols).filter(|(&b, _)| b).fold(0u16, |s, (_, &c)| s ^ c);
        out.extend_from_slice(word);
        out.extend((0..code.parity_bits()).map(|j| syndrome >> j & 1 == 1));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub data: Vec<bool>,
    pub corrections: usize,
}

/// Syndrome decoding; each codeword gets at most one flip. Two errors in a
/// codeword miscorrect silently.
pub fn hamming_decode(bits: &[bool], code: Code) -> Result<Decoded> {
    if code == Code::None {
        return Ok(Decoded { data: bits.to_vec(), corrections: 0 });
    }
    check_len(bits.len(), code.n())?;
    let cols = code.columns();
    let mut data = Vec::with_capacity(bits.len() / code.n() * code.k());
    let mut corrections = 0;
    for word in bits.chunks(code.n()) {
        let syndrome = word.iter().zip(&cols).filter(|(&b, _)| b).fold(0u16, |s, (_, &c)| s ^ c);
        let mut word = word.to_vec();
        if syndrome != 0 {
            if let Some(pos) = cols.iter().position(|&c| c == syndrome) {
                word[pos] = !word[pos];
                corrections += 1;
            }
        }
        data.extend_from_slice(&word[..code.k()]);
    }
    Ok(Decoded { data, corrections })
}

/// Preamble followed by the coded payload.
pub fn frame_encode(payload: &[bool], code: Code) -> Result<Vec<bool>> {
    let mut out = PREAMBLE.to_vec();
    out.extend(hamming_encode(payload, code)?);
    Ok(out)
}

/// Index right after the first four consecutive active bits equal to the
/// preamble. `None` entries are idle slots.
pub fn frame_detect(stream: &[Option<bool>]) -> Option<usize> {
    stream
        .windows(PREAMBLE.len())
        .position(|w| w.iter().zip(&PREAMBLE).all(|(s, &p)| *s == Some(p)))
        .map(|i| i + PREAMBLE.len())
}

/// Detects the preamble, reads the next `coded_len(data_len)` active bits
/// (idle slots are skipped) and decodes them.
pub fn frame_decode(stream: &[Option<bool>], code: Code, data_len: usize) -> Result<Option<Decoded>> {
    check_len(data_len, code.k())?;
    let Some(start) = frame_detect(stream) else {
        return Ok(None);
    };
    let need = code.coded_len(data_len);
    let bits: Vec<bool> = stream[start..].iter().flatten().copied().take(need).collect();
    if bits.len() < need {
        return Ok(None);
    }
    hamming_decode(&bits, code).map(Some)
}

/// Bits packed MSB first into hex digits, left-padded to whole nibbles.
pub fn to_hex(bits: &[bool]) -> String {
    let pad = (4 - bits.len() % 4) % 4;
    let padded: Vec<bool> = core::iter::repeat_n(false, pad).chain(bits.iter().copied()).collect();
    let mut s = String::with_capacity(padded.len() / 4);
    for nibble in padded.chunks(4) {
        let v = nibble.iter().fold(0u32, |a, &b| (a << 1) | b as u32);
        let _ = write!(s, "{v:x}");
    }
    s
}

pub fn from_hex(hex: &str, bits: usize) -> Option<Vec<bool>> {
    let mut all = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        let v = c.to_digit(16)?;
        all.extend((0..4).rev().map(|j| v >> j & 1 == 1));
    }
    let skip = all.len().checked_sub(bits)?;
    if all[..skip].iter().any(|&b| b) {
        return None;
    }
    Some(all.split_off(skip))
}

fn int_bits(v: u32, len: usize) -> Vec<bool> {
    (0..len).rev().map(|j| v >> j & 1 == 1).collect()
}

/// Every data word of `code` with its codeword, as "data_hex codeword_hex".
pub fn golden_vectors(code: Code) -> Vec<(String, String)> {
    (0..1u32 << code.k())
        .map(|v| {
            let data = int_bits(v, code.k());
            let cw = hamming_encode(&data, code).expect("one full data word");
            (to_hex(&data), to_hex(&cw))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    /// Independent oracle: the unique codeword whose data part matches and
    /// whose syndrome under the column convention is zero, found by search.
    fn brute_force_codeword(data: &[bool], code: Code) -> Vec<bool> {
        let cols = code.columns();
        let r = code.n() - code.k();
        (0..1u32 << r)
            .map(|p| {
                let mut w = data.to_vec();
                w.extend((0..r).map(|j| p >> j & 1 == 1));
                w
            })
            .find(|w| w.iter().zip(&cols).filter(|(&b, _)| b).fold(0u16, |s, (_, &c)| s ^ c) == 0)
            .unwrap()
    }

    #[test]
    fn zero_data_gives_zero_codeword() {
        assert_eq!(hamming_encode(&bits("0000"), Code::H74).unwrap(), bits("0000000"));
    }

    #[test]
    fn golden_vector_1011() {
        let cw = hamming_encode(&bits("1011"), Code::H74).unwrap();
        assert_eq!(cw, brute_force_codeword(&bits("1011"), Code::H74));
        assert_eq!(cw, bits("1011010"));
    }

    #[test]
    fn encoder_matches_oracle_everywhere() {
        for code in [Code::H74, Code::H1511] {
            for v in 0..1u32 << code.k() {
                let d = int_bits(v, code.k());
                assert_eq!(hamming_encode(&d, code).unwrap(), brute_force_codeword(&d, code));
            }
        }
    }

    #[test]
    fn every_single_error_is_corrected() {
        for code in [Code::H74, Code::H1511] {
            for v in 0..1u32 << code.k() {
                let d = int_bits(v, code.k());
                let cw = hamming_encode(&d, code).unwrap();
                for pos in 0..code.n() {
                    let mut e = cw.clone();
                    e[pos] = !e[pos];
                    let out = hamming_decode(&e, code).unwrap();
                    assert_eq!(out.data, d);
                    assert_eq!(out.corrections, 1);
                }
            }
        }
    }

    #[test]
    fn clean_codeword_needs_no_corrections() {
        let cw = hamming_encode(&bits("10110100111"), Code::H1511).unwrap();
        let out = hamming_decode(&cw, Code::H1511).unwrap();
        assert_eq!(out.data, bits("10110100111"));
        assert_eq!(out.corrections, 0);
    }

    #[test]
    fn length_errors() {
        assert!(matches!(hamming_encode(&bits("101"), Code::H74), Err(Error::BlockLength { len: 3, block: 4 })));
        assert!(hamming_decode(&bits("10110"), Code::H74).is_err());
    }

    /// Decoder-independent BER for a perfect code: an error pattern decodes to
    /// the codeword whose radius-1 sphere holds it, so data errors follow the
    /// codeword weights. Hamming codes are transitive, so the per-bit average
    /// over data positions equals the average over all n positions.
    fn sphere_bit_error_rate(code: Code, p: f64) -> f64 {
        let n = code.n() as i32;
        let q = 1.0 - p;
        (1..1u32 << code.k())
            .map(|v| {
                let w = hamming_encode(&int_bits(v, code.k()), code).unwrap().iter().filter(|&&b| b).count() as i32;
                let mut sphere = p.powi(w) * q.powi(n - w) + w as f64 * p.powi(w - 1) * q.powi(n - w + 1);
                if w < n {
                    sphere += (n - w) as f64 * p.powi(w + 1) * q.powi(n - w - 1);
                }
                sphere * w as f64 / n as f64
            })
            .sum()
    }

    fn bsc_ber(code: Code, p: f64, info_bits: usize, seed: u64) -> f64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<bool> = (0..info_bits).map(|_| rng.random()).collect();
        let mut cw = hamming_encode(&data, code).unwrap();
        for b in cw.iter_mut() {
            if rng.random_bool(p) {
                *b = !*b;
            }
        }
        let out = hamming_decode(&cw, code).unwrap();
        out.data.iter().zip(&data).filter(|(a, b)| a != b).count() as f64 / data.len() as f64
    }

    #[test]
    fn bsc_005_matches_analytic() {
        for code in [Code::H74, Code::H1511] {
            let oracle = sphere_bit_error_rate(code, 0.05);
            let ber = bsc_ber(code, 0.05, 110_000, 5);
            assert!((ber - oracle).abs() / oracle < 0.15, "{code:?}: {ber} vs {oracle}");
        }
        assert!((sphere_bit_error_rate(Code::H74, 0.05) - 0.01943).abs() < 1e-4);
    }

    #[test]
    fn decoding_never_hurts_up_to_nine_percent() {
        for code in [Code::H74, Code::H1511] {
            for p in [0.01, 0.05, 0.09] {
                let ber = bsc_ber(code, p, 55_000, 17);
                let sigma = (p * (1.0 - p) / 55_000.0).sqrt();
                assert!(ber <= p + 3.0 * sigma, "{code:?} {p}: {ber}");
            }
        }
        // Past about 9% the (15,11) code miscorrects more than it fixes.
        assert!(sphere_bit_error_rate(Code::H1511, 0.1) > 0.1);
        assert!(sphere_bit_error_rate(Code::H74, 0.1) < 0.1);
    }

    #[test]
    fn frame_lengths() {
        assert_eq!(frame_encode(&[], Code::None).unwrap(), bits("1010"));
        assert_eq!(frame_encode(&bits("1011"), Code::H74).unwrap().len(), 11);
        assert_eq!(frame_encode(&bits("10110100111"), Code::H1511).unwrap().len(), 19);
    }

    #[test]
    fn detect_examples() {
        let s: Vec<Option<bool>> = bits("101011").into_iter().map(Some).collect();
        assert_eq!(frame_detect(&s), Some(4));
        assert_eq!(frame_detect(&[None; 12]), None);
        let gapped = [Some(true), None, Some(false), Some(true), Some(false), Some(true), Some(false)];
        assert_eq!(frame_detect(&gapped), Some(7));
    }

    #[test]
    fn random_window_matches_one_in_sixteen() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let trials = 20_000;
        let hits = (0..trials)
            .filter(|_| {
                let w: Vec<Option<bool>> = (0..4).map(|_| Some(rng.random())).collect();
                frame_detect(&w).is_some()
            })
            .count() as f64;
        let p = 1.0 / 16.0;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - trials as f64 * p).abs() < 3.0 * sigma);
    }

    #[test]
    fn hex_round_trip() {
        assert_eq!(to_hex(&bits("1011010")), "5a");
        assert_eq!(from_hex("5a", 7).unwrap(), bits("1011010"));
        assert_eq!(golden_vectors(Code::H74)[11], ("b".into(), "5a".into()));
        assert_eq!(golden_vectors(Code::H1511).len(), 2048);
    }

    proptest! {
        #[test]
        fn frame_round_trip(words in 0usize..20, seed in any::<u64>(), code_idx in 0usize..3) {
            let code = [Code::None, Code::H74, Code::H1511][code_idx];
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<bool> = (0..words * code.k()).map(|_| rng.random()).collect();
            let stream: Vec<Option<bool>> = frame_encode(&data, code).unwrap().into_iter().map(Some).collect();
            let out = frame_decode(&stream, code, data.len()).unwrap().unwrap();
            prop_assert_eq!(out.data, data);
        }
    }
}
