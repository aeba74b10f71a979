//! Rate-1/2, constraint-length-7 convolutional code (generators 133/171
//! octal) with a hard-decision Viterbi decoder.

use alloc::vec;
use alloc::vec::Vec;

const K: usize = 7;
const STATES: usize = 1 << (K - 1);
const G0: u32 = 0o133;
const G1: u32 = 0o171;
pub const TAIL_BITS: usize = K - 1;

#[inline]
fn parity(x: u32) -> bool {
    x.count_ones() & 1 == 1
}

#[inline]
fn outputs(reg: u32) -> (bool, bool) {
    (parity(reg & G0), parity(reg & G1))
}

/// Encodes `bits` followed by six zero tail bits; output length is
/// `2 * (bits.len() + 6)`.
pub fn encode(bits: &[bool]) -> Vec<bool> {
    let mut out = Vec::with_capacity(2 * (bits.len() + TAIL_BITS));
    let mut reg = 0u32;
    for &b in bits.iter().chain(core::iter::repeat_n(&false, TAIL_BITS)) {
        reg = ((reg << 1) | b as u32) & 0x7f;
        let (a, c) = outputs(reg);
        out.push(a);
        out.push(c);
    }
    out
}

/// Decodes `data_len` bits from hard-decision coded bits produced by
/// [`encode`]; trailing extra coded bits (padding) are ignored.
pub fn decode(coded: &[bool], data_len: usize) -> Vec<bool> {
    let steps = (data_len + TAIL_BITS).min(coded.len() / 2);
    let mut metric = vec![u32::MAX / 2; STATES];
    metric[0] = 0;
    let mut history: Vec<[u8; STATES]> = Vec::with_capacity(steps);
    let mut next = vec![0u32; STATES];
    for t in 0..steps {
        let r0 = coded[2 * t];
        let r1 = coded[2 * t + 1];
        let mut from = [0u8; STATES];
        next.iter_mut().for_each(|m| *m = u32::MAX / 2);
        for (s, &m) in metric.iter().enumerate() {
            if m >= u32::MAX / 2 {
                continue;
            }
            for b in 0..2u32 {
                let reg = ((s as u32) << 1) | b;
                let (a, c) = outputs(reg);
                let cost = m + (a != r0) as u32 + (c != r1) as u32;
                let ns = (reg & (STATES as u32 - 1)) as usize;
                if cost < next[ns] {
                    next[ns] = cost;
                    from[ns] = s as u8;
                }
            }
        }
        core::mem::swap(&mut metric, &mut next);
        history.push(from);
    }
    let mut state = if steps >= data_len + TAIL_BITS {
        0
    } else {
        (0..STATES).min_by_key(|&s| metric[s]).unwrap_or(0)
    };
    let mut bits = vec![false; steps];
    for t in (0..steps).rev() {
        bits[t] = state & 1 == 1;
        state = history[t][state] as usize;
    }
    bits.truncate(data_len);
    bits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(n: usize) -> Vec<bool> {
        (0..n).map(|i| (i * 37 + i / 3) % 5 < 2).collect()
    }

    #[test]
    fn impulse_response_matches_generators() {
        let c = encode(&[true]);
        // a single one walks through the generator taps MSB first
        let g0: Vec<bool> = (0..7).map(|i| c[2 * i]).collect();
        let g1: Vec<bool> = (0..7).map(|i| c[2 * i + 1]).collect();
        let to_bits = |g: u32| (0..7).map(|i| (g >> i) & 1 == 1).collect::<Vec<_>>();
        assert_eq!(g0, to_bits(G0));
        assert_eq!(g1, to_bits(G1));
    }

    #[test]
    fn clean_round_trip() {
        let d = pattern(498);
        assert_eq!(decode(&encode(&d), d.len()), d);
    }

    #[test]
    fn corrects_scattered_errors() {
        let d = pattern(200);
        let mut c = encode(&d);
        for i in (5..c.len()).step_by(23) {
            c[i] = !c[i];
        }
        assert_eq!(decode(&c, d.len()), d);
    }

    #[test]
    fn ignores_padding() {
        let d = pattern(30);
        let mut c = encode(&d);
        c.extend([true, false, true, true]);
        assert_eq!(decode(&c, d.len()), d);
    }
}
