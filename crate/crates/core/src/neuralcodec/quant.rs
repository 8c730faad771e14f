//! Uniform scalar quantizer with Gray-coded level indices.

use std::sync::atomic::{AtomicU64, Ordering};

static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of inputs outside `[0, 1]` that the quantizer has clamped.
pub fn clamp_events() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

pub fn levels(bits: u32) -> u32 {
    1 << bits
}

pub fn gray_encode(i: u32) -> u32 {
    i ^ (i >> 1)
}

pub fn gray_decode(g: u32) -> u32 {
    let mut i = g;
    let mut shift = g >> 1;
    while shift != 0 {
        i ^= shift;
        shift >>= 1;
    }
    i
}

/// Nearest level index among `{0, 1/(L−1), …, 1}`; ties go to the lower level.
#[inline]
pub fn level_index(v: f64, bits: u32) -> u32 {
    let top = levels(bits) - 1;
    let v = if (0.0..=1.0).contains(&v) {
        v
    } else {
        CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
        if v.is_nan() {
            0.0
        } else {
            v.clamp(0.0, 1.0)
        }
    };
    let x = v * top as f64;
    ((x - 0.5).ceil().max(0.0) as u32).min(top)
}

#[inline]
pub fn level_value(index: u32, bits: u32) -> f64 {
    index as f64 / (levels(bits) - 1) as f64
}

/// Appends the Gray code of `index` MSB-first.
#[inline]
pub fn push_index_bits(out: &mut Vec<u8>, index: u32, bits: u32) {
    let g = gray_encode(index);
    for i in (0..bits).rev() {
        out.push(((g >> i) & 1) as u8);
    }
}

/// Level index from `bits` Gray-coded bits, MSB-first.
#[inline]
pub fn index_from_bits(bits: &[u8]) -> u32 {
    let g = bits.iter().fold(0u32, |acc, &b| (acc << 1) | (b & 1) as u32);
    gray_decode(g)
}

pub fn quantize(v: f64, bits: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(bits as usize);
    push_index_bits(&mut out, level_index(v, bits), bits);
    out
}

pub fn dequantize(bits: &[u8]) -> f64 {
    level_value(index_from_bits(bits), bits.len() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        assert_eq!(quantize(0.0, 2), vec![0, 0]);
        assert_eq!(dequantize(&[0, 0]), 0.0);
        assert_eq!(quantize(1.0, 2), vec![1, 0]);
        assert_eq!(dequantize(&[1, 0]), 1.0);
        assert_eq!(level_index(0.34, 2), 1);
        assert_eq!(quantize(0.34, 2), vec![0, 1]);
    }

    #[test]
    fn ties_round_down() {
        // 0.5 sits exactly between levels 1/3 and 2/3
        assert_eq!(level_index(0.5, 2), 1);
        assert_eq!(level_index(1.0 / 6.0, 2), 0);
    }

    #[test]
    fn clamps_and_counts() {
        let before = clamp_events();
        assert_eq!(quantize(1.7, 2), quantize(1.0, 2));
        assert_eq!(quantize(-0.2, 2), quantize(0.0, 2));
        assert!(clamp_events() >= before + 2);
    }

    #[test]
    fn gray_round_trip() {
        for i in 0..256 {
            assert_eq!(gray_decode(gray_encode(i)), i);
        }
    }

    #[test]
    fn reconstruction_error_bound() {
        for bits in 1..=4 {
            let bound = 1.0 / (2.0 * (levels(bits) - 1) as f64);
            for k in 0..=10_000 {
                let v = k as f64 / 10_000.0;
                let err = (dequantize(&quantize(v, bits)) - v).abs();
                assert!(err <= bound + 1e-15, "bits={bits} v={v} err={err}");
            }
        }
    }

    #[test]
    fn adjacent_levels_differ_in_one_bit() {
        for bits in 1..=4 {
            for idx in 0..levels(bits) - 1 {
                let (mut a, mut b) = (Vec::new(), Vec::new());
                push_index_bits(&mut a, idx, bits);
                push_index_bits(&mut b, idx + 1, bits);
                let d = a.iter().zip(&b).filter(|(x, y)| x != y).count();
                assert_eq!(d, 1, "bits={bits} idx={idx}");
            }
        }
    }

    #[test]
    fn two_bit_flip_table() {
        // Exhaustive over the four 2-bit labels: the LSB flip moves exactly
        // one level, the MSB flip mirrors the level about the midpoint.
        let step = 1.0 / 3.0;
        for idx in 0..4u32 {
            let mut b = Vec::new();
            push_index_bits(&mut b, idx, 2);
            let v = dequantize(&b);
            let mut lsb = b.clone();
            lsb[1] ^= 1;
            assert!(((dequantize(&lsb) - v).abs() - step).abs() < 1e-12);
            let mut msb = b.clone();
            msb[0] ^= 1;
            assert!((dequantize(&msb) - (1.0 - v)).abs() < 1e-12);
        }
    }
}
