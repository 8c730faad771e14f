//! Gray-mapped, unit-average-energy 16-QAM.

use num_complex::Complex64;

pub const BITS_PER_SYMBOL: usize = 4;

/// Amplitude unit `d` so that levels `±d, ±3d` give `E|s|² = 1`.
pub fn unit() -> f64 {
    1.0 / 10f64.sqrt()
}

/// Gray 4-PAM: `00 → −3, 01 → −1, 11 → +1, 10 → +3` (in units of `d`).
#[inline]
fn pam4(b0: u8, b1: u8) -> f64 {
    match (b0 & 1, b1 & 1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

#[inline]
fn pam4_bits(v: f64) -> (u8, u8) {
    let d = unit();
    if v < -2.0 * d {
        (0, 0)
    } else if v < 0.0 {
        (0, 1)
    } else if v < 2.0 * d {
        (1, 1)
    } else {
        (1, 0)
    }
}

/// Maps 4 bits to a point: the first pair selects I, the second Q.
pub fn map(bits: &[u8]) -> Complex64 {
    let d = unit();
    Complex64::new(pam4(bits[0], bits[1]) * d, pam4(bits[2], bits[3]) * d)
}

/// Per-axis nearest-level hard decision.
pub fn demap(y: Complex64, out: &mut Vec<u8>) {
    let (a, b) = pam4_bits(y.re);
    let (c, e) = pam4_bits(y.im);
    out.extend_from_slice(&[a, b, c, e]);
}

pub fn modulate(bits: &[u8]) -> Vec<Complex64> {
    debug_assert_eq!(bits.len() % BITS_PER_SYMBOL, 0);
    bits.chunks(BITS_PER_SYMBOL).map(map).collect()
}

pub fn demodulate(symbols: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() * BITS_PER_SYMBOL);
    for &s in symbols {
        demap(s, &mut out);
    }
    out
}

/// All 16 points with their labels.
pub fn constellation() -> Vec<([u8; 4], Complex64)> {
    (0..16u8)
        .map(|v| {
            let b = [(v >> 3) & 1, (v >> 2) & 1, (v >> 1) & 1, v & 1];
            (b, map(&b))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_average_energy() {
        let e: f64 = constellation().iter().map(|(_, s)| s.norm_sqr()).sum::<f64>() / 16.0;
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn neighbours_differ_in_one_bit() {
        let pts = constellation();
        let d = 2.0 * unit();
        for (a, pa) in &pts {
            for (b, pb) in &pts {
                if ((pa - pb).norm() - d).abs() < 1e-9 {
                    assert_eq!(a.iter().zip(b).filter(|(x, y)| x != y).count(), 1);
                }
            }
        }
    }

    #[test]
    fn hard_decision_is_minimum_distance() {
        let pts = constellation();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20_000 {
            let y = Complex64::new(rng.gen_range(-1.6..1.6), rng.gen_range(-1.6..1.6));
            let brute = pts.iter().min_by(|a, b| (a.1 - y).norm().partial_cmp(&(b.1 - y).norm()).unwrap()).unwrap();
            assert_eq!(demodulate(&[y]), brute.0.to_vec());
        }
    }

    #[test]
    fn round_trip() {
        let bits: Vec<u8> = (0..64).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        assert_eq!(demodulate(&modulate(&bits)), bits);
    }
}
