//! CRC-32 (IEEE 802.3): polynomial `0x04C11DB7`, reflected, init and final
//! XOR all-ones.

const REFLECTED_POLY: u32 = 0xedb8_8320;

fn table() -> &'static [u32; 256] {
    static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0u32; 256];
        for (i, slot) in t.iter_mut().enumerate() {
            let mut c = i as u32;
            for _ in 0..8 {
                c = if c & 1 != 0 { (c >> 1) ^ REFLECTED_POLY } else { c >> 1 };
            }
            *slot = c;
        }
        t
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CrcTag(pub u32);

impl CrcTag {
    /// Big-endian octets, as appended to a payload.
    pub fn to_bytes(self) -> [u8; 4] {
        self.0.to_be_bytes()
    }

    pub fn from_bytes(b: [u8; 4]) -> Self {
        CrcTag(u32::from_be_bytes(b))
    }
}

/// CRC over octets, each processed least significant bit first.
pub fn crc32(bytes: &[u8]) -> CrcTag {
    let t = table();
    let c = bytes.iter().fold(!0u32, |c, &b| t[((c ^ b as u32) & 0xff) as usize] ^ (c >> 8));
    CrcTag(!c)
}

/// CRC over a bit vector (one 0/1 value per element) in transmission order.
/// Equals [`crc32`] of the bytes whose LSB-first expansion is `bits`.
pub fn crc32_bits(bits: &[u8]) -> CrcTag {
    let mut c = !0u32;
    for &b in bits {
        c ^= (b & 1) as u32;
        c = if c & 1 != 0 { (c >> 1) ^ REFLECTED_POLY } else { c >> 1 };
    }
    CrcTag(!c)
}

pub fn crc_check(bytes: &[u8], tag: CrcTag) -> bool {
    crc32(bytes) == tag
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bits;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Plain MSB-first long division by the unreflected polynomial over the
    /// bit-reversed message, independent of the table code.
    fn reference(bytes: &[u8]) -> u32 {
        let mut reg = 0xffff_ffffu32;
        for &byte in bytes {
            let b = byte.reverse_bits();
            for i in (0..8).rev() {
                let top = (reg >> 31) ^ ((b >> i) as u32 & 1);
                reg <<= 1;
                if top != 0 {
                    reg ^= 0x04c1_1db7;
                }
            }
        }
        !reg.reverse_bits()
    }

    #[test]
    fn check_value() {
        assert_eq!(crc32(b"123456789"), CrcTag(0xcbf4_3926));
        assert_eq!(reference(b"123456789"), 0xcbf4_3926);
        assert_eq!(crc32_bits(&Bits::from_bytes_lsb(b"123456789")), CrcTag(0xcbf4_3926));
    }

    #[test]
    fn single_bit_flips_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [1usize, 4, 60, 128] {
            let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let tag = crc32(&data);
            assert!(crc_check(&data, tag));
            for bit in 0..len * 8 {
                let mut d = data.clone();
                d[bit / 8] ^= 1 << (bit % 8);
                assert!(!crc_check(&d, tag));
            }
        }
    }

    proptest! {
        #[test]
        fn matches_reference(data in proptest::collection::vec(any::<u8>(), 0..200)) {
            prop_assert_eq!(crc32(&data).0, reference(&data));
            prop_assert_eq!(crc32_bits(&Bits::from_bytes_lsb(&data)), crc32(&data));
        }

        #[test]
        fn bursts_up_to_32_bits_detected(data in proptest::collection::vec(any::<u8>(), 4..128), start in any::<prop::sample::Index>(), len in 1usize..=32, pattern in any::<u32>()) {
            let total = data.len() * 8;
            let len = len.min(total);
            let start = start.index(total - len + 1);
            // burst: first and last bits flipped, interior arbitrary
            let mut mask = vec![0u8; total];
            mask[start] = 1;
            mask[start + len - 1] = 1;
            for i in 1..len.saturating_sub(1) {
                mask[start + i] = ((pattern >> (i % 32)) & 1) as u8;
            }
            let mut d = data.clone();
            for (i, &m) in mask.iter().enumerate() {
                d[i / 8] ^= m << (i % 8);
            }
            prop_assert!(!crc_check(&d, crc32(&data)));
        }
    }
}
