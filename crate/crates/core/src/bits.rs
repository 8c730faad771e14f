use std::ops::{Deref, DerefMut};

/// A sequence of bits, one `0`/`1` per byte.
///
/// Order is transmission order. Conversions to octets pack MSB-first unless
/// stated otherwise.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Bits(pub Vec<u8>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![0; len])
    }

    /// Unpacks octets MSB-first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut out = Vec::with_capacity(bytes.len() * 8);
        for &b in bytes {
            for i in (0..8).rev() {
                out.push((b >> i) & 1);
            }
        }
        Bits(out)
    }

    /// Unpacks octets LSB-first (the bit order of reflected CRCs).
    pub fn from_bytes_lsb(bytes: &[u8]) -> Self {
        let mut out = Vec::with_capacity(bytes.len() * 8);
        for &b in bytes {
            for i in 0..8 {
                out.push((b >> i) & 1);
            }
        }
        Bits(out)
    }

    /// Packs MSB-first; a trailing partial octet is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i))))
            .collect()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn hamming(&self, other: &Bits) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bits(v)
    }
}

impl Deref for Bits {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl DerefMut for Bits {
    fn deref_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }
}

impl From<Vec<u8>> for Bits {
    fn from(v: Vec<u8>) -> Self {
        Bits(v)
    }
}

impl FromIterator<u8> for Bits {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }
}
