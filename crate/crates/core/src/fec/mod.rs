//! Reed–Solomon errors-and-erasures coding over GF(256) and CRC-32.

mod crc;
mod gf256;
mod rs;

pub use crc::{crc32, crc32_bits, crc_check, CrcTag};
pub use gf256::{Gf256, PRIMITIVE_POLY};
pub use rs::{damage, RsCode, RS_INFO_SYMBOLS, RS_MOTHER_LENGTH};
