use std::sync::OnceLock;

/// `x^8 + x^4 + x^3 + x^2 + 1`.
pub const PRIMITIVE_POLY: u16 = 0x11d;

/// Log/antilog tables for GF(2^8) with generator `α = 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf256 {
    exp: Vec<u8>,
    log: Vec<u8>,
}

impl Default for Gf256 {
    fn default() -> Self {
        Self::new()
    }
}

impl Gf256 {
    pub fn new() -> Self {
        let mut exp = vec![0u8; 512];
        let mut log = vec![0u8; 256];
        let mut x: u16 = 1;
        for i in 0..255 {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & 0x100 != 0 {
                x ^= PRIMITIVE_POLY;
            }
        }
        for i in 255..512 {
            exp[i] = exp[i - 255];
        }
        Gf256 { exp, log }
    }

    /// Shared default field.
    pub fn standard() -> &'static Gf256 {
        static FIELD: OnceLock<Gf256> = OnceLock::new();
        FIELD.get_or_init(Gf256::new)
    }

    /// Field with a damaged antilog table, for exercising the validation suite.
    pub fn corrupted() -> Self {
        let mut f = Self::new();
        f.exp.swap(17, 18);
        f.exp[17 + 255] = f.exp[17];
        f.exp[18 + 255] = f.exp[18];
        f
    }

    #[inline]
    pub fn exp(&self, i: usize) -> u8 {
        self.exp[i % 255]
    }

    #[inline]
    pub fn log(&self, a: u8) -> usize {
        debug_assert!(a != 0);
        self.log[a as usize] as usize
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    #[inline]
    pub fn div(&self, a: u8, b: u8) -> u8 {
        assert!(b != 0, "division by zero in GF(256)");
        if a == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + 255 - self.log[b as usize] as usize]
        }
    }

    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        self.div(1, a)
    }

    /// Evaluates a polynomial stored lowest degree first.
    pub fn eval(&self, poly: &[u8], x: u8) -> u8 {
        poly.iter().rev().fold(0u8, |acc, &c| self.mul(acc, x) ^ c)
    }

    /// Product of polynomials stored lowest degree first.
    pub fn poly_mul(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        let mut out = vec![0u8; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] ^= self.mul(x, y);
            }
        }
        out
    }
}
