use std::sync::Arc;

use rand::Rng;

use super::gf256::Gf256;
use crate::error::{arg, Result};

pub const RS_MOTHER_LENGTH: usize = 255;
pub const RS_INFO_SYMBOLS: usize = 64;

/// Systematic, possibly shortened, Reed–Solomon code over GF(256) with
/// generator roots `α^0 … α^{n−k−1}`.
///
/// Codeword symbol `j` is the coefficient of `x^{n−1−j}`, so the first `k`
/// symbols are the information symbols.
#[derive(Clone, Debug)]
pub struct RsCode {
    n: usize,
    k: usize,
    field: Arc<Gf256>,
    /// Generator polynomial, lowest degree first, monic.
    generator: Vec<u8>,
}

impl RsCode {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Self::with_field(n, k, Gf256::standard().clone())
    }

    pub fn with_field(n: usize, k: usize, field: Gf256) -> Result<Self> {
        if !(1 <= k && k < n && n <= 255) {
            return arg(format!("RS({n},{k}) needs 1 ≤ k < n ≤ 255"));
        }
        let mut generator = vec![1u8];
        for i in 0..n - k {
            generator = field.poly_mul(&generator, &[field.exp(i), 1]);
        }
        Ok(RsCode { n, k, field: Arc::new(field), generator })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn parity(&self) -> usize {
        self.n - self.k
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return arg(format!("expected {} information symbols, got {}", self.k, info.len()));
        }
        let f = &self.field;
        let p = self.parity();
        // long division of info(x)·x^p by the monic generator, highest degree first
        let mut rem = vec![0u8; p];
        for &d in info {
            let coef = d ^ rem[0];
            rem.rotate_left(1);
            rem[p - 1] = 0;
            if coef != 0 {
                for i in 0..p {
                    rem[i] ^= f.mul(coef, self.generator[p - 1 - i]);
                }
            }
        }
        let mut out = info.to_vec();
        out.extend_from_slice(&rem);
        Ok(out)
    }

    /// Locator `X_j = α^{n−1−j}` of codeword position `j`.
    fn locator(&self, j: usize) -> u8 {
        self.field.exp(self.n - 1 - j)
    }

    /// `S_i = r(α^i)` for `i = 0 … n−k−1`.
    pub fn syndromes(&self, received: &[u8]) -> Vec<u8> {
        let f = &self.field;
        (0..self.parity())
            .map(|i| {
                let a = f.exp(i);
                received.iter().fold(0u8, |acc, &c| f.mul(acc, a) ^ c)
            })
            .collect()
    }

    /// Errors-and-erasures decoding. Returns the information symbols and
    /// whether decoding succeeded; on failure the received systematic part
    /// is returned unchanged.
    pub fn decode(&self, received: &[u8], erasures: &[bool]) -> Result<(Vec<u8>, bool)> {
        if received.len() != self.n || erasures.len() != self.n {
            return arg(format!("expected {} symbols and erasure flags", self.n));
        }
        let fallback = received[..self.k].to_vec();
        match self.correct(received, erasures) {
            Some(word) => Ok((word[..self.k].to_vec(), true)),
            None => Ok((fallback, false)),
        }
    }

    fn correct(&self, received: &[u8], erasures: &[bool]) -> Option<Vec<u8>> {
        let f = &self.field;
        let nsym = self.parity();
        let erased: Vec<usize> = (0..self.n).filter(|&j| erasures[j]).collect();
        let nf = erased.len();
        if nf > nsym {
            return None;
        }
        let mut word = received.to_vec();
        for &j in &erased {
            word[j] = 0;
        }
        let synd = self.syndromes(&word);
        if synd.iter().all(|&s| s == 0) {
            return Some(word);
        }

        // erasure locator Γ(x) = Π (1 − X_j x)
        let mut gamma = vec![1u8];
        for &j in &erased {
            gamma = f.poly_mul(&gamma, &[1, self.locator(j)]);
        }

        // Berlekamp–Massey seeded with the erasure locator
        let mut lambda = gamma.clone();
        let mut b = gamma;
        let mut l = nf;
        for r in (nf + 1)..=nsym {
            let mut delta = 0u8;
            for (i, &c) in lambda.iter().enumerate() {
                if i < r {
                    delta ^= f.mul(c, synd[r - 1 - i]);
                }
            }
            b.insert(0, 0);
            if delta == 0 {
                continue;
            }
            let mut t = lambda.clone();
            if t.len() < b.len() {
                t.resize(b.len(), 0);
            }
            for (i, &c) in b.iter().enumerate() {
                t[i] ^= f.mul(delta, c);
            }
            if 2 * l < r + nf {
                let inv = f.inv(delta);
                b = lambda.iter().map(|&c| f.mul(c, inv)).collect();
                l = r + nf - l;
            }
            lambda = t;
        }
        while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
            lambda.pop();
        }
        let degree = lambda.len() - 1;
        if degree != l || degree > nsym {
            return None;
        }

        // Ω(x) = S(x) Λ(x) mod x^nsym
        let mut omega = f.poly_mul(&synd, &lambda);
        omega.truncate(nsym);
        // formal derivative Λ'(x)
        let deriv: Vec<u8> = (1..lambda.len()).map(|i| if i % 2 == 1 { lambda[i] } else { 0 }).collect();

        let mut roots = 0usize;
        for j in 0..self.n {
            let x = self.locator(j);
            let x_inv = f.inv(x);
            if f.eval(&lambda, x_inv) != 0 {
                continue;
            }
            roots += 1;
            let den = f.eval(&deriv, x_inv);
            if den == 0 {
                return None;
            }
            word[j] ^= f.mul(x, f.div(f.eval(&omega, x_inv), den));
        }
        if roots != degree {
            return None;
        }
        if self.syndromes(&word).iter().any(|&s| s != 0) {
            return None;
        }
        Some(word)
    }
}

/// Test-pattern helper: adds nonzero errors at `e` random positions and
/// erases (randomizes and flags) `f` other positions.
pub fn damage<R: Rng>(rng: &mut R, word: &[u8], e: usize, f: usize) -> (Vec<u8>, Vec<bool>) {
    let pos = rand::seq::index::sample(rng, word.len(), e + f).into_vec();
    let mut out = word.to_vec();
    let mut mask = vec![false; word.len()];
    for &p in &pos[..e] {
        out[p] ^= rng.gen_range(1..=255u8);
    }
    for &p in &pos[e..] {
        mask[p] = true;
        out[p] = rng.gen();
    }
    (out, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_info(rng: &mut ChaCha8Rng, k: usize) -> Vec<u8> {
        (0..k).map(|_| rng.gen()).collect()
    }

    #[test]
    fn systematic_and_zero() {
        let code = RsCode::new(255, 64).unwrap();
        assert_eq!(code.encode(&[0; 64]).unwrap(), vec![0; 255]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let info = random_info(&mut rng, 64);
        let c = code.encode(&info).unwrap();
        assert_eq!(&c[..64], &info[..]);
        assert!(code.syndromes(&c).iter().all(|&s| s == 0));
        assert_eq!(code.decode(&c, &[false; 255]).unwrap(), (info, true));
    }

    #[test]
    fn generator_roots() {
        let code = RsCode::new(255, 64).unwrap();
        let f = Gf256::standard();
        for i in 0..191 {
            assert_eq!(f.eval(&code.generator, f.exp(i)), 0);
        }
        assert_ne!(f.eval(&code.generator, f.exp(191)), 0);
    }

    #[test]
    fn distance_between_codewords() {
        let code = RsCode::new(255, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = code.encode(&random_info(&mut rng, 64)).unwrap();
            let mut info = random_info(&mut rng, 64);
            // also pairs differing in a single information symbol
            if rng.gen_bool(0.5) {
                info = a[..64].to_vec();
                info[rng.gen_range(0..64)] ^= rng.gen_range(1..=255u8);
            }
            let b = code.encode(&info).unwrap();
            if a != b {
                assert!(a.iter().zip(&b).filter(|(x, y)| x != y).count() >= 192);
            }
        }
    }

    #[test]
    fn radius_samples() {
        let code = RsCode::new(255, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (e, f) in [(95, 0), (31, 128), (0, 191), (60, 71), (1, 189)] {
            for _ in 0..50 {
                let info = random_info(&mut rng, 64);
                let (r, mask) = damage(&mut rng, &code.encode(&info).unwrap(), e, f);
                assert_eq!(code.decode(&r, &mask).unwrap(), (info.clone(), true), "e={e} f={f}");
            }
        }
    }

    #[test]
    fn beyond_radius_reports_failure() {
        let code = RsCode::new(255, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ok = 0;
        for _ in 0..200 {
            let info = random_info(&mut rng, 64);
            let (r, mask) = damage(&mut rng, &code.encode(&info).unwrap(), 32, 128);
            ok += code.decode(&r, &mask).unwrap().1 as usize;
        }
        assert!(ok <= 2, "{ok} false successes");
    }

    #[test]
    fn shortened_code_exhaustive_positions() {
        let code = RsCode::new(15, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let info = random_info(&mut rng, 7);
        let word = code.encode(&info).unwrap();
        let mut checked = 0usize;
        for emask in 0u32..(1 << 15) {
            let e = emask.count_ones() as usize;
            if 2 * e > 8 {
                continue;
            }
            let rest: Vec<usize> = (0..15).filter(|&p| emask & (1 << p) == 0).collect();
            let budget = 8 - 2 * e;
            for fmask in 0u32..(1 << rest.len()) {
                if fmask.count_ones() as usize > budget {
                    continue;
                }
                let mut r = word.clone();
                let mut erased = vec![false; 15];
                for p in 0..15 {
                    if emask & (1 << p) != 0 {
                        r[p] ^= rng.gen_range(1..=255u8);
                    }
                }
                for (i, &p) in rest.iter().enumerate() {
                    if fmask & (1 << i) != 0 {
                        erased[p] = true;
                        r[p] = rng.gen();
                    }
                }
                let (out, ok) = code.decode(&r, &erased).unwrap();
                assert!(ok && out == info, "errors {emask:015b} erasures {fmask:b}");
                checked += 1;
            }
        }
        assert!(checked > 200_000);
    }

    #[test]
    fn bad_arguments() {
        assert!(RsCode::new(256, 64).is_err());
        assert!(RsCode::new(64, 64).is_err());
        assert!(RsCode::new(10, 0).is_err());
        let code = RsCode::new(15, 7).unwrap();
        assert!(code.encode(&[0; 6]).is_err());
        assert!(code.decode(&[0; 15], &[false; 14]).is_err());
    }

    #[test]
    fn corrupted_field_breaks_decoding() {
        let code = RsCode::with_field(255, 64, Gf256::corrupted()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut failures = 0;
        for _ in 0..20 {
            let info = random_info(&mut rng, 64);
            let (r, mask) = damage(&mut rng, &code.encode(&info).unwrap(), 40, 50);
            if code.decode(&r, &mask).unwrap() != (info, true) {
                failures += 1;
            }
        }
        assert!(failures > 0);
    }
}
