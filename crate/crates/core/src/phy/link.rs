use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{bsc_with, qam, realize_channel_with, snr_db_to_noise_power, sort_csi, ChannelProfile, ChannelRealization, CsiPermutation};
use crate::bits::Bits;
use crate::error::{arg, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    /// Gray 16-QAM with hard decisions.
    Qam16,
    /// Encoder outputs sent directly as real symbol components.
    FullResolution,
    /// Bit pairs mapped to `α·c₁ + β·c₂` with `c ∈ {−1, +1}`.
    QuantizedResolution,
}

impl Modulation {
    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qam16 => "qam16",
            Modulation::FullResolution => "full_resolution",
            Modulation::QuantizedResolution => "quantized_resolution",
        }
    }
}

/// Constellation plus per-slot power allocation.
///
/// `powers[r]` is the power of logical slot `r`; with CSI on, slot `r`
/// rides on the `r`-th strongest subchannel. Powers average to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstellationMode {
    pub modulation: Modulation,
    pub alpha: f64,
    pub beta: f64,
    pub powers: Vec<f64>,
}

impl ConstellationMode {
    pub fn qam16(subchannels: usize) -> Self {
        ConstellationMode { modulation: Modulation::Qam16, alpha: 2.0, beta: 1.0, powers: vec![1.0; subchannels] }
    }

    pub fn full_resolution(subchannels: usize) -> Self {
        ConstellationMode { modulation: Modulation::FullResolution, ..Self::qam16(subchannels) }
    }

    pub fn quantized(alpha: f64, beta: f64, powers: Vec<f64>) -> Self {
        ConstellationMode { modulation: Modulation::QuantizedResolution, alpha, beta, powers }
    }

    pub fn validate(&self, subchannels: usize) -> Result<()> {
        if self.powers.len() != subchannels {
            return arg(format!("{} powers for {} subchannels", self.powers.len(), subchannels));
        }
        if self.powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return arg("powers must be positive");
        }
        let total: f64 = self.powers.iter().sum();
        if (total - subchannels as f64).abs() > 1e-6 * subchannels as f64 {
            return arg(format!("powers sum to {total}, budget is {subchannels}"));
        }
        if self.modulation == Modulation::QuantizedResolution && !(self.alpha.is_finite() && self.beta.is_finite() && self.alpha.hypot(self.beta) > 0.0) {
            return arg("alpha and beta must be finite and not both zero");
        }
        Ok(())
    }
}

/// Round-robin placement of complex symbol `j`: returns the logical slot
/// `j mod L` and the physical subchannel that carries it.
pub fn subchannel_of(j: usize, perm: &CsiPermutation) -> (usize, usize) {
    let slot = j % perm.len();
    (slot, perm.physical(slot))
}

fn permutation(ch: &ChannelRealization, use_csi: bool) -> CsiPermutation {
    if use_csi {
        sort_csi(ch)
    } else {
        CsiPermutation::identity(ch.subchannels())
    }
}

fn complex_noise<R: Rng>(rng: &mut R, noise_power: f64) -> Complex64 {
    let s = (noise_power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Post-equalization noise for `symbols` complex symbols at unit power:
/// `slots[j]` is the logical slot of symbol `j` and `noise[j] = n_j / h_l`.
/// A symbol sent with power `ρ` on that slot is received as
/// `s + noise[j] / √ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EqualizedNoise {
    pub slots: Vec<usize>,
    pub noise: Vec<Complex64>,
}

pub fn equalized_noise<R: Rng>(ch: &ChannelRealization, symbols: usize, use_csi: bool, rng: &mut R) -> EqualizedNoise {
    let perm = permutation(ch, use_csi);
    let mut slots = Vec::with_capacity(symbols);
    let mut noise = Vec::with_capacity(symbols);
    for j in 0..symbols {
        let (slot, l) = subchannel_of(j, &perm);
        slots.push(slot);
        noise.push(complex_noise(rng, ch.noise_power) / ch.gains[l]);
    }
    EqualizedNoise { slots, noise }
}

/// Passes complex symbols through the channel and equalizes with the known
/// gain: returns `y / (h √ρ)` per symbol.
fn pass<R: Rng>(symbols: &[Complex64], ch: &ChannelRealization, powers: &[f64], use_csi: bool, rng: &mut R) -> Vec<Complex64> {
    let eq = equalized_noise(ch, symbols.len(), use_csi, rng);
    symbols.iter().zip(eq.slots.iter().zip(&eq.noise)).map(|(&s, (&slot, &u))| s + u / powers[slot].sqrt()).collect()
}

/// Outcome of a hard-decision bit transmission.
#[derive(Clone, Debug, PartialEq)]
pub struct BitTransmission {
    pub received: Bits,
    /// 1 where the received bit differs from the sent one.
    pub flips: Bits,
    pub ber: f64,
}

impl BitTransmission {
    fn new(sent: &Bits, received: Bits) -> Self {
        let flips: Bits = sent.iter().zip(received.iter()).map(|(a, b)| a ^ b).collect();
        let errors = flips.iter().filter(|&&f| f == 1).count();
        let ber = if sent.is_empty() { 0.0 } else { errors as f64 / sent.len() as f64 };
        BitTransmission { received, flips, ber }
    }
}

/// Unnormalized quantized-mode amplitudes for the four natural-binary bit
/// pairs `00, 01, 10, 11`.
pub fn quantized_levels(alpha: f64, beta: f64) -> [f64; 4] {
    [-alpha - beta, -alpha + beta, alpha - beta, alpha + beta]
}

/// Scale giving unit average complex-symbol energy over equiprobable pairs.
pub fn quantized_normalizer(alpha: f64, beta: f64) -> f64 {
    1.0 / (2.0 * (alpha * alpha + beta * beta)).sqrt()
}

fn quantized_symbols(bits: &[u8], alpha: f64, beta: f64) -> Vec<f64> {
    let levels = quantized_levels(alpha, beta);
    let c = quantized_normalizer(alpha, beta);
    bits.chunks(2).map(|p| levels[((p[0] & 1) << 1 | (p[1] & 1)) as usize] * c).collect()
}

fn to_complex(reals: &[f64]) -> Vec<Complex64> {
    reals.chunks(2).map(|p| Complex64::new(p[0], p.get(1).copied().unwrap_or(0.0))).collect()
}

fn to_reals(symbols: &[Complex64], len: usize) -> Vec<f64> {
    symbols.iter().flat_map(|s| [s.re, s.im]).take(len).collect()
}

/// Sends bits as hard-decision constellation symbols over OFDM subchannels.
///
/// Supports `Qam16` (4 bits per symbol) and `QuantizedResolution` (2 bits
/// per real axis, nearest-amplitude decision).
pub fn transmit_bits<R: Rng>(bits: &Bits, ch: &ChannelRealization, mode: &ConstellationMode, use_csi: bool, rng: &mut R) -> Result<BitTransmission> {
    mode.validate(ch.subchannels())?;
    match mode.modulation {
        Modulation::Qam16 => {
            if bits.len() % qam::BITS_PER_SYMBOL != 0 {
                return arg(format!("{} bits is not a multiple of 4", bits.len()));
            }
            let eq = pass(&qam::modulate(bits), ch, &mode.powers, use_csi, rng);
            Ok(BitTransmission::new(bits, Bits(qam::demodulate(&eq))))
        }
        Modulation::QuantizedResolution => {
            if bits.len() % 4 != 0 {
                return arg(format!("{} bits is not a multiple of 4", bits.len()));
            }
            let soft = transmit_quantized(bits, ch, mode, use_csi, rng)?;
            let c = quantized_normalizer(mode.alpha, mode.beta);
            let levels = quantized_levels(mode.alpha, mode.beta).map(|v| v * c);
            let mut out = Vec::with_capacity(bits.len());
            for v in soft {
                let idx = (0..4).min_by(|&a, &b| (v - levels[a]).abs().total_cmp(&(v - levels[b]).abs())).unwrap_or(0);
                out.push((idx >> 1) as u8);
                out.push((idx & 1) as u8);
            }
            Ok(BitTransmission::new(bits, Bits(out)))
        }
        Modulation::FullResolution => arg("full-resolution mode carries reals, not bits"),
    }
}

/// Sends real symbol components (paired into complex symbols) and returns
/// the equalized soft reals `s + n / (h √ρ)`.
pub fn transmit_symbols<R: Rng>(reals: &[f64], ch: &ChannelRealization, mode: &ConstellationMode, use_csi: bool, rng: &mut R) -> Result<Vec<f64>> {
    if mode.modulation == Modulation::Qam16 {
        return arg("qam16 has no soft-symbol path");
    }
    mode.validate(ch.subchannels())?;
    Ok(to_reals(&pass(&to_complex(reals), ch, &mode.powers, use_csi, rng), reals.len()))
}

/// Maps bit pairs through the quantized-resolution constellation and
/// returns equalized soft amplitudes, one per pair.
pub fn transmit_quantized<R: Rng>(bits: &Bits, ch: &ChannelRealization, mode: &ConstellationMode, use_csi: bool, rng: &mut R) -> Result<Vec<f64>> {
    if bits.len() % 2 != 0 {
        return arg("quantized mode needs an even bit count");
    }
    let reals = quantized_symbols(bits, mode.alpha, mode.beta);
    transmit_symbols(&reals, ch, &ConstellationMode { modulation: Modulation::QuantizedResolution, ..mode.clone() }, use_csi, rng)
}

/// A bit pipe used by the HARQ sessions.
#[derive(Clone, Debug, PartialEq)]
pub enum BitLink {
    Bsc { ber: f64 },
    /// 16-QAM over a fresh Rayleigh realization per transmission.
    Ofdm { profile: ChannelProfile, snr_db: f64, use_csi: bool },
}

impl BitLink {
    pub fn transmit<R: Rng>(&self, bits: &Bits, rng: &mut R) -> Result<Bits> {
        match self {
            BitLink::Bsc { ber } => bsc_with(bits, *ber, rng),
            BitLink::Ofdm { profile, snr_db, use_csi } => {
                let ch = realize_channel_with(rng, profile, snr_db_to_noise_power(*snr_db))?;
                let mode = ConstellationMode::qam16(profile.subchannels);
                Ok(transmit_bits(bits, &ch, &mode, *use_csi, rng)?.received)
            }
        }
    }

    pub fn without_csi(&self) -> BitLink {
        self.with_csi(false)
    }

    /// Same link with CSI sorting switched on or off (no effect on a BSC).
    pub fn with_csi(&self, use_csi: bool) -> BitLink {
        match self {
            BitLink::Ofdm { profile, snr_db, .. } => BitLink::Ofdm { profile: *profile, snr_db: *snr_db, use_csi },
            other => other.clone(),
        }
    }

    /// Channel parameter reported in trial records.
    pub fn parameter(&self) -> f64 {
        match self {
            BitLink::Bsc { ber } => *ber,
            BitLink::Ofdm { snr_db, .. } => *snr_db,
        }
    }
}
