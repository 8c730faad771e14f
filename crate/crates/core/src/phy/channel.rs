use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bits::Bits;
use crate::error::{arg, Result};

/// Multipath statistics of a frequency-selective channel.
#[derive(Clone, Copy, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelProfile {
    /// Number of parallel flat-fading subchannels `L`.
    pub subchannels: usize,
    pub taps: usize,
    /// Exponential power-delay-profile decay constant, in taps.
    pub pdp_decay: f64,
}

impl Default for ChannelProfile {
    fn default() -> Self {
        Self::matched()
    }
}

impl ChannelProfile {
    /// 16 subchannels, 3-tap exponential PDP.
    pub fn matched() -> Self {
        ChannelProfile { subchannels: 16, taps: 3, pdp_decay: 1.0 }
    }

    /// Untrained 5-tap environment.
    pub fn mismatched() -> Self {
        ChannelProfile { taps: 5, ..Self::matched() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subchannels == 0 || self.taps == 0 {
            return arg("subchannel and tap counts must be positive");
        }
        if self.taps > self.subchannels {
            return arg(format!("{} taps exceed {} subchannels", self.taps, self.subchannels));
        }
        if !(self.pdp_decay > 0.0) {
            return arg("pdp_decay must be positive");
        }
        Ok(())
    }

    /// Normalized tap variances `∝ exp(−t / decay)` summing to one.
    pub fn tap_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.taps).map(|t| (-(t as f64) / self.pdp_decay).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

/// Per-subchannel complex gains plus the receiver noise power.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    /// Complex noise variance `σ²` (linear).
    pub noise_power: f64,
}

pub fn snr_db_to_noise_power(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

impl ChannelRealization {
    /// Unit gain on every subchannel.
    pub fn flat(subchannels: usize, noise_power: f64) -> Self {
        ChannelRealization { gains: vec![Complex64::new(1.0, 0.0); subchannels], noise_power }
    }

    pub fn subchannels(&self) -> usize {
        self.gains.len()
    }

    pub fn gain_power(&self, l: usize) -> f64 {
        self.gains[l].norm_sqr()
    }

    /// `|h_l|² ρ_l / σ²`.
    pub fn subchannel_snr(&self, l: usize, power: f64) -> f64 {
        self.gain_power(l) * power / self.noise_power
    }

    /// `Σ_l ‖h_l s_l‖² / (L σ²)` for per-subchannel symbol blocks `s_l`,
    /// normalized per transmitted symbol.
    pub fn overall_snr(&self, symbols: &[Vec<Complex64>]) -> f64 {
        let mut num = 0.0;
        let mut count = 0usize;
        for (l, block) in symbols.iter().enumerate() {
            num += block.iter().map(|s| (self.gains[l] * s).norm_sqr()).sum::<f64>();
            count += block.len();
        }
        num / (count as f64 * self.noise_power)
    }
}

/// Draws a Rayleigh realization: i.i.d. circular complex Gaussian taps with
/// exponential power-delay profile (unit total power), transformed to the
/// frequency domain with an `L`-point DFT.
pub fn realize_channel_with<R: Rng>(rng: &mut R, profile: &ChannelProfile, noise_power: f64) -> Result<ChannelRealization> {
    profile.validate()?;
    if !(noise_power > 0.0) {
        return arg("noise power must be positive");
    }
    let taps: Vec<Complex64> = profile
        .tap_powers()
        .into_iter()
        .map(|p| {
            let s = (p / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(s * re, s * im)
        })
        .collect();
    let l_count = profile.subchannels;
    let gains = (0..l_count)
        .map(|l| {
            taps.iter()
                .enumerate()
                .map(|(t, a)| a * Complex64::from_polar(1.0, -2.0 * PI * (l * t) as f64 / l_count as f64))
                .sum()
        })
        .collect();
    Ok(ChannelRealization { gains, noise_power })
}

pub fn realize_channel(seed: u64, profile: &ChannelProfile, noise_power: f64) -> Result<ChannelRealization> {
    realize_channel_with(&mut ChaCha8Rng::seed_from_u64(seed), profile, noise_power)
}

/// Binary symmetric channel: flips each bit independently with probability `ber`.
pub fn bsc_with<R: Rng>(bits: &Bits, ber: f64, rng: &mut R) -> Result<Bits> {
    if !(0.0..=0.5).contains(&ber) {
        return arg(format!("ber {ber} outside [0, 0.5]"));
    }
    Ok(bits.iter().map(|&b| if rng.gen::<f64>() < ber { b ^ 1 } else { b }).collect())
}

pub fn bsc(bits: &Bits, ber: f64, seed: u64) -> Result<Bits> {
    bsc_with(bits, ber, &mut ChaCha8Rng::seed_from_u64(seed))
}
