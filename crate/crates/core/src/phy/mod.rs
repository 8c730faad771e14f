//! Channel and modulation layer.
//!
//! Symbols carry unit average energy and subchannel gains have unit mean
//! power, so the average SNR of a realization is `1 / noise_power`.

mod channel;
mod csi;
mod link;
pub mod qam;
pub mod theory;

pub use channel::{bsc, bsc_with, realize_channel, realize_channel_with, snr_db_to_noise_power, ChannelProfile, ChannelRealization};
pub use csi::{sort_csi, CsiPermutation};
pub use link::{
    equalized_noise, quantized_levels, quantized_normalizer, subchannel_of, transmit_bits, transmit_quantized, transmit_symbols, BitLink, BitTransmission, EqualizedNoise,
    ConstellationMode, Modulation,
};
