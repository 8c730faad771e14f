//! Semantic keypoint transport for video conferencing links.
//!
//! Facial keypoints are compressed by a small trainable encoder with bit
//! quantization, carried over simulated binary-symmetric or OFDM fading
//! channels, and protected either by a Reed–Solomon incremental-redundancy
//! HARQ baseline or by a semantic HARQ whose ACK comes from a learned
//! fluency detector.
//!
//! Module map:
//!
//! - [`kpstream`]: keypoint frames and streams, the AKD metric, dataset splits
//! - [`neuralcodec`]: encoder / quantizer / decoder, training, gradient check
//! - [`fec`]: GF(256) Reed–Solomon errors-and-erasures codec and CRC-32
//! - [`phy`]: BSC, Rayleigh OFDM subchannels, 16-QAM, CSI sorting, learned constellations
//! - [`harq`]: session state machines for RS-IR-HARQ, SVC-HARQ and SVC-CSI-HARQ
//! - [`harness`]: configuration, seeding, sweeps, CSV export, validation suite

pub mod bits;
pub mod error;
pub mod fec;
pub mod harness;
pub mod harq;
pub mod kpstream;
pub mod neuralcodec;
pub mod phy;

pub use bits::Bits;
pub use error::{Error, Result};
pub use kpstream::{akd, KeypointFrame, KeypointStream, MotionProfile};
pub use neuralcodec::{CodecModel, Stage, TrainConfig};
