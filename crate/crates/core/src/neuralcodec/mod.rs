//! Keypoint encoder, quantizer and decoder with their training loops.
//!
//! The encoder maps `2n` coordinates through widths `[512, 256, m]`
//! (relu, relu, sigmoid); each output is quantized to `quant_bits` Gray-coded
//! bits. The decoder mirrors it with widths `[512, 256, 2n]` and a tanh
//! output. Training back-propagates through the quantizer and channel with
//! a straight-through gradient.

mod codec;
mod gradcheck;
pub mod mlp;
mod persist;
pub mod quant;
mod train;

pub use codec::{normalize_power, quantized_amplitudes, CodecModel, Stage, Stage2, Transport, DEFAULT_QUANT_BITS, DEFAULT_SYMBOLS, HIDDEN, SOFT_INPUT_CLIP};
pub use gradcheck::{grad_check, grad_check_detailed, GradCheck, GRAD_FLOOR};
pub use persist::{load_model, read_mlp, read_model, save_model, write_mlp, write_model, Tokens};
pub use train::{train_stage1, train_stage2, train_symbol_codec, BerSpec, LossHistory, TrainConfig, TrainLink, Trained};
