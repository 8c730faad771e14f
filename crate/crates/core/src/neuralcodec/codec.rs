use ndarray::{s, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{Activation, Mlp};
use super::quant;
use crate::bits::Bits;
use crate::error::{arg, Error, Result};
use crate::kpstream::KeypointFrame;
use crate::phy::{quantized_levels, quantized_normalizer, ConstellationMode};

pub const HIDDEN: [usize; 2] = [512, 256];
pub const DEFAULT_SYMBOLS: usize = 80;
pub const DEFAULT_QUANT_BITS: u32 = 2;
/// Soft channel observations are clipped to this magnitude before decoding
/// (full resolution; the quantized mode clips at its outermost level).
pub const SOFT_INPUT_CLIP: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Stage-1 bits only.
    First,
    /// Stage-1 and incremental bits decoded jointly.
    Combined,
}

/// How encoder outputs reach the channel.
#[derive(Clone, Debug, PartialEq)]
pub enum Transport {
    /// Quantized, Gray-coded bit stream.
    Bits,
    /// Encoder outputs (tanh) power-normalized per frame and sent as reals.
    FullResolution,
    /// Each quantized symbol picks one of four learned amplitudes
    /// `α·c₁ + β·c₂`; `powers` are per-slot transmit powers.
    QuantizedResolution { alpha: f64, beta: f64, powers: Vec<f64> },
}

impl Transport {
    pub fn name(&self) -> &'static str {
        match self {
            Transport::Bits => "bits",
            Transport::FullResolution => "full_resolution",
            Transport::QuantizedResolution { .. } => "quantized_resolution",
        }
    }
}

/// Incremental encoder and the decoder fed by both transmissions.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage2 {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

/// Encoder `2n → 512 → 256 → m` and decoder `m → 512 → 256 → 2n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CodecModel {
    pub n: usize,
    pub m: usize,
    pub quant_bits: u32,
    pub transport: Transport,
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub stage2: Option<Stage2>,
}

fn check_shape(n: usize, m: usize, quant_bits: u32) -> Result<()> {
    if n == 0 || m == 0 {
        return arg("n and m must be positive");
    }
    if !(1..=8).contains(&quant_bits) {
        return arg(format!("quant_bits {quant_bits} outside 1..=8"));
    }
    Ok(())
}

impl CodecModel {
    /// Bit-transport codec with freshly initialized weights.
    pub fn new(n: usize, m: usize, quant_bits: u32, seed: u64) -> Result<Self> {
        check_shape(n, m, quant_bits)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let relu = Activation::Relu;
        let encoder = Mlp::new(2 * n, &[HIDDEN[0], HIDDEN[1], m], &[relu, relu, Activation::Sigmoid], &mut rng);
        let decoder = Mlp::new(m, &[HIDDEN[0], HIDDEN[1], 2 * n], &[relu, relu, Activation::Tanh], &mut rng);
        Ok(CodecModel { n, m, quant_bits, transport: Transport::Bits, encoder, decoder, stage2: None })
    }

    pub fn with_defaults(seed: u64) -> Self {
        Self::new(crate::kpstream::DEFAULT_KEYPOINTS, DEFAULT_SYMBOLS, DEFAULT_QUANT_BITS, seed).expect("default shape is valid")
    }

    /// Symbol-transport codec. `m` real symbols ride on `m/2` complex channel uses.
    pub fn new_symbol(n: usize, m: usize, transport: Transport, seed: u64) -> Result<Self> {
        if m % 2 != 0 {
            return arg("symbol transports need an even m");
        }
        let mut model = Self::new(n, m, 2, seed)?;
        match &transport {
            Transport::Bits => {}
            Transport::FullResolution => model.encoder.layers[2].activation = Activation::Tanh,
            Transport::QuantizedResolution { powers, alpha, beta } => {
                ConstellationMode::quantized(*alpha, *beta, powers.clone()).validate(powers.len())?;
            }
        }
        model.transport = transport;
        Ok(model)
    }

    /// Payload bits of one stage.
    pub fn bits_per_frame(&self) -> usize {
        self.m * self.quant_bits as usize
    }

    pub fn input_width(&self) -> usize {
        2 * self.n
    }

    /// Channel model used on the air for symbol transports.
    pub fn constellation_mode(&self, subchannels: usize) -> ConstellationMode {
        match &self.transport {
            Transport::QuantizedResolution { alpha, beta, powers } => ConstellationMode::quantized(*alpha, *beta, powers.clone()),
            Transport::FullResolution => ConstellationMode::full_resolution(subchannels),
            Transport::Bits => ConstellationMode::qam16(subchannels),
        }
    }

    fn frame_row(&self, k: &KeypointFrame) -> Result<Array2<f64>> {
        if k.n() != self.n {
            return arg(format!("frame has {} keypoints, model expects {}", k.n(), self.n));
        }
        Ok(Array2::from_shape_vec((1, 2 * self.n), k.flatten()).expect("shape"))
    }

    fn require_bits(&self) -> Result<()> {
        match self.transport {
            Transport::Bits => Ok(()),
            _ => arg(format!("{} codec carries symbols, not bits", self.transport.name())),
        }
    }

    pub fn stage2(&self) -> Result<&Stage2> {
        self.stage2.as_ref().ok_or_else(|| Error::State("model has no stage-2 weights".into()))
    }

    /// Raw encoder outputs for a batch of flattened frames.
    pub fn encode_values(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.encoder.forward(x)
    }

    /// Stage-1 bits `Q(f_en(k))`.
    pub fn encode(&self, k: &KeypointFrame) -> Result<Bits> {
        self.require_bits()?;
        let v = self.encoder.forward(self.frame_row(k)?.view());
        Ok(quantize_row(v.row(0).iter().copied(), self.quant_bits))
    }

    /// Incremental stage-2 bits.
    pub fn encode_stage2(&self, k: &KeypointFrame) -> Result<Bits> {
        self.require_bits()?;
        let x = self.frame_row(k)?;
        let v = self.stage2()?.encoder.forward(x.view());
        Ok(quantize_row(v.row(0).iter().copied(), self.quant_bits))
    }

    /// Dequantized level values of a bit vector, one per symbol.
    pub fn dequantize(&self, bits: &[u8]) -> Vec<f64> {
        bits.chunks(self.quant_bits as usize).map(quant::dequantize).collect()
    }

    /// Decoder for `stage`, fed with `m` (first) or `2m` (combined) values per row.
    pub fn decode_values(&self, values: ArrayView2<f64>, stage: Stage) -> Result<Array2<f64>> {
        let dec = match stage {
            Stage::First => &self.decoder,
            Stage::Combined => &self.stage2()?.decoder,
        };
        if values.ncols() != dec.input_width() {
            return arg(format!("decoder expects {} inputs, got {}", dec.input_width(), values.ncols()));
        }
        Ok(dec.forward(values))
    }

    pub fn decode(&self, bits: &Bits, stage: Stage) -> Result<KeypointFrame> {
        self.require_bits()?;
        let expected = match stage {
            Stage::First => self.bits_per_frame(),
            Stage::Combined => 2 * self.bits_per_frame(),
        };
        if bits.len() != expected {
            return arg(format!("{:?} decode expects {expected} bits, got {}", stage, bits.len()));
        }
        let v = self.dequantize(bits);
        let out = self.decode_values(Array2::from_shape_vec((1, v.len()), v).expect("shape").view(), stage)?;
        KeypointFrame::from_flat(out.row(0).as_slice().expect("contiguous"))
    }

    /// Decodes many frames in one batched pass.
    pub fn decode_many(&self, received: &[Bits], stage: Stage) -> Result<Vec<KeypointFrame>> {
        if received.is_empty() {
            return Ok(Vec::new());
        }
        let width = match stage {
            Stage::First => self.m,
            Stage::Combined => 2 * self.m,
        };
        let mut x = Array2::zeros((received.len(), width));
        for (i, b) in received.iter().enumerate() {
            if b.len() != width * self.quant_bits as usize {
                return arg(format!("expected {} bits, got {}", width * self.quant_bits as usize, b.len()));
            }
            for (j, v) in self.dequantize(b).into_iter().enumerate() {
                x[[i, j]] = v;
            }
        }
        let out = self.decode_values(x.view(), stage)?;
        out.axis_iter(Axis(0)).map(|r| KeypointFrame::from_flat(&r.to_vec())).collect()
    }

    /// Transmit amplitudes for symbol transports (`m` reals per frame).
    pub fn encode_symbols(&self, k: &KeypointFrame) -> Result<Vec<f64>> {
        let v = self.encoder.forward(self.frame_row(k)?.view());
        let row: Vec<f64> = v.row(0).to_vec();
        match &self.transport {
            Transport::Bits => arg("bit codec has no symbol path"),
            Transport::FullResolution => Ok(normalize_power(&row).0),
            Transport::QuantizedResolution { alpha, beta, .. } => Ok(quantized_amplitudes(&row, *alpha, *beta, self.quant_bits)),
        }
    }

    /// Largest soft value the decoder sees. For the quantized mode this is
    /// the outermost level: a deep fade then costs at most the distance to
    /// the far edge of the constellation, as a hard decision would.
    pub fn soft_clip(&self) -> f64 {
        match &self.transport {
            Transport::QuantizedResolution { alpha, beta, .. } => quantized_normalizer(*alpha, *beta) * (alpha.abs() + beta.abs()),
            _ => SOFT_INPUT_CLIP,
        }
    }

    /// Decodes equalized soft reals from a symbol transport.
    pub fn decode_symbols(&self, soft: &[f64]) -> Result<KeypointFrame> {
        if matches!(self.transport, Transport::Bits) {
            return arg("bit codec has no symbol path");
        }
        if soft.len() != self.m {
            return arg(format!("expected {} soft symbols, got {}", self.m, soft.len()));
        }
        let clip = self.soft_clip();
        let x = Array2::from_shape_fn((1, self.m), |(_, j)| soft[j].clamp(-clip, clip));
        let out = self.decoder.forward(x.view());
        KeypointFrame::from_flat(out.row(0).as_slice().expect("contiguous"))
    }

    /// Seeds stage-2 from stage-1: the incremental encoder starts as a copy
    /// of the stage-1 encoder, and the combined decoder averages the two
    /// halves of its input through copies of the stage-1 decoder weights.
    pub fn init_stage2(&mut self) -> Result<()> {
        self.require_bits()?;
        let encoder = self.encoder.clone();
        let mut decoder = self.decoder.clone();
        let first = &self.decoder.layers[0].weights;
        let mut w = Array2::zeros((2 * self.m, first.ncols()));
        w.slice_mut(s![..self.m, ..]).assign(&(first * 0.5));
        w.slice_mut(s![self.m.., ..]).assign(&(first * 0.5));
        decoder.layers[0].weights = w;
        self.stage2 = Some(Stage2 { encoder, decoder });
        Ok(())
    }

    /// Digest of the stage-1 encoder and decoder weights.
    pub fn stage1_digest(&self) -> u64 {
        self.encoder.digest() ^ self.decoder.digest().rotate_left(1)
    }
}

fn quantize_row(values: impl Iterator<Item = f64>, quant_bits: u32) -> Bits {
    let mut out = Vec::new();
    for v in values {
        quant::push_index_bits(&mut out, quant::level_index(v, quant_bits), quant_bits);
    }
    Bits(out)
}

/// Scales a frame of reals to unit average energy per complex symbol.
/// Returns the scaled vector and the scale.
pub fn normalize_power(s: &[f64]) -> (Vec<f64>, f64) {
    let energy: f64 = s.iter().map(|v| v * v).sum::<f64>().max(1e-12);
    let c = (s.len() as f64 / (2.0 * energy)).sqrt();
    (s.iter().map(|v| v * c).collect(), c)
}

/// Normalized quantized-resolution amplitude of each encoder output.
/// Level indices are carried in natural binary so amplitude grows with
/// the level.
pub fn quantized_amplitudes(values: &[f64], alpha: f64, beta: f64, quant_bits: u32) -> Vec<f64> {
    debug_assert_eq!(quant_bits, 2);
    let levels = quantized_levels(alpha, beta);
    let c = quantized_normalizer(alpha, beta);
    values.iter().map(|&v| levels[quant::level_index(v, quant_bits) as usize] * c).collect()
}
