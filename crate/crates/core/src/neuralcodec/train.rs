use std::io::Write;
use std::path::Path;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::codec::{normalize_power, CodecModel, Transport};
use super::mlp::{Adam, AdamParams, ForwardCache};
use super::quant;
use crate::bits::Bits;
use crate::error::{arg, Error, Result};
use crate::kpstream::{all_frames, KeypointStream};
use crate::phy::{
    bsc_with, equalized_noise, quantized_levels, quantized_normalizer, realize_channel_with, snr_db_to_noise_power, transmit_bits, ChannelProfile,
    ConstellationMode,
};

/// Training bit error rate: fixed, or drawn uniformly per batch.
#[derive(Clone, Copy, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(untagged)]
pub enum BerSpec {
    Fixed(f64),
    Range([f64; 2]),
}

impl BerSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(0.0..=0.5).contains(&lo) || !(0.0..=0.5).contains(&hi) || lo > hi {
            return arg(format!("training BER {lo}..{hi} outside [0, 0.5]"));
        }
        Ok(())
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            BerSpec::Fixed(b) => (b, b),
            BerSpec::Range([lo, hi]) => (lo, hi),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            BerSpec::Fixed(b) => b,
            BerSpec::Range([lo, hi]) => lo + (hi - lo) * rng.gen::<f64>(),
        }
    }
}

/// Channel seen during training.
#[derive(Clone, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrainLink {
    /// Binary symmetric channel at `train_ber`.
    Bsc,
    /// Rayleigh OFDM; each frame draws a channel at an SNR uniform in `snr_db`.
    Ofdm {
        #[serde(default)]
        profile: ChannelProfile,
        snr_db: [f64; 2],
        #[serde(default)]
        use_csi: bool,
    },
}

#[derive(Clone, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub adam: AdamParams,
    pub batch_size: usize,
    pub epochs: usize,
    pub train_ber: BerSpec,
    pub link: TrainLink,
    /// Step size for the constellation parameters `α, β, ρ`.
    pub constellation_learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamParams::default(),
            batch_size: 64,
            epochs: 200,
            train_ber: BerSpec::Fixed(0.0),
            link: TrainLink::Bsc,
            constellation_learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Stage-2 default: BER uniform in `[0, 0.1]` per batch.
    pub fn stage2() -> Self {
        TrainConfig { train_ber: BerSpec::Range([0.0, 0.1]), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.adam.learning_rate > 0.0) || !(self.constellation_learning_rate > 0.0) {
            return arg("step size must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return arg("batch_size and epochs must be positive");
        }
        self.train_ber.validate()?;
        if let TrainLink::Ofdm { profile, snr_db, .. } = &self.link {
            profile.validate()?;
            if !(snr_db[0] <= snr_db[1]) || !snr_db.iter().all(|v| v.is_finite()) {
                return arg("snr_db must be an increasing finite pair");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossHistory {
    /// `(epoch, train_loss, val_loss)`, epochs counted from 1.
    pub rows: Vec<(usize, f64, f64)>,
}

impl LossHistory {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["epoch", "train_loss", "val_loss"])?;
        for (e, t, v) in &self.rows {
            out.write_record([e.to_string(), format!("{t:?}"), format!("{v:?}")])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.1).collect()
    }

    pub fn val_losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.2).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub model: CodecModel,
    pub history: LossHistory,
}

fn frame_matrix(streams: &[KeypointStream], n: usize) -> Result<Array2<f64>> {
    let frames = all_frames(streams);
    if frames.is_empty() {
        return arg("no training frames");
    }
    let mut x = Array2::zeros((frames.len(), 2 * n));
    for (i, f) in frames.iter().enumerate() {
        if f.n() != n {
            return arg(format!("frame has {} keypoints, model expects {n}", f.n()));
        }
        for (j, v) in f.flatten().into_iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    Ok(x)
}

fn gather(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    x.select(Axis(0), idx)
}

/// `‖k − k̂‖² / (2n)` averaged over rows, with its gradient w.r.t. `y`.
fn mse_and_grad(y: &Array2<f64>, x: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let rows = y.nrows() as f64;
    let width = y.ncols() as f64;
    let diff = y - &x;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / (width * rows);
    (loss, diff * (2.0 / (width * rows)))
}

/// One concrete noisy bit pipe for a batch.
enum BatchChannel {
    Bsc(f64),
    Ofdm { profile: ChannelProfile, snr_db: [f64; 2], use_csi: bool },
}

impl BatchChannel {
    fn draw<R: Rng>(cfg: &TrainConfig, use_csi_override: Option<bool>, rng: &mut R) -> Self {
        match &cfg.link {
            TrainLink::Bsc => BatchChannel::Bsc(cfg.train_ber.sample(rng)),
            TrainLink::Ofdm { profile, snr_db, use_csi } => {
                BatchChannel::Ofdm { profile: *profile, snr_db: *snr_db, use_csi: use_csi_override.unwrap_or(*use_csi) }
            }
        }
    }

    fn transmit<R: Rng>(&self, bits: &Bits, rng: &mut R) -> Result<Bits> {
        match self {
            BatchChannel::Bsc(ber) => bsc_with(bits, *ber, rng),
            BatchChannel::Ofdm { profile, snr_db, use_csi } => {
                let snr = snr_db[0] + (snr_db[1] - snr_db[0]) * rng.gen::<f64>();
                let ch = realize_channel_with(rng, profile, snr_db_to_noise_power(snr))?;
                Ok(transmit_bits(bits, &ch, &ConstellationMode::qam16(profile.subchannels), *use_csi, rng)?.received)
            }
        }
    }
}

/// Quantizes each row, sends it through `channel`, and returns the received
/// dequantized values.
fn through_channel<R: Rng>(values: &Array2<f64>, quant_bits: u32, channel: &BatchChannel, rng: &mut R) -> Result<Array2<f64>> {
    let mut out = Array2::zeros(values.raw_dim());
    let qb = quant_bits as usize;
    for (i, row) in values.axis_iter(Axis(0)).enumerate() {
        let mut bits = Vec::with_capacity(row.len() * qb);
        for &v in row {
            quant::push_index_bits(&mut bits, quant::level_index(v, quant_bits), quant_bits);
        }
        let rx = channel.transmit(&Bits(bits), rng)?;
        for (j, chunk) in rx.chunks(qb).enumerate() {
            out[[i, j]] = quant::dequantize(chunk);
        }
    }
    Ok(out)
}

/// Straight-through gradient of the quantizer: identity on `[0, 1]`.
fn straight_through(d: &mut Array2<f64>, values: &Array2<f64>) {
    ndarray::Zip::from(d).and(values).for_each(|g, &v| {
        if !(0.0..=1.0).contains(&v) {
            *g = 0.0;
        }
    });
}

fn check_finite(loss: f64, epoch: usize, batch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Training(format!("non-finite loss {loss} at epoch {epoch}, batch {batch}")))
    }
}

/// Shared epoch loop: shuffles rows, calls `step` per batch, evaluates
/// `val` with a fixed noise seed after each epoch.
fn run_epochs(
    cfg: &TrainConfig,
    x: &Array2<f64>,
    mut step: impl FnMut(&Array2<f64>, &mut ChaCha8Rng) -> Result<f64>,
    mut val: impl FnMut(&mut ChaCha8Rng) -> Result<f64>,
) -> Result<LossHistory> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut history = LossHistory::default();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut count = 0usize;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch = gather(x, idx);
            let loss = step(&batch, &mut rng)?;
            check_finite(loss, epoch, b)?;
            total += loss * idx.len() as f64;
            count += idx.len();
        }
        let val_loss = val(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_7a11))?;
        history.rows.push((epoch, total / count as f64, val_loss));
    }
    Ok(history)
}

fn stage1_loss<R: Rng>(model: &CodecModel, x: &Array2<f64>, cfg: &TrainConfig, rng: &mut R) -> Result<f64> {
    if x.nrows() == 0 {
        return Ok(f64::NAN);
    }
    let channel = BatchChannel::draw(cfg, None, rng);
    let v = model.encoder.forward(x.view());
    let noisy = through_channel(&v, model.quant_bits, &channel, rng)?;
    Ok(mse_and_grad(&model.decoder.forward(noisy.view()), x.view()).0)
}

/// Trains encoder and decoder end to end through quantizer and channel.
pub fn train_stage1(model: &CodecModel, train: &[KeypointStream], val: &[KeypointStream], cfg: &TrainConfig) -> Result<Trained> {
    if !matches!(model.transport, Transport::Bits) {
        return arg("symbol codecs train with train_symbol_codec");
    }
    let x = frame_matrix(train, model.n)?;
    let xv = if val.is_empty() { Array2::zeros((0, 2 * model.n)) } else { frame_matrix(val, model.n)? };
    let mut model = model.clone();
    let mut adam_enc = Adam::new(cfg.adam, &model.encoder);
    let mut adam_dec = Adam::new(cfg.adam, &model.decoder);
    let history = {
        let model_cell = std::cell::RefCell::new(&mut model);
        run_epochs(
            cfg,
            &x,
            |batch, rng| {
                let mut guard = model_cell.borrow_mut();
                let m: &mut CodecModel = &mut guard;
                let channel = BatchChannel::draw(cfg, None, rng);
                let enc = m.encoder.forward_cached(batch.view());
                let noisy = through_channel(&enc.output, m.quant_bits, &channel, rng)?;
                let dec = m.decoder.forward_cached(noisy.view());
                let (loss, d_out) = mse_and_grad(&dec.output, batch.view());
                let (g_dec, mut d_in) = m.decoder.backward(&dec, d_out);
                straight_through(&mut d_in, &enc.output);
                let (g_enc, _) = m.encoder.backward(&enc, d_in);
                adam_dec.step(&mut m.decoder, &g_dec);
                adam_enc.step(&mut m.encoder, &g_enc);
                Ok(loss)
            },
            |rng| stage1_loss(&model_cell.borrow(), &xv, cfg, rng),
        )?
    };
    Ok(Trained { model, history })
}

fn stage2_forward<R: Rng>(
    model: &CodecModel,
    x: &Array2<f64>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(Array2<f64>, ForwardCache, Array2<f64>)> {
    let st2 = model.stage2()?;
    // first transmission keeps the link's CSI setting, the incremental one never sorts
    let ch1 = BatchChannel::draw(cfg, None, rng);
    let ch2 = match ch1 {
        BatchChannel::Bsc(ber) => BatchChannel::Bsc(ber),
        BatchChannel::Ofdm { profile, snr_db, .. } => BatchChannel::Ofdm { profile, snr_db, use_csi: false },
    };
    let v1 = model.encoder.forward(x.view());
    let noisy1 = through_channel(&v1, model.quant_bits, &ch1, rng)?;
    let enc2 = st2.encoder.forward_cached(x.view());
    let noisy2 = through_channel(&enc2.output, model.quant_bits, &ch2, rng)?;
    let input = concatenate(Axis(1), &[noisy1.view(), noisy2.view()]).expect("equal rows");
    Ok((input, enc2, noisy1))
}

/// Trains the incremental encoder and combined decoder with stage-1 frozen.
/// Initializes stage-2 from stage-1 when absent.
pub fn train_stage2(model: &CodecModel, train: &[KeypointStream], val: &[KeypointStream], cfg: &TrainConfig) -> Result<Trained> {
    if !matches!(model.transport, Transport::Bits) {
        return arg("stage-2 requires a bit codec");
    }
    let frozen = model.stage1_digest();
    let mut model = model.clone();
    if model.stage2.is_none() {
        model.init_stage2()?;
    }
    let x = frame_matrix(train, model.n)?;
    let xv = if val.is_empty() { Array2::zeros((0, 2 * model.n)) } else { frame_matrix(val, model.n)? };
    let m_width = model.m;
    let (mut adam_enc, mut adam_dec) = {
        let st2 = model.stage2()?;
        (Adam::new(cfg.adam, &st2.encoder), Adam::new(cfg.adam, &st2.decoder))
    };
    let history = {
        let cell = std::cell::RefCell::new(&mut model);
        run_epochs(
            cfg,
            &x,
            |batch, rng| {
                let mut guard = cell.borrow_mut();
                let m: &mut CodecModel = &mut guard;
                let (input, enc2, _) = stage2_forward(m, batch, cfg, rng)?;
                let st2 = m.stage2.as_mut().expect("initialized");
                let dec = st2.decoder.forward_cached(input.view());
                let (loss, d_out) = mse_and_grad(&dec.output, batch.view());
                let (g_dec, d_in) = st2.decoder.backward(&dec, d_out);
                let mut d2 = d_in.slice(s![.., m_width..]).to_owned();
                straight_through(&mut d2, &enc2.output);
                let (g_enc, _) = st2.encoder.backward(&enc2, d2);
                adam_dec.step(&mut st2.decoder, &g_dec);
                adam_enc.step(&mut st2.encoder, &g_enc);
                Ok(loss)
            },
            |rng| {
                let m = cell.borrow();
                if xv.nrows() == 0 {
                    return Ok(f64::NAN);
                }
                let (input, _, _) = stage2_forward(&m, &xv, cfg, rng)?;
                Ok(mse_and_grad(&m.stage2()?.decoder.forward(input.view()), xv.view()).0)
            },
        )?
    };
    if model.stage1_digest() != frozen {
        return Err(Error::State("stage-1 weights changed during stage-2 training".into()));
    }
    Ok(Trained { model, history })
}

/// Minimal Adam over a flat parameter vector.
struct VecAdam {
    p: AdamParams,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl VecAdam {
    fn new(p: AdamParams, len: usize) -> Self {
        VecAdam { p, t: 0, m: vec![0.0; len], v: vec![0.0; len] }
    }

    fn step(&mut self, x: &mut [f64], g: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.p.beta1.powi(self.t);
        let c2 = 1.0 - self.p.beta2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = self.p.beta1 * self.m[i] + (1.0 - self.p.beta1) * g[i];
            self.v[i] = self.p.beta2 * self.v[i] + (1.0 - self.p.beta2) * g[i] * g[i];
            x[i] -= self.p.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.p.epsilon);
        }
    }
}

/// `ρ = L · softmax(θ)`, so the powers always meet the budget `Σρ = L`.
fn powers_from_logits(theta: &[f64]) -> Vec<f64> {
    let max = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = theta.iter().map(|t| (t - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s * theta.len() as f64).collect()
}

fn logits_from_powers(powers: &[f64]) -> Vec<f64> {
    powers.iter().map(|p| p.ln()).collect()
}

/// Per-real-symbol equalized noise for a batch: `noise[i, j]` at unit power
/// and the logical slot of each real.
fn symbol_noise<R: Rng>(rows: usize, m: usize, profile: &ChannelProfile, snr_db: [f64; 2], use_csi: bool, rng: &mut R) -> Result<(Array2<f64>, Vec<usize>)> {
    let mut noise = Array2::zeros((rows, m));
    let mut slots_all = Vec::with_capacity(rows * m);
    let symbols = m.div_ceil(2);
    for i in 0..rows {
        let snr = snr_db[0] + (snr_db[1] - snr_db[0]) * rng.gen::<f64>();
        let ch = realize_channel_with(rng, profile, snr_db_to_noise_power(snr))?;
        let eq = equalized_noise(&ch, symbols, use_csi, rng);
        for j in 0..m {
            let u = eq.noise[j / 2];
            noise[[i, j]] = if j % 2 == 0 { u.re } else { u.im };
            slots_all.push(eq.slots[j / 2]);
        }
    }
    Ok((noise, slots_all))
}

struct SymbolPass {
    enc: ForwardCache,
    sent: Array2<f64>,
    /// Per-row power normalization (full resolution).
    scale: Vec<f64>,
    noise: Array2<f64>,
    slots: Vec<usize>,
    received: Array2<f64>,
}

fn symbol_forward<R: Rng>(model: &CodecModel, x: ArrayView2<f64>, cfg: &TrainConfig, rng: &mut R) -> Result<SymbolPass> {
    let TrainLink::Ofdm { profile, snr_db, use_csi } = &cfg.link else {
        return arg("symbol codecs train over an OFDM link");
    };
    let enc = model.encoder.forward_cached(x);
    let rows = x.nrows();
    let (sent, scale, powers) = match &model.transport {
        Transport::FullResolution => {
            let mut sent = enc.output.clone();
            let mut scale = Vec::with_capacity(rows);
            for mut row in sent.axis_iter_mut(Axis(0)) {
                let (v, c) = normalize_power(row.as_slice().expect("row"));
                row.assign(&ndarray::ArrayView1::from(&v));
                scale.push(c);
            }
            (sent, scale, vec![1.0; profile.subchannels])
        }
        Transport::QuantizedResolution { alpha, beta, powers } => {
            let levels = quantized_levels(*alpha, *beta);
            let c = quantized_normalizer(*alpha, *beta);
            let sent = enc.output.mapv(|v| levels[quant::level_index(v, model.quant_bits) as usize] * c);
            (sent, Vec::new(), powers.clone())
        }
        Transport::Bits => return arg("bit codecs train with train_stage1"),
    };
    if powers.len() != profile.subchannels {
        return arg("power vector does not match the subchannel count");
    }
    let (noise, slots) = symbol_noise(rows, model.m, profile, *snr_db, *use_csi, rng)?;
    let mut received = sent.clone();
    for (k, (r, &u)) in received.iter_mut().zip(noise.iter()).enumerate() {
        *r += u / powers[slots[k]].sqrt();
    }
    let clip = model.soft_clip();
    received.mapv_inplace(|v| v.clamp(-clip, clip));
    Ok(SymbolPass { enc, sent, scale, noise, slots, received })
}

/// Trains a full- or quantized-resolution codec over OFDM. The quantized
/// mode also learns `α, β` and the slot powers `ρ`.
pub fn train_symbol_codec(model: &CodecModel, train: &[KeypointStream], val: &[KeypointStream], cfg: &TrainConfig) -> Result<Trained> {
    if matches!(model.transport, Transport::Bits) {
        return arg("bit codecs train with train_stage1");
    }
    if !matches!(cfg.link, TrainLink::Ofdm { .. }) {
        return arg("symbol codecs train over an OFDM link");
    }
    let x = frame_matrix(train, model.n)?;
    let xv = if val.is_empty() { Array2::zeros((0, 2 * model.n)) } else { frame_matrix(val, model.n)? };
    let mut model = model.clone();
    let mut adam_enc = Adam::new(cfg.adam, &model.encoder);
    let mut adam_dec = Adam::new(cfg.adam, &model.decoder);
    let subchannels = model.constellation_mode(0).powers.len();
    let mut const_adam = VecAdam::new(AdamParams { learning_rate: cfg.constellation_learning_rate, ..cfg.adam }, 2 + subchannels);
    let mut theta = match &model.transport {
        Transport::QuantizedResolution { powers, .. } => logits_from_powers(powers),
        _ => Vec::new(),
    };
    let history = {
        let cell = std::cell::RefCell::new(&mut model);
        run_epochs(
            cfg,
            &x,
            |batch, rng| {
                let mut guard = cell.borrow_mut();
                let m: &mut CodecModel = &mut guard;
                let pass = symbol_forward(m, batch.view(), cfg, rng)?;
                let dec = m.decoder.forward_cached(pass.received.view());
                let (loss, d_out) = mse_and_grad(&dec.output, batch.view());
                let (g_dec, d_in) = m.decoder.backward(&dec, d_out);
                // clipped entries pass no gradient to the encoder or the noise
                let clip = m.soft_clip();
                let clipped = pass.received.mapv(|r| r.abs() >= clip);
                let mut d_recv = d_in.clone();
                ndarray::Zip::from(&mut d_recv).and(&clipped).for_each(|g, &c| {
                    if c {
                        *g = 0.0;
                    }
                });
                let d_enc = match &mut m.transport {
                    Transport::FullResolution => {
                        let mut d = d_recv.clone();
                        for (i, mut row) in d.axis_iter_mut(Axis(0)).enumerate() {
                            let c = pass.scale[i];
                            let s = pass.enc.output.row(i);
                            let ss: f64 = s.iter().map(|v| v * v).sum::<f64>().max(1e-12);
                            let sg: f64 = s.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
                            for (g, &sv) in row.iter_mut().zip(s.iter()) {
                                *g = c * (*g - sv * sg / ss);
                            }
                        }
                        d
                    }
                    Transport::QuantizedResolution { alpha, beta, powers } => {
                        let (a, b) = (*alpha, *beta);
                        let c = quantized_normalizer(a, b);
                        let levels = quantized_levels(a, b).map(|v| v * c);
                        let slope = least_squares_slope(&levels);
                        let norm2 = a * a + b * b;
                        let mut grad = vec![0.0; 2 + powers.len()];
                        let mut d_rho = vec![0.0; powers.len()];
                        let terms = d_in.iter().zip(pass.enc.output.iter()).zip(pass.sent.iter()).zip(pass.noise.iter());
                        for (k, (((&g, &v), &sent), &u)) in terms.enumerate() {
                            let r = pass.received.as_slice().expect("contiguous")[k];
                            if clipped.as_slice().expect("contiguous")[k] {
                                // the clip level c·(α + β) moves with α and β
                                let sign = r.signum();
                                grad[0] += g * (c * sign - r * a / norm2);
                                grad[1] += g * (c * sign - r * b / norm2);
                                continue;
                            }
                            let idx = quant::level_index(v, m.quant_bits);
                            let c1 = if idx >> 1 == 1 { 1.0 } else { -1.0 };
                            let c2 = if idx & 1 == 1 { 1.0 } else { -1.0 };
                            grad[0] += g * (c * c1 - sent * a / norm2);
                            grad[1] += g * (c * c2 - sent * b / norm2);
                            let slot = pass.slots[k];
                            let rho = powers[slot];
                            d_rho[slot] -= g * u / (2.0 * rho * rho.sqrt());
                        }
                        let weighted: f64 = d_rho.iter().zip(powers.iter()).map(|(g, p)| g * p).sum::<f64>() / powers.len() as f64;
                        for (j, p) in powers.iter().enumerate() {
                            grad[2 + j] = p * d_rho[j] - p * weighted;
                        }
                        let mut params = vec![a, b];
                        params.extend_from_slice(&theta);
                        const_adam.step(&mut params, &grad);
                        *alpha = params[0];
                        *beta = params[1];
                        theta.copy_from_slice(&params[2..]);
                        *powers = powers_from_logits(&theta);
                        d_recv.mapv(|g| g * slope)
                    }
                    Transport::Bits => unreachable!(),
                };
                let (g_enc, _) = m.encoder.backward(&pass.enc, d_enc);
                adam_dec.step(&mut m.decoder, &g_dec);
                adam_enc.step(&mut m.encoder, &g_enc);
                Ok(loss)
            },
            |rng| {
                let m = cell.borrow();
                if xv.nrows() == 0 {
                    return Ok(f64::NAN);
                }
                let pass = symbol_forward(&m, xv.view(), cfg, rng)?;
                Ok(mse_and_grad(&m.decoder.forward(pass.received.view()), xv.view()).0)
            },
        )?
    };
    Ok(Trained { model, history })
}

/// Slope of the least-squares line through `(i / (L−1), levels[i])`.
fn least_squares_slope(levels: &[f64]) -> f64 {
    let l = levels.len();
    let xs: Vec<f64> = (0..l).map(|i| i as f64 / (l - 1) as f64).collect();
    let mx = xs.iter().sum::<f64>() / l as f64;
    let my = levels.iter().sum::<f64>() / l as f64;
    let num: f64 = xs.iter().zip(levels).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
