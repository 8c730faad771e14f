//! Per-trial runners shared by sweeps and the acceptance suite.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::SweepScheme;
use crate::error::{arg, Result};
use crate::fec::RsCode;
use crate::harq::{run_rs_irharq, run_svc, run_svc_harq, AckPolicy, FluencyDetector, RsVariant, Scheme, SvcLinks, TrialRecord, RS_BLOCK_FRAMES};
use crate::kpstream::{akd, mse_flat, KeypointFrame, KeypointStream};
use crate::neuralcodec::{CodecModel, Stage, Transport};
use crate::phy::{realize_channel_with, snr_db_to_noise_power, transmit_bits, transmit_symbols, BitLink, ChannelProfile, Modulation};

/// Trained artifacts a sweep can draw on. Missing entries make the
/// schemes that need them fail with a state error.
#[derive(Clone, Debug, Default)]
pub struct ModelSet {
    /// Stage-1 plus stage-2 codec.
    pub base: Option<CodecModel>,
    /// CSI-sorted stage-1 with unsorted stage-2.
    pub csi: Option<CodecModel>,
    pub detector: Option<FluencyDetector>,
    /// Detector for the CSI schemes; falls back to `detector`.
    pub csi_detector: Option<FluencyDetector>,
    pub qam16: Option<CodecModel>,
    pub full_resolution: Option<CodecModel>,
    pub quantized_resolution: Option<CodecModel>,
}

fn need<'a, T>(m: &'a Option<T>, what: &str) -> Result<&'a T> {
    m.as_ref().ok_or_else(|| crate::Error::State(format!("no {what} model loaded")))
}

impl ModelSet {
    pub fn codec_for(&self, scheme: SweepScheme) -> Result<&CodecModel> {
        match scheme {
            SweepScheme::Link(Scheme::SvcCsi | Scheme::SvcCsiHarq) => need(&self.csi, "CSI codec"),
            SweepScheme::Link(_) => need(&self.base, "base codec"),
            SweepScheme::Constellation(Modulation::Qam16) => need(&self.qam16, "qam16"),
            SweepScheme::Constellation(Modulation::FullResolution) => need(&self.full_resolution, "full_resolution"),
            SweepScheme::Constellation(Modulation::QuantizedResolution) => need(&self.quantized_resolution, "quantized_resolution"),
        }
    }
}

/// One delivered frame with its MSE alongside the CSV record.
#[derive(Clone, Debug)]
pub struct FrameResult {
    pub record: TrialRecord,
    pub mse: f64,
}

fn with_mse(stream: &KeypointStream, records: Vec<TrialRecord>, decoded: &[KeypointFrame]) -> Vec<FrameResult> {
    records
        .into_iter()
        .map(|r| {
            let mse = mse_flat(&stream.frames[r.frame].flatten(), &decoded[r.frame].flatten());
            FrameResult { record: r, mse }
        })
        .collect()
}

/// Runs `scheme` over one stream with the channel parameter `point`
/// (BER for a BSC link, SNR in dB for OFDM). Frame 0 is shared and not
/// reported.
pub fn run_trial(
    scheme: SweepScheme,
    models: &ModelSet,
    link: &BitLink,
    stream: &KeypointStream,
    max_rounds: usize,
    seed: u64,
) -> Result<Vec<FrameResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = models.codec_for(scheme)?;
    match scheme {
        SweepScheme::Link(s @ (Scheme::Svc | Scheme::SvcCsi)) => {
            let link = SvcLinks::for_scheme(s, link).first;
            let out = run_svc(model, stream, &link, s, &mut rng)?;
            Ok(with_mse(stream, out.records, &out.decoded))
        }
        SweepScheme::Link(s @ (Scheme::SvcHarq | Scheme::SvcCsiHarq)) => {
            let det = match (s, &models.csi_detector) {
                (Scheme::SvcCsiHarq, Some(d)) => d,
                _ => need(&models.detector, "detector")?,
            };
            let out = run_svc_harq(model, stream, &SvcLinks::for_scheme(s, link), det, AckPolicy::Detector, s, max_rounds, &mut rng)?;
            Ok(with_mse(stream, out.records, &out.decoded))
        }
        SweepScheme::Link(s @ (Scheme::RsIrharq | Scheme::Rs127 | Scheme::Rs255)) => {
            let variant = match s {
                Scheme::RsIrharq => RsVariant::IrHarq,
                Scheme::Rs127 => RsVariant::Fixed127,
                _ => RsVariant::Fixed255,
            };
            rs_trial(model, stream, &link.without_csi(), variant, max_rounds, &mut rng)
        }
        SweepScheme::Constellation(m) => {
            let BitLink::Ofdm { profile, snr_db, .. } = link else {
                return arg("constellation modes run over OFDM");
            };
            constellation_trial(model, m, stream, profile, *snr_db, &mut rng)
        }
    }
}

/// RS blocks of three frames; a short tail block is padded by repeating
/// its last frame. Each real frame is charged a third of its block's bits.
fn rs_trial(model: &CodecModel, stream: &KeypointStream, link: &BitLink, variant: RsVariant, max_rounds: usize, rng: &mut ChaCha8Rng) -> Result<Vec<FrameResult>> {
    let code = RsCode::new(255, 64)?;
    let mut out = Vec::with_capacity(stream.len() - 1);
    let idx: Vec<usize> = (1..stream.len()).collect();
    for block in idx.chunks(RS_BLOCK_FRAMES) {
        let mut frames: Vec<KeypointFrame> = block.iter().map(|&i| stream.frames[i].clone()).collect();
        while frames.len() < RS_BLOCK_FRAMES {
            frames.push(frames[frames.len() - 1].clone());
        }
        let res = run_rs_irharq(model, &code, &frames, link, variant, max_rounds, rng)?;
        for (j, &i) in block.iter().enumerate() {
            let truth = &stream.frames[i];
            let d = &res.decoded[j];
            out.push(FrameResult {
                record: TrialRecord {
                    stream_id: stream.stream_id.clone(),
                    frame: i,
                    scheme: variant.scheme().name().to_string(),
                    ber_or_snr: link.parameter(),
                    rounds: res.session.tx_count(),
                    bits_used: res.session.bits_used() as f64 / RS_BLOCK_FRAMES as f64,
                    akd: akd(truth, d)?,
                    detector_score: f64::NAN,
                    accepted: res.crc_ok,
                },
                mse: mse_flat(&truth.flatten(), &d.flatten()),
            });
        }
    }
    Ok(out)
}

/// Sends each frame on its own fresh Rayleigh realization with CSI
/// sorting, through the constellation of `mode`.
pub fn constellation_trial(
    model: &CodecModel,
    mode: Modulation,
    stream: &KeypointStream,
    profile: &ChannelProfile,
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<FrameResult>> {
    let expected = match mode {
        Modulation::Qam16 => matches!(model.transport, Transport::Bits),
        Modulation::FullResolution => matches!(model.transport, Transport::FullResolution),
        Modulation::QuantizedResolution => matches!(model.transport, Transport::QuantizedResolution { .. }),
    };
    if !expected {
        return arg(format!("{} codec cannot run in {} mode", model.transport.name(), mode.name()));
    }
    let cmode = model.constellation_mode(profile.subchannels);
    let mut out = Vec::with_capacity(stream.len() - 1);
    for (i, truth) in stream.frames.iter().enumerate().skip(1) {
        let ch = realize_channel_with(rng, profile, snr_db_to_noise_power(snr_db))?;
        let (d, bits) = if mode == Modulation::Qam16 {
            let bits = model.encode(truth)?;
            let rx = transmit_bits(&bits, &ch, &cmode, true, rng)?.received;
            (model.decode(&rx, Stage::First)?, bits.len())
        } else {
            let s = model.encode_symbols(truth)?;
            let rx = transmit_symbols(&s, &ch, &cmode, true, rng)?;
            // two bits per real of channel-use-equivalent payload
            (model.decode_symbols(&rx)?, 2 * s.len())
        };
        let a = akd(truth, &d)?;
        out.push(FrameResult {
            record: TrialRecord {
                stream_id: stream.stream_id.clone(),
                frame: i,
                scheme: mode.name().to_string(),
                ber_or_snr: snr_db,
                rounds: 1,
                bits_used: bits as f64,
                akd: a,
                detector_score: f64::NAN,
                accepted: true,
            },
            mse: mse_flat(&truth.flatten(), &d.flatten()),
        });
    }
    Ok(out)
}
