use std::path::{Path, PathBuf};

use super::config::{ChannelKind, ExperimentConfig};
use super::eval::ModelSet;
use crate::error::{Error, Result};
use crate::harq::{fluency_pairs, train_fluency, FluencyDetector};
use crate::kpstream::{synth_dataset, DatasetSplit};
use crate::neuralcodec::{
    load_model, save_model, train_stage1, train_stage2, train_symbol_codec, BerSpec, CodecModel, TrainConfig, TrainLink, Trained, Transport, DEFAULT_QUANT_BITS,
    DEFAULT_SYMBOLS,
};
use crate::neuralcodec::mlp::AdamParams;

/// File names inside a model directory.
pub mod artifact {
    pub const STAGE1: &str = "stage1.svcmodel";
    pub const STAGE2: &str = "stage2.svcmodel";
    pub const DETECTOR: &str = "detector.svcmodel";
    pub const CSI: &str = "stage2_csi.svcmodel";
    pub const DETECTOR_CSI: &str = "detector_csi.svcmodel";
    pub const QAM16: &str = "qam16.svcmodel";
    pub const FULL_RESOLUTION: &str = "full_resolution.svcmodel";
    pub const QUANTIZED_RESOLUTION: &str = "quantized_resolution.svcmodel";

    /// Extra stage-1 model trained at a fixed BER.
    pub fn stage1_at(ber: f64) -> String {
        format!("stage1_ber{ber}.svcmodel")
    }

    pub fn loss_csv(model_file: &str) -> String {
        format!("{}_loss.csv", model_file.trim_end_matches(".svcmodel"))
    }
}

/// Real symbols per frame for the constellation comparison: 80 complex
/// channel uses, the same resources as 320 bits on 16-QAM.
pub const CONSTELLATION_SYMBOLS: usize = 160;

/// Starting point of the quantized-resolution constellation: `α = 2, β = 1`
/// gives the equally spaced levels `{−3, −1, 1, 3}` of 16-QAM.
pub const QUANTIZED_INIT: (f64, f64) = (2.0, 1.0);

#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    pub files: Vec<PathBuf>,
}

fn train_config(cfg: &ExperimentConfig, epochs: usize, train_ber: BerSpec, link: TrainLink, seed: u64) -> TrainConfig {
    let t = &cfg.training;
    TrainConfig {
        adam: AdamParams { learning_rate: t.learning_rate, ..AdamParams::default() },
        batch_size: t.batch_size,
        epochs,
        train_ber,
        link,
        constellation_learning_rate: t.constellation_learning_rate,
        seed,
    }
}

fn ofdm_link(cfg: &ExperimentConfig, use_csi: bool) -> TrainLink {
    TrainLink::Ofdm { profile: cfg.channel.profile(), snr_db: cfg.training.snr_db, use_csi }
}

struct Writer<'a> {
    dir: &'a Path,
    report: TrainReport,
}

impl Writer<'_> {
    fn model(&mut self, name: &str, trained: &Trained) -> Result<()> {
        let path = self.dir.join(name);
        save_model(&trained.model, &path)?;
        let loss = self.dir.join(artifact::loss_csv(name));
        trained.history.save(&loss)?;
        self.report.files.push(path);
        self.report.files.push(loss);
        Ok(())
    }
}

/// Trains every artifact the config asks for into `out_dir`: stage-1,
/// stage-2 and detector always; extra training BERs, the CSI codec and
/// the constellation codecs on request. `progress` receives one line per
/// finished artifact.
pub fn cmd_train(cfg: &ExperimentConfig, out_dir: &Path, mut progress: impl FnMut(&str)) -> Result<TrainReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let data: DatasetSplit = synth_dataset(&cfg.streams.dataset()).map_err(|e| Error::Config(e.to_string()))?;
    let (train, val) = (&data.train, &data.validation);
    let t = &cfg.training;
    let seed = cfg.run.seed;
    let n = cfg.streams.n;
    let base_link = match t.link {
        ChannelKind::Bsc => TrainLink::Bsc,
        ChannelKind::Ofdm => ofdm_link(cfg, false),
    };
    let mut w = Writer { dir: out_dir, report: TrainReport::default() };

    let init = CodecModel::new(n, DEFAULT_SYMBOLS, DEFAULT_QUANT_BITS, seed)?;
    let s1 = train_stage1(&init, train, val, &train_config(cfg, t.epochs, BerSpec::Fixed(t.train_ber), base_link.clone(), seed))?;
    w.model(artifact::STAGE1, &s1)?;
    progress(artifact::STAGE1);

    let s2 = train_stage2(&s1.model, train, val, &train_config(cfg, t.stage2_epochs, BerSpec::Range(t.stage2_ber), base_link, seed.wrapping_add(1)))?;
    w.model(artifact::STAGE2, &s2)?;
    progress(artifact::STAGE2);

    let take = t.detector_streams.min(train.len());
    let pairs = fluency_pairs(&s1.model, &train[..take], &t.detector_ber_grid, seed.wrapping_add(2))?;
    let det = train_fluency(&pairs)?;
    let path = out_dir.join(artifact::DETECTOR);
    det.save(&path)?;
    w.report.files.push(path);
    progress(artifact::DETECTOR);

    for (i, &ber) in t.extra_train_bers.iter().enumerate() {
        let link = match t.link {
            ChannelKind::Bsc => TrainLink::Bsc,
            ChannelKind::Ofdm => ofdm_link(cfg, false),
        };
        let m = train_stage1(&init, train, val, &train_config(cfg, t.epochs, BerSpec::Fixed(ber), link, seed.wrapping_add(10 + i as u64)))?;
        let name = artifact::stage1_at(ber);
        w.model(&name, &m)?;
        progress(&name);
    }

    if t.csi {
        let m = train_stage1(&init, train, val, &train_config(cfg, t.epochs, BerSpec::Fixed(0.0), ofdm_link(cfg, true), seed.wrapping_add(3)))?;
        // b1 stays sorted while stage 2 learns; b2 is always sent unsorted
        let m = train_stage2(&m.model, train, val, &train_config(cfg, t.stage2_epochs, BerSpec::Fixed(0.0), ofdm_link(cfg, true), seed.wrapping_add(4)))?;
        w.model(artifact::CSI, &m)?;
        progress(artifact::CSI);
        let pairs = fluency_pairs(&m.model, &train[..take], &t.detector_ber_grid, seed.wrapping_add(8))?;
        let path = out_dir.join(artifact::DETECTOR_CSI);
        train_fluency(&pairs)?.save(&path)?;
        w.report.files.push(path);
        progress(artifact::DETECTOR_CSI);
    }

    if t.constellations {
        let l = cfg.channel.subchannels;
        // 160 outputs × 2 bits = 320 bits = 80 16-QAM symbols
        let qam = CodecModel::new(n, CONSTELLATION_SYMBOLS, DEFAULT_QUANT_BITS, seed.wrapping_add(5))?;
        let m = train_stage1(&qam, train, val, &train_config(cfg, t.epochs, BerSpec::Fixed(0.0), ofdm_link(cfg, true), seed.wrapping_add(5)))?;
        w.model(artifact::QAM16, &m)?;
        progress(artifact::QAM16);
        let (alpha, beta) = QUANTIZED_INIT;
        for (name, transport, s) in [
            (artifact::FULL_RESOLUTION, Transport::FullResolution, 6),
            (artifact::QUANTIZED_RESOLUTION, Transport::QuantizedResolution { alpha, beta, powers: vec![1.0; l] }, 7),
        ] {
            let init = CodecModel::new_symbol(n, CONSTELLATION_SYMBOLS, transport, seed.wrapping_add(s))?;
            let m = train_symbol_codec(&init, train, val, &train_config(cfg, t.epochs, BerSpec::Fixed(0.0), ofdm_link(cfg, true), seed.wrapping_add(s)))?;
            w.model(name, &m)?;
            progress(name);
        }
    }
    Ok(w.report)
}

fn load_if(dir: &Path, name: &str, wanted: bool) -> Result<Option<CodecModel>> {
    if wanted {
        load_model(dir.join(name)).map(Some)
    } else {
        Ok(None)
    }
}

/// Loads what the selected schemes need; an absent file is a
/// missing-artifact error.
pub fn load_models(dir: &Path, schemes: &[super::config::SweepScheme]) -> Result<ModelSet> {
    use super::config::SweepScheme as S;
    use crate::harq::Scheme;
    use crate::phy::Modulation;
    let any = |f: &dyn Fn(S) -> bool| schemes.iter().any(|&s| f(s));
    let base = any(&|s| matches!(s, S::Link(Scheme::Svc | Scheme::SvcHarq | Scheme::RsIrharq | Scheme::Rs127 | Scheme::Rs255)));
    let csi = any(&|s| matches!(s, S::Link(Scheme::SvcCsi | Scheme::SvcCsiHarq)));
    let det = any(&|s| s == S::Link(Scheme::SvcHarq));
    let csi_det = any(&|s| s == S::Link(Scheme::SvcCsiHarq));
    Ok(ModelSet {
        base: load_if(dir, artifact::STAGE2, base)?,
        csi: load_if(dir, artifact::CSI, csi)?,
        detector: if det { Some(FluencyDetector::load(dir.join(artifact::DETECTOR))?) } else { None },
        csi_detector: if csi_det { Some(FluencyDetector::load(dir.join(artifact::DETECTOR_CSI))?) } else { None },
        qam16: load_if(dir, artifact::QAM16, any(&|s| s == S::Constellation(Modulation::Qam16)))?,
        full_resolution: load_if(dir, artifact::FULL_RESOLUTION, any(&|s| s == S::Constellation(Modulation::FullResolution)))?,
        quantized_resolution: load_if(dir, artifact::QUANTIZED_RESOLUTION, any(&|s| s == S::Constellation(Modulation::QuantizedResolution)))?,
    })
}
