use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harq::{Scheme, DEFAULT_MAX_ROUNDS};
use crate::kpstream::{DatasetSpec, MotionProfile};
use crate::phy::{BitLink, ChannelProfile, Modulation};

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// What a sweep row measures: a HARQ / one-shot scheme over a bit link,
/// or a constellation mode over OFDM.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepScheme {
    Link(Scheme),
    Constellation(Modulation),
}

impl SweepScheme {
    pub const CONSTELLATIONS: [Modulation; 3] = [Modulation::Qam16, Modulation::FullResolution, Modulation::QuantizedResolution];

    pub fn name(self) -> &'static str {
        match self {
            SweepScheme::Link(s) => s.name(),
            SweepScheme::Constellation(m) => m.name(),
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Scheme::from_name(s)
            .map(SweepScheme::Link)
            .or_else(|| Self::CONSTELLATIONS.into_iter().find(|m| m.name() == s).map(SweepScheme::Constellation))
    }

    pub fn needs_ofdm(self) -> bool {
        matches!(self, SweepScheme::Constellation(_) | SweepScheme::Link(Scheme::SvcCsi | Scheme::SvcCsiHarq))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    #[default]
    Bsc,
    Ofdm,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub trials: usize,
    pub schemes: Vec<String>,
    pub max_rounds: usize,
    /// Sweep results CSV path (default `results.csv`).
    pub out: Option<PathBuf>,
    /// Also write one row per frame next to the sweep CSV.
    pub records: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            trials: 50,
            schemes: vec!["svc".into(), "svc_harq".into(), "rs_irharq".into()],
            max_rounds: DEFAULT_MAX_ROUNDS,
            out: None,
            records: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub kind: ChannelKind,
    pub ber_grid: Vec<f64>,
    /// Average receive SNR per symbol, dB.
    pub snr_grid: Vec<f64>,
    pub subchannels: usize,
    pub taps: usize,
    pub pdp_decay: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let p = ChannelProfile::matched();
        ChannelSection {
            kind: ChannelKind::Bsc,
            ber_grid: vec![0.0, 0.05, 0.1],
            snr_grid: vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0],
            subchannels: p.subchannels,
            taps: p.taps,
            pdp_decay: p.pdp_decay,
        }
    }
}

impl ChannelSection {
    pub fn profile(&self) -> ChannelProfile {
        ChannelProfile { subchannels: self.subchannels, taps: self.taps, pdp_decay: self.pdp_decay }
    }

    /// BER grid for a BSC, SNR grid for OFDM.
    pub fn points(&self) -> &[f64] {
        match self.kind {
            ChannelKind::Bsc => &self.ber_grid,
            ChannelKind::Ofdm => &self.snr_grid,
        }
    }

    pub fn link(&self, point: f64) -> BitLink {
        match self.kind {
            ChannelKind::Bsc => BitLink::Bsc { ber: point },
            ChannelKind::Ofdm => BitLink::Ofdm { profile: self.profile(), snr_db: point, use_csi: false },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsSection {
    pub dir: PathBuf,
}

impl Default for ModelsSection {
    fn default() -> Self {
        ModelsSection { dir: PathBuf::from("models") }
    }
}

/// Synthetic dataset parameters; `files` replaces the synthetic test split
/// as the sweep input.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamsSection {
    pub seed: u64,
    pub n: usize,
    pub frames_per_stream: usize,
    pub train_streams: usize,
    pub validation_streams: usize,
    pub test_streams: usize,
    pub profile: MotionProfile,
    pub files: Vec<PathBuf>,
}

impl Default for StreamsSection {
    fn default() -> Self {
        let d = DatasetSpec::default();
        StreamsSection {
            seed: d.seed,
            n: d.n,
            frames_per_stream: d.frames_per_stream,
            train_streams: d.train_streams,
            validation_streams: d.validation_streams,
            test_streams: d.test_streams,
            profile: d.profile,
            files: Vec::new(),
        }
    }
}

impl StreamsSection {
    pub fn dataset(&self) -> DatasetSpec {
        DatasetSpec {
            seed: self.seed,
            n: self.n,
            frames_per_stream: self.frames_per_stream,
            train_streams: self.train_streams,
            validation_streams: self.validation_streams,
            test_streams: self.test_streams,
            profile: self.profile,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: usize,
    pub stage2_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_ber: f64,
    /// Extra stage-1 models, one per listed training BER.
    pub extra_train_bers: Vec<f64>,
    pub stage2_ber: [f64; 2],
    /// Channel for the base models; `ofdm` draws SNRs from `snr_db`.
    pub link: ChannelKind,
    pub snr_db: [f64; 2],
    /// Also train the CSI-sorted stage-1 (with an unsorted stage-2).
    pub csi: bool,
    /// Also train the three constellation-mode codecs.
    pub constellations: bool,
    pub constellation_learning_rate: f64,
    pub detector_ber_grid: Vec<f64>,
    /// Training streams used to build detector pairs.
    pub detector_streams: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            epochs: 200,
            stage2_epochs: 100,
            batch_size: 64,
            learning_rate: 2e-4,
            train_ber: 0.0,
            extra_train_bers: Vec::new(),
            stage2_ber: [0.0, 0.1],
            link: ChannelKind::Bsc,
            snr_db: [0.0, 20.0],
            csi: false,
            constellations: false,
            constellation_learning_rate: 1e-3,
            detector_ber_grid: (0..=10).map(|i| i as f64 * 0.02).collect(),
            detector_streams: 32,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub channel: ChannelSection,
    pub models: ModelsSection,
    pub streams: StreamsSection,
    pub training: TrainingSection,
}

fn check_ber(what: &str, b: f64) -> Result<()> {
    if (0.0..=0.5).contains(&b) {
        Ok(())
    } else {
        config_err(format!("{what} {b} outside [0, 0.5]"))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn schemes(&self) -> Result<Vec<SweepScheme>> {
        self.run.schemes.iter().map(|s| SweepScheme::from_name(s).ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if r.trials == 0 {
            return config_err("trials must be at least 1");
        }
        if r.max_rounds == 0 {
            return config_err("max_rounds must be at least 1");
        }
        if r.schemes.is_empty() {
            return config_err("no schemes selected");
        }
        let c = &self.channel;
        if c.ber_grid.is_empty() || c.snr_grid.is_empty() {
            return config_err("channel grids must be nonempty");
        }
        for &b in &c.ber_grid {
            check_ber("BER grid point", b)?;
        }
        if c.snr_grid.iter().any(|v| !v.is_finite()) {
            return config_err("SNR grid must be finite");
        }
        c.profile().validate().map_err(|e| Error::Config(e.to_string()))?;
        for s in self.schemes()? {
            if s.needs_ofdm() && c.kind != ChannelKind::Ofdm {
                return config_err(format!("scheme {} needs channel kind \"ofdm\"", s.name()));
            }
        }
        let s = &self.streams;
        if s.n == 0 || s.frames_per_stream < 2 {
            return config_err("streams need n ≥ 1 and at least 2 frames");
        }
        if s.files.is_empty() && s.test_streams == 0 {
            return config_err("no evaluation streams");
        }
        for f in &s.files {
            if !f.is_file() {
                return config_err(format!("stream file {} does not exist", f.display()));
            }
        }
        let t = &self.training;
        if t.epochs == 0 || t.stage2_epochs == 0 || t.batch_size == 0 {
            return config_err("epochs and batch_size must be positive");
        }
        if !(t.learning_rate > 0.0) || !(t.constellation_learning_rate > 0.0) {
            return config_err("learning rates must be positive");
        }
        check_ber("train_ber", t.train_ber)?;
        for &b in t.extra_train_bers.iter().chain(&t.stage2_ber).chain(&t.detector_ber_grid) {
            check_ber("training BER", b)?;
        }
        if t.stage2_ber[0] > t.stage2_ber[1] || !(t.snr_db[0] <= t.snr_db[1]) {
            return config_err("ranges must be increasing");
        }
        if t.detector_ber_grid.is_empty() || t.detector_streams == 0 {
            return config_err("detector needs a BER grid and streams");
        }
        Ok(())
    }

    /// Command-line overrides; `None` keeps the file's value.
    pub fn apply_overrides(&mut self, seed: Option<u64>, trials: Option<usize>, scheme: Option<&str>, out: Option<&Path>) {
        if let Some(s) = seed {
            self.run.seed = s;
        }
        if let Some(t) = trials {
            self.run.trials = t;
        }
        if let Some(s) = scheme {
            self.run.schemes = vec![s.to_string()];
        }
        if let Some(o) = out {
            self.run.out = Some(o.to_path_buf());
        }
    }
}
