use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ChannelKind, ExperimentConfig};
use super::eval::{run_trial, FrameResult, ModelSet};
use super::seeds::trial_seed;
use super::stats::RunningStats;
use super::train::load_models;
use crate::error::{Error, Result};
use crate::harq::{write_records, TrialRecord};
use crate::kpstream::{load_stream, synth_dataset, KeypointStream};

/// Aggregates of one (scheme, grid point) cell.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub scheme: String,
    pub channel: &'static str,
    pub point: f64,
    pub trials: usize,
    pub akd: RunningStats,
    pub bits: RunningStats,
    pub mse: RunningStats,
    pub accepted: usize,
}

impl SweepRow {
    pub fn frames(&self) -> u64 {
        self.akd.count()
    }

    pub fn accept_rate(&self) -> f64 {
        self.accepted as f64 / self.frames() as f64
    }
}

pub const SWEEP_HEADER: &str = "scheme,channel,point,trials,frames,akd_mean,akd_std,bits_mean,bits_std,mse_mean,mse_std,accept_rate";

pub fn write_sweep<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.channel,
            r.point,
            r.trials,
            r.frames(),
            r.akd.mean(),
            r.akd.std(),
            r.bits.mean(),
            r.bits.std(),
            r.mse.mean(),
            r.mse.std(),
            r.accept_rate()
        )?;
    }
    Ok(())
}

/// Evaluation streams: the listed files, else the synthetic test split.
pub fn eval_streams(cfg: &ExperimentConfig) -> Result<Vec<KeypointStream>> {
    if cfg.streams.files.is_empty() {
        Ok(synth_dataset(&cfg.streams.dataset())?.test)
    } else {
        cfg.streams.files.iter().map(load_stream).collect()
    }
}

/// Runs `trials` sessions of every scheme at every grid point. Trial `t`
/// at grid point `g` uses stream `t mod len` and seed
/// `base_seed ^ mix(g, t)`; all schemes see the same seeds at a point.
/// Trials run in parallel and are merged in trial order, so results do
/// not depend on the worker count.
pub fn run_sweep(cfg: &ExperimentConfig, models: &ModelSet, streams: &[KeypointStream]) -> Result<(Vec<SweepRow>, Vec<TrialRecord>)> {
    cfg.validate()?;
    if streams.is_empty() {
        return Err(Error::Config("no evaluation streams".into()));
    }
    let channel = match cfg.channel.kind {
        ChannelKind::Bsc => "ber",
        ChannelKind::Ofdm => "snr_db",
    };
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for scheme in cfg.schemes()? {
        for (g, &point) in cfg.channel.points().iter().enumerate() {
            let link = cfg.channel.link(point);
            let trials: Vec<Result<Vec<FrameResult>>> = (0..cfg.run.trials)
                .into_par_iter()
                .map(|t| run_trial(scheme, models, &link, &streams[t % streams.len()], cfg.run.max_rounds, trial_seed(cfg.run.seed, g, t)))
                .collect();
            let mut row = SweepRow {
                scheme: scheme.name().to_string(),
                channel,
                point,
                trials: cfg.run.trials,
                akd: RunningStats::new(),
                bits: RunningStats::new(),
                mse: RunningStats::new(),
                accepted: 0,
            };
            for trial in trials {
                let (mut a, mut b, mut m) = (RunningStats::new(), RunningStats::new(), RunningStats::new());
                for f in trial? {
                    a.push(f.record.akd);
                    b.push(f.record.bits_used);
                    m.push(f.mse);
                    row.accepted += f.record.accepted as usize;
                    if cfg.run.records {
                        records.push(f.record);
                    }
                }
                row.akd.merge(&a);
                row.bits.merge(&b);
                row.mse.merge(&m);
            }
            rows.push(row);
        }
    }
    Ok((rows, records))
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub csv: PathBuf,
    pub records: Option<PathBuf>,
}

pub const DEFAULT_SWEEP_OUT: &str = "results.csv";

/// `results.csv` → `results_records.csv`.
pub fn records_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    csv.with_file_name(format!("{stem}_records.csv"))
}

/// Loads models, runs the sweep and writes the CSV to `run.out`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let models = load_models(&cfg.models.dir, &cfg.schemes()?)?;
    let streams = eval_streams(cfg)?;
    let (rows, records) = run_sweep(cfg, &models, &streams)?;
    let csv = cfg.run.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_SWEEP_OUT));
    if let Some(dir) = csv.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut buf = Vec::new();
    write_sweep(&rows, &mut buf)?;
    std::fs::write(&csv, buf)?;
    let records_file = if cfg.run.records {
        let p = records_path(&csv);
        write_records(&records, std::fs::File::create(&p)?)?;
        Some(p)
    } else {
        None
    };
    Ok(SweepReport { rows, csv, records: records_file })
}
