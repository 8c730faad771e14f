//! Acceptance suite: one PASS/FAIL line per criterion AC-1 … AC-9.
//!
//! Trained models are cached under cargo's test tmpdir, keyed by their
//! full training configuration, so reruns skip training. Pass criterion
//! names (e.g. `AC-5`) as arguments to run a subset.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use svclink::fec::{damage, RsCode};
use svclink::harness::seeds::trial_seed;
use svclink::harness::{cmd_validate, rs_radius_grid, run_sweep, run_trial, ChannelKind, ExperimentConfig, ModelSet, SweepRow, SweepScheme, ValidateOptions};
use svclink::harq::{auc, fluency_pairs, run_svc_blind, train_fluency, FluencyDetector, Scheme, SvcLinks};
use svclink::kpstream::{akd, all_frames, synth_dataset, DatasetSpec, DatasetSplit};
use svclink::neuralcodec::{load_model, save_model, train_stage1, train_stage2, train_symbol_codec, BerSpec, TrainConfig, TrainLink, Trained, Transport};
use svclink::phy::theory::{qam16_ber_awgn, qam16_ber_rayleigh};
use svclink::phy::{bsc_with, realize_channel_with, snr_db_to_noise_power, transmit_bits, BitLink, ChannelProfile, ChannelRealization, ConstellationMode};
use svclink::{CodecModel, Stage};

const CACHE_VERSION: &str = "acceptance-v1";
/// One-sided significance level for the paired comparisons.
const ALPHA: f64 = 0.01;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

type Outcome = Result<Verdict, String>;

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

struct Ctx {
    data: DatasetSplit,
    dataset: DatasetSpec,
    cache: PathBuf,
}

impl Ctx {
    fn new() -> Self {
        let dataset = DatasetSpec { test_streams: 200, ..DatasetSpec::default() };
        let cache = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-models");
        std::fs::create_dir_all(&cache).expect("cache dir");
        Ctx { data: synth_dataset(&dataset).expect("dataset"), dataset, cache }
    }

    /// Loads `name` from the cache or trains it. Returns the model and the
    /// wall-clock training time (as recorded when it was trained).
    fn model(&self, name: &str, key: &str, train: impl FnOnce(&Ctx) -> svclink::Result<Trained>) -> Result<(CodecModel, f64), String> {
        let train_spec = DatasetSpec { test_streams: 0, ..self.dataset.clone() };
        let tag = format!("{:016x}", fnv1a(&format!("{CACHE_VERSION}|{name}|{key}|{train_spec:?}")));
        let path = self.cache.join(format!("{name}-{tag}.svcmodel"));
        let secs = path.with_extension("secs");
        if let (Ok(m), Ok(s)) = (load_model(&path), std::fs::read_to_string(&secs)) {
            eprintln!("  {name}: cached");
            return Ok((m, s.trim().parse().unwrap_or(f64::NAN)));
        }
        eprintln!("  {name}: training …");
        let t = Instant::now();
        let trained = train(self).map_err(|e| format!("{name}: {e}"))?;
        let elapsed = t.elapsed().as_secs_f64();
        save_model(&trained.model, &path).map_err(|e| e.to_string())?;
        trained.history.save(path.with_extension("loss.csv")).map_err(|e| e.to_string())?;
        std::fs::write(&secs, format!("{elapsed}")).map_err(|e| e.to_string())?;
        eprintln!("  {name}: trained in {elapsed:.0} s");
        Ok((trained.model, elapsed))
    }

    fn stage1(&self, name: &str, init: CodecModel, cfg: TrainConfig) -> Result<(CodecModel, f64), String> {
        self.model(name, &format!("{cfg:?}|{init:?}", init = init.stage1_digest()), |c| {
            if matches!(init.transport, Transport::Bits) {
                train_stage1(&init, &c.data.train, &c.data.validation, &cfg)
            } else {
                train_symbol_codec(&init, &c.data.train, &c.data.validation, &cfg)
            }
        })
    }

    fn stage2(&self, name: &str, base: &CodecModel, cfg: TrainConfig) -> Result<CodecModel, String> {
        let key = format!("{cfg:?}|{}", base.stage1_digest());
        Ok(self.model(name, &key, |c| train_stage2(base, &c.data.train, &c.data.validation, &cfg))?.0)
    }

    fn detector(&self, model: &CodecModel) -> Result<FluencyDetector, String> {
        let path = self.cache.join(format!("detector-{:016x}.svcmodel", fnv1a(&format!("{CACHE_VERSION}|{}", model.stage1_digest()))));
        if let Ok(d) = FluencyDetector::load(&path) {
            return Ok(d);
        }
        let pairs = fluency_pairs(model, &self.data.train[..32], &ber_grid(0.2), 77).map_err(|e| e.to_string())?;
        let d = train_fluency(&pairs).map_err(|e| e.to_string())?;
        d.save(&path).map_err(|e| e.to_string())?;
        Ok(d)
    }
}

/// `{0, 0.02, …, max}`.
fn ber_grid(max: f64) -> Vec<f64> {
    (0..=(max / 0.02).round() as usize).map(|i| i as f64 * 0.02).collect()
}

fn cfg(epochs: usize, train_ber: BerSpec, link: TrainLink, seed: u64) -> TrainConfig {
    TrainConfig { epochs, train_ber, link, seed, ..TrainConfig::default() }
}

fn ofdm(snr_db: [f64; 2], use_csi: bool) -> TrainLink {
    TrainLink::Ofdm { profile: ChannelProfile::matched(), snr_db, use_csi }
}

// Shared models. Stage-1 at BER 0 carries AC-2; everything else reuses it
// or trains with fewer epochs where only trends are checked.
fn m0(ctx: &Ctx) -> Result<(CodecModel, f64), String> {
    ctx.stage1("stage1_ber0", CodecModel::with_defaults(1), cfg(200, BerSpec::Fixed(0.0), TrainLink::Bsc, 1))
}

fn m0_stage2(ctx: &Ctx) -> Result<CodecModel, String> {
    let (m, _) = m0(ctx)?;
    ctx.stage2("stage2_ber0", &m, cfg(100, BerSpec::Range([0.0, 0.1]), TrainLink::Bsc, 2))
}

fn m05(ctx: &Ctx) -> Result<CodecModel, String> {
    Ok(ctx.stage1("stage1_ber005", CodecModel::with_defaults(3), cfg(200, BerSpec::Fixed(0.05), TrainLink::Bsc, 3))?.0)
}

const HARQ_SNR: [f64; 2] = [10.0, 22.0];

fn ofdm_pair(ctx: &Ctx, csi: bool) -> Result<CodecModel, String> {
    let tag = if csi { "csi" } else { "plain" };
    let seed = if csi { 6 } else { 4 };
    let (s1, _) = ctx.stage1(&format!("ofdm_{tag}_stage1"), CodecModel::with_defaults(seed), cfg(100, BerSpec::Fixed(0.0), ofdm(HARQ_SNR, csi), seed))?;
    ctx.stage2(&format!("ofdm_{tag}_stage2"), &s1, cfg(50, BerSpec::Fixed(0.0), ofdm(HARQ_SNR, csi), seed + 1))
}

/// One-sided paired t-test that `mean(d) > 0`; returns `(mean, p)`.
fn paired_greater(d: &[f64]) -> (f64, f64) {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return (mean, if mean > 0.0 { 0.0 } else { 1.0 });
    }
    let t = mean / (var / n).sqrt();
    (mean, 1.0 - StudentsT::new(0.0, 1.0, n - 1.0).expect("dof").cdf(t))
}

fn sweep_cfg(kind: ChannelKind, points: &[f64], schemes: &[&str], trials: usize, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.run.seed = seed;
    c.run.trials = trials;
    c.run.schemes = schemes.iter().map(|s| s.to_string()).collect();
    c.channel.kind = kind;
    match kind {
        ChannelKind::Bsc => c.channel.ber_grid = points.to_vec(),
        ChannelKind::Ofdm => c.channel.snr_grid = points.to_vec(),
    }
    c
}

fn rows_for<'a>(rows: &'a [SweepRow], scheme: &str) -> Vec<&'a SweepRow> {
    rows.iter().filter(|r| r.scheme == scheme).collect()
}

fn ac1(_: &Ctx) -> Outcome {
    let t = Instant::now();
    let code = RsCode::new(255, 64).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut grid = rs_radius_grid();
    for e in (0..=95).step_by(5) {
        grid.push((e, 191 - 2 * e));
    }
    grid.sort_unstable();
    grid.dedup();
    let trials = 1000;
    let mut failures = 0;
    for &(e, f) in &grid {
        for _ in 0..trials {
            let info: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
            let (r, mask) = damage(&mut rng, &code.encode(&info).map_err(|e| e.to_string())?, e, f);
            if code.decode(&r, &mask).map_err(|e| e.to_string())? != (info, true) {
                failures += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let named = grid.contains(&(95, 0)) && grid.contains(&(31, 128));
    Ok(verdict(
        failures == 0 && named && secs < 300.0,
        format!("{} (e,f) points × {trials} patterns incl. (95,0) and (31,128): {failures} failures, {secs:.1} s", grid.len()),
    ))
}

fn ac2(ctx: &Ctx) -> Outcome {
    let (m, secs) = m0(ctx)?;
    let frames = all_frames(&ctx.data.test[..16]);
    let mut ok = 0;
    for f in &frames {
        let d = m.decode(&m.encode(f).map_err(|e| e.to_string())?, Stage::First).map_err(|e| e.to_string())?;
        ok += (akd(f, &d).map_err(|e| e.to_string())? < 0.04) as usize;
    }
    let frac = ok as f64 / frames.len() as f64;
    Ok(verdict(frac >= 0.9 && secs < 1800.0, format!("{:.2}% of {} held-out frames under AKD 0.04; training took {secs:.0} s", 100.0 * frac, frames.len())))
}

/// Per-trial mean AKD of the one-shot stage-1 link for two models on
/// identical streams and flip patterns.
fn paired_trial_akd(a: &CodecModel, b: &CodecModel, ctx: &Ctx, ber: f64, g: usize, trials: usize) -> Result<Vec<f64>, String> {
    let link = BitLink::Bsc { ber };
    let scheme = SweepScheme::Link(Scheme::Svc);
    let mean_akd = |m: &CodecModel, t: usize| -> Result<f64, String> {
        let set = ModelSet { base: Some(m.clone()), ..ModelSet::default() };
        let r = run_trial(scheme, &set, &link, &ctx.data.test[t], 1, trial_seed(3, g, t)).map_err(|e| e.to_string())?;
        Ok(r.iter().map(|f| f.record.akd).sum::<f64>() / r.len() as f64)
    };
    (0..trials).map(|t| Ok(mean_akd(a, t)? - mean_akd(b, t)?)).collect()
}

fn ac3(ctx: &Ctx) -> Outcome {
    let (a, _) = m0(ctx)?;
    let b = m05(ctx)?;
    let mut pass = true;
    let mut detail = Vec::new();
    for (g, ber) in [0.0, 0.05, 0.1].into_iter().enumerate() {
        // d > 0 means the BER-0 model is worse
        let d = paired_trial_akd(&a, &b, ctx, ber, g, 200)?;
        let (mean, p_worse) = paired_greater(&d);
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        let (_, p_better) = paired_greater(&neg);
        let ok = if ber == 0.0 { p_better < ALPHA } else { p_worse < ALPHA };
        pass &= ok;
        detail.push(format!("BER {ber}: ΔAKD(0−0.05) {mean:+.4} p={:.1e}", if ber == 0.0 { p_better } else { p_worse }));
    }
    Ok(verdict(pass, detail.join("; ")))
}

fn ac4(ctx: &Ctx) -> Outcome {
    let m = m0_stage2(ctx)?;
    let frames: Vec<_> = ctx.data.test.iter().flat_map(|s| s.frames[1..].iter().cloned()).take(500).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut d = Vec::with_capacity(frames.len());
    let e = |e: svclink::Error| e.to_string();
    for f in &frames {
        let r1 = bsc_with(&m.encode(f).map_err(e)?, 0.05, &mut rng).map_err(e)?;
        let r2 = bsc_with(&m.encode_stage2(f).map_err(e)?, 0.05, &mut rng).map_err(e)?;
        let first = akd(f, &m.decode(&r1, Stage::First).map_err(e)?).map_err(e)?;
        let combined = akd(f, &m.decode(&r1.concat(&r2), Stage::Combined).map_err(e)?).map_err(e)?;
        d.push(first - combined);
    }
    let (mean, p) = paired_greater(&d);
    Ok(verdict(mean > 0.0 && p < ALPHA, format!("{} frames at BER 0.05: AKD gain of the 320-bit decode {mean:.4}, p={p:.1e}", d.len())))
}

fn ac5(ctx: &Ctx) -> Outcome {
    let m = m0_stage2(ctx)?;
    let det = ctx.detector(&m)?;
    let models = ModelSet { base: Some(m), detector: Some(det), ..ModelSet::default() };
    let grid = ber_grid(0.1);
    let c = sweep_cfg(ChannelKind::Bsc, &grid, &["svc_harq", "rs_irharq"], 200, 5);
    let (rows, _) = run_sweep(&c, &models, &ctx.data.test).map_err(|e| e.to_string())?;
    let svc: Vec<f64> = rows_for(&rows, "svc_harq").iter().map(|r| r.bits.mean()).collect();
    let rs: Vec<f64> = rows_for(&rows, "rs_irharq").iter().map(|r| r.bits.mean()).collect();
    let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let svc_ok = svc[0] == 160.0 && nondecreasing(&svc);
    // flat at the round-1 cost until the radius is exceeded, then a step
    let floor = 1016.0 / 3.0;
    let step = rs.iter().position(|&b| b > 1.5 * floor);
    let rs_ok = rs[0] == floor && nondecreasing(&rs) && step.is_some_and(|k| k > 0 && rs[..k].iter().all(|&b| b <= 1.02 * floor));
    let fmt = |v: &[f64]| v.iter().map(|b| format!("{b:.1}")).collect::<Vec<_>>().join(" ");
    Ok(verdict(svc_ok && rs_ok, format!("bits/frame over BER {:?}: svc_harq [{}], rs_irharq [{}]", grid, fmt(&svc), fmt(&rs))))
}

fn ac6(ctx: &Ctx) -> Outcome {
    let m = m0_stage2(ctx)?;
    let det = ctx.detector(&m)?;
    let e = |e: svclink::Error| e.to_string();
    let pairs = fluency_pairs(&m, &ctx.data.test[..50], &ber_grid(0.2), 606).map_err(e)?;
    let scores: Vec<f64> = pairs.iter().map(|p| det.score(&p.reference, &p.decoded)).collect::<svclink::Result<_>>().map_err(e)?;
    let labels: Vec<bool> = pairs.iter().map(|p| p.label).collect();
    let area = auc(&scores, &labels).map_err(e)?;

    let trials = 200;
    let link = BitLink::Bsc { ber: 0.05 };
    let models = ModelSet { base: Some(m.clone()), detector: Some(det), ..ModelSet::default() };
    let mut harq_akd = Vec::new();
    let mut harq_bits = Vec::new();
    for t in 0..trials {
        for f in run_trial(SweepScheme::Link(Scheme::SvcHarq), &models, &link, &ctx.data.test[t], 4, trial_seed(6, 0, t)).map_err(e)? {
            harq_akd.push(f.record.akd);
            harq_bits.push(f.record.bits_used);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let bits = mean(&harq_bits);
    // the blind sender spreads the same budget evenly without feedback
    let (lo, hi) = if bits <= 320.0 { (160.0, 320.0) } else { (320.0, 640.0) };
    let p = ((bits - lo) / (hi - lo)).clamp(0.0, 1.0);
    let links = SvcLinks::for_scheme(Scheme::Svc, &link);
    let mut blind_akd = Vec::new();
    let mut blind_bits = Vec::new();
    let mut k = 0usize;
    for t in 0..trials {
        let s = &ctx.data.test[t];
        let budgets: Vec<usize> = (1..s.len())
            .map(|_| {
                k += 1;
                if ((k as f64) * p).floor() > ((k - 1) as f64 * p).floor() {
                    hi as usize
                } else {
                    lo as usize
                }
            })
            .collect();
        let out = run_svc_blind(&m, s, &links, &budgets, &mut ChaCha8Rng::seed_from_u64(trial_seed(6, 0, t))).map_err(e)?;
        for r in out.records {
            blind_akd.push(r.akd);
            blind_bits.push(r.bits_used);
        }
    }
    let (ha, ba, bb) = (mean(&harq_akd), mean(&blind_akd), mean(&blind_bits));
    let equal_bits = (bb - bits).abs() <= 0.1 * bits;
    Ok(verdict(
        area > 0.9 && ha < ba && equal_bits,
        format!("AUC {area:.3} on {} held-out pairs; BER 0.05: SVC-HARQ AKD {ha:.4} @ {bits:.1} bits vs blind SVC AKD {ba:.4} @ {bb:.1} bits", pairs.len()),
    ))
}

fn ac7(ctx: &Ctx) -> Outcome {
    let plain = ofdm_pair(ctx, false)?;
    let csi = ofdm_pair(ctx, true)?;
    let e = |e: svclink::Error| e.to_string();

    // (a) stage-1 MSE, CSI-sorted vs unsorted, same channel and noise draws
    let snr = 15.0;
    let frames: Vec<_> = ctx.data.test.iter().flat_map(|s| s.frames[1..].iter().cloned()).take(1000).collect();
    let mut d = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let mse = |m: &CodecModel, use_csi: bool| -> Result<f64, String> {
            let link = BitLink::Ofdm { profile: ChannelProfile::matched(), snr_db: snr, use_csi };
            let rx = link.transmit(&m.encode(f).map_err(e)?, &mut ChaCha8Rng::seed_from_u64(7000 + i as u64)).map_err(e)?;
            let k = m.decode(&rx, Stage::First).map_err(e)?;
            Ok(svclink::kpstream::mse_flat(&f.flatten(), &k.flatten()))
        };
        d.push(mse(&plain, false)? - mse(&csi, true)?);
    }
    let (gain, p) = paired_greater(&d);
    let a_ok = gain > 0.0 && p < ALPHA;

    // (b), (c) HARQ comparison on mismatched and matched channels
    let models = ModelSet {
        detector: Some(ctx.detector(&plain)?),
        csi_detector: Some(ctx.detector(&csi)?),
        base: Some(plain),
        csi: Some(csi),
        ..ModelSet::default()
    };
    let snrs: Vec<f64> = [0.02, 0.05, 0.08].iter().map(|&b| svclink::phy::theory::rayleigh_snr_db_for_ber(b).expect("in range")).collect();
    let run = |taps: usize, seed: u64| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>), String> {
        let mut c = sweep_cfg(ChannelKind::Ofdm, &snrs, &["svc_harq", "svc_csi_harq"], 200, seed);
        c.channel.taps = taps;
        let (rows, _) = run_sweep(&c, &models, &ctx.data.test).map_err(e)?;
        let get = |s: &str, f: fn(&SweepRow) -> f64| rows_for(&rows, s).iter().map(|r| f(r)).collect::<Vec<f64>>();
        Ok((get("svc_harq", |r| r.akd.mean()), get("svc_csi_harq", |r| r.akd.mean()), get("svc_harq", |r| r.bits.mean()), get("svc_csi_harq", |r| r.bits.mean())))
    };
    let (mm_h, mm_c, _, _) = run(5, 71)?;
    let (m_h, m_c, m_hb, m_cb) = run(3, 72)?;
    let b_ok = mm_h.iter().zip(&mm_c).all(|(h, c)| (c - h).abs() <= 0.1 * h);
    let c_ok = m_h.iter().zip(&m_c).all(|(h, c)| c <= h);
    let f = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    Ok(verdict(
        a_ok && b_ok && c_ok,
        format!(
            "(a) {snr} dB stage-1 MSE gain with CSI {gain:.2e} p={p:.1e}; (b) 5-tap AKD harq [{}] csi_harq [{}]; (c) 3-tap at BER 0.02/0.05/0.08 AKD harq [{}] csi_harq [{}], bits [{}] vs [{}]",
            f(&mm_h),
            f(&mm_c),
            f(&m_h),
            f(&m_c),
            f(&m_hb),
            f(&m_cb)
        ),
    ))
}

fn qam_ber(ch_of: &mut dyn FnMut(&mut ChaCha8Rng) -> ChannelRealization, bits: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = ConstellationMode::qam16(16);
    let (mut flips, mut total) = (0usize, 0usize);
    while total < bits {
        let ch = ch_of(&mut rng);
        let b: svclink::Bits = (0..16 * 4).map(|_| rng.gen_range(0..2u8)).collect();
        flips += transmit_bits(&b, &ch, &mode, false, &mut rng).map_err(|e| e.to_string())?.flips.iter().filter(|&&x| x == 1).count();
        total += b.len();
    }
    Ok(flips as f64 / total as f64)
}

fn ac8(_: &Ctx) -> Outcome {
    let t = Instant::now();
    let report = cmd_validate(&ValidateOptions { rs_trials: 50, ..ValidateOptions::default() }).map_err(|e| e.to_string())?;
    let mut pass = report.passed();
    let mut detail: Vec<String> = report.properties.iter().map(|p| format!("{} {}/{}", p.name, p.checked - p.failures, p.checked)).collect();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for snr_db in [6.0, 8.0, 10.0, 12.0, 14.0, 15.0, 16.0] {
        let snr = 10f64.powf(snr_db / 10.0);
        for (theory, rayleigh) in [(qam16_ber_awgn(snr), false), (qam16_ber_rayleigh(snr), true)] {
            if !(1e-3..=1e-1).contains(&theory) {
                continue;
            }
            let bits = (20000.0 / theory) as usize;
            let mut ch_of = |rng: &mut ChaCha8Rng| {
                if rayleigh {
                    realize_channel_with(rng, &ChannelProfile::matched(), snr_db_to_noise_power(snr_db)).expect("channel")
                } else {
                    ChannelRealization::flat(16, snr_db_to_noise_power(snr_db))
                }
            };
            let sim = qam_ber(&mut ch_of, bits, 80 + points)?;
            worst = worst.max((sim - theory).abs() / theory);
            points += 1;
        }
    }
    pass &= worst < 0.1;
    detail.push(format!("16-QAM BER vs closed form at {points} points: worst {:.1}% off", 100.0 * worst));
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    detail.push(format!("{secs:.0} s"));
    Ok(verdict(pass, detail.join(", ")))
}

const CONSTELLATION_EPOCHS: usize = 200;

fn ac9(ctx: &Ctx) -> Outcome {
    // same schedule as `svclink train` with constellations enabled
    let snr = [0.0, 20.0];
    let (qam, _) = ctx.stage1("qam16", CodecModel::new(10, 160, 2, 8).map_err(|e| e.to_string())?, cfg(CONSTELLATION_EPOCHS, BerSpec::Fixed(0.0), ofdm(snr, true), 8))?;
    let (full, _) = ctx.stage1(
        "full_resolution",
        CodecModel::new_symbol(10, 160, Transport::FullResolution, 9).map_err(|e| e.to_string())?,
        cfg(CONSTELLATION_EPOCHS, BerSpec::Fixed(0.0), ofdm(snr, true), 9),
    )?;
    let (quant, _) = ctx.stage1(
        "quantized_resolution",
        CodecModel::new_symbol(10, 160, Transport::QuantizedResolution { alpha: 2.0, beta: 1.0, powers: vec![1.0; 16] }, 10).map_err(|e| e.to_string())?,
        cfg(CONSTELLATION_EPOCHS, BerSpec::Fixed(0.0), ofdm(snr, true), 10),
    )?;
    let models = ModelSet { qam16: Some(qam), full_resolution: Some(full), quantized_resolution: Some(quant), ..ModelSet::default() };
    let grid = [0.0, 2.0, 4.0, 8.0, 12.0, 16.0, 20.0];
    let c = sweep_cfg(ChannelKind::Ofdm, &grid, &["full_resolution", "quantized_resolution", "qam16"], 500, 9);
    let (rows, _) = run_sweep(&c, &models, &ctx.data.test).map_err(|e| e.to_string())?;
    let mse = |s: &str| rows_for(&rows, s).iter().map(|r| r.mse.mean()).collect::<Vec<f64>>();
    let (f, q, m) = (mse("full_resolution"), mse("quantized_resolution"), mse("qam16"));
    let low = 0..3;
    let order_low = low.clone().all(|i| f[i] <= q[i] && q[i] <= m[i]);
    // relative advantage of quantized over 16-QAM must shrink (or flip) at high SNR
    let gap = |i: usize| (m[i] - q[i]) / m[i];
    let gap_low = low.map(gap).sum::<f64>() / 3.0;
    let gap_high = (grid.len() - 2..grid.len()).map(gap).sum::<f64>() / 2.0;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
    Ok(verdict(
        order_low && gap_high < gap_low,
        format!("MSE over {grid:?} dB: full [{}], quantized [{}], qam16 [{}]; quantized gain over qam16 {:.0}% low vs {:.0}% high", fmt(&f), fmt(&q), fmt(&m), 100.0 * gap_low, 100.0 * gap_high),
    ))
}

fn main() {
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC-")).collect();
    let all: [(&str, fn(&Ctx) -> Outcome); 9] = [
        ("AC-1", ac1),
        ("AC-2", ac2),
        ("AC-3", ac3),
        ("AC-4", ac4),
        ("AC-5", ac5),
        ("AC-6", ac6),
        ("AC-7", ac7),
        ("AC-8", ac8),
        ("AC-9", ac9),
    ];
    let ctx = Ctx::new();
    // a measured FAIL is a result, not a broken harness; only errors abort
    // `cargo test` unless ACCEPTANCE_STRICT is set
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some();
    let (mut failed, mut errors) = (0, 0);
    for (name, f) in all {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == name) {
            continue;
        }
        let t = Instant::now();
        let line = match f(&ctx) {
            Ok(v) => {
                failed += !v.pass as usize;
                format!("{name} {} {} [{:.0} s]", if v.pass { "PASS" } else { "FAIL" }, v.detail, t.elapsed().as_secs_f64())
            }
            Err(e) => {
                errors += 1;
                format!("{name} FAIL error: {e}")
            }
        };
        println!("{line}");
    }
    if errors > 0 || (strict && failed > 0) {
        std::process::exit(1);
    }
}
