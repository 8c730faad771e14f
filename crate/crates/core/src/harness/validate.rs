use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fec::{crc32, damage, Gf256, RsCode};
use crate::harq::{HarqSession, Scheme, SessionState};
use crate::kpstream::{synth_stream, MotionProfile};
use crate::neuralcodec::{grad_check_detailed, quant, CodecModel};
use crate::phy::{qam, realize_channel_with, sort_csi, ChannelProfile};

/// Outcome of one property: how many cases were checked and how many failed.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub checked: usize,
    pub failures: usize,
    pub detail: String,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:<20} {:>8} checked {:>6} failed", self.name, self.checked, self.failures)?;
        if !self.detail.is_empty() {
            write!(f, "  {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Random patterns per RS radius grid point.
    pub rs_trials: usize,
    /// Test hook: run the RS property on a field with two log entries swapped.
    pub corrupt_rs_table: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { seed: 0, rs_trials: 100, corrupt_rs_table: false }
    }
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub properties: Vec<PropertyResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyResult::passed)
    }
}

/// `(e, f)` pairs on the RS(255,64) decoding boundary and inside it.
pub fn rs_radius_grid() -> Vec<(usize, usize)> {
    let mut grid = Vec::new();
    for e in (0..=95).step_by(8).chain([31, 95]) {
        let top = 191 - 2 * e;
        for f in [0, top / 2, top] {
            if !grid.contains(&(e, f)) {
                grid.push((e, f));
            }
        }
    }
    grid.push((31, 128));
    grid.dedup();
    grid
}

fn rs_radius(opts: &ValidateOptions, rng: &mut ChaCha8Rng) -> Result<PropertyResult> {
    let field = if opts.corrupt_rs_table { Gf256::corrupted() } else { Gf256::new() };
    let code = RsCode::with_field(255, 64, field)?;
    let grid = rs_radius_grid();
    let mut failures = 0;
    let mut first = String::new();
    for &(e, f) in &grid {
        for _ in 0..opts.rs_trials {
            let info: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
            let (r, mask) = damage(rng, &code.encode(&info)?, e, f);
            if code.decode(&r, &mask)? != (info, true) {
                failures += 1;
                if first.is_empty() {
                    first = format!("first failure at e={e} f={f}");
                }
            }
        }
    }
    Ok(PropertyResult { name: "rs_radius", checked: grid.len() * opts.rs_trials, failures, detail: first })
}

fn crc_errors(rng: &mut ChaCha8Rng) -> PropertyResult {
    let mut checked = 1;
    let mut failures = (crc32(b"123456789").0 != 0xCBF4_3926) as usize;
    for _ in 0..8 {
        let msg: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
        let tag = crc32(&msg);
        for bit in 0..msg.len() * 8 {
            let mut m = msg.clone();
            m[bit / 8] ^= 0x80 >> (bit % 8);
            checked += 1;
            failures += (crc32(&m) == tag) as usize;
        }
        for len in 1..=32 {
            for _ in 0..16 {
                // bursts start and end with a flipped bit
                let start = rng.gen_range(0..=msg.len() * 8 - len);
                let mut m = msg.clone();
                for k in 0..len {
                    if k == 0 || k == len - 1 || rng.gen_bool(0.5) {
                        let b = start + k;
                        m[b / 8] ^= 0x80 >> (b % 8);
                    }
                }
                checked += 1;
                failures += (crc32(&m) == tag) as usize;
            }
        }
    }
    PropertyResult { name: "crc_detection", checked, failures, detail: "check value, single bits, bursts ≤ 32".into() }
}

fn gradient(opts: &ValidateOptions) -> Result<PropertyResult> {
    let model = CodecModel::with_defaults(opts.seed);
    let stream = synth_stream(opts.seed, model.n, 3, MotionProfile::Smooth)?;
    let mut worst: f64 = 0.0;
    let (mut compared, mut kinks) = (0, 0);
    for f in &stream.frames[1..] {
        let r = grad_check_detailed(&model, f, 1e-5)?;
        worst = worst.max(r.max_rel_error);
        compared += r.compared;
        kinks += r.kinks;
    }
    Ok(PropertyResult {
        name: "grad_check",
        checked: compared,
        failures: (worst >= 1e-4) as usize,
        detail: format!("max relative error {worst:.2e}, {kinks} parameters at ReLU kinks skipped"),
    })
}

fn csi_permutation(rng: &mut ChaCha8Rng) -> Result<PropertyResult> {
    let mut failures = 0;
    let trials = 1000;
    for t in 0..trials {
        let profile = if t % 2 == 0 { ChannelProfile::matched() } else { ChannelProfile::mismatched() };
        let ch = realize_channel_with(rng, &profile, 0.1)?;
        let perm = sort_csi(&ch);
        let x: Vec<u32> = (0..ch.subchannels() as u32).map(|v| v * 7 + 1).collect();
        let sorted = perm.order().windows(2).all(|w| ch.gain_power(w[0]) >= ch.gain_power(w[1]));
        let round = perm.invert(&perm.apply(&x)?)? == x && perm.apply(&perm.invert(&x)?)? == x;
        failures += (!sorted || !round) as usize;
    }
    Ok(PropertyResult { name: "csi_permutation", checked: trials, failures, detail: String::new() })
}

fn quantizer() -> PropertyResult {
    let mut checked = 0;
    let mut failures = 0;
    for bits in 1..=8u32 {
        for i in 0..quant::levels(bits) {
            checked += 1;
            let code = quant::quantize(quant::level_value(i, bits), bits);
            let ok = quant::gray_decode(quant::gray_encode(i)) == i
                && quant::index_from_bits(&code) == i
                && quant::dequantize(&code) == quant::level_value(i, bits)
                && (i == 0 || (quant::gray_encode(i) ^ quant::gray_encode(i - 1)).count_ones() == 1);
            failures += !ok as usize;
        }
    }
    PropertyResult { name: "quantizer", checked, failures, detail: "all levels, 1..=8 bits".into() }
}

fn qam_mapping() -> PropertyResult {
    let points = qam::constellation();
    let mut failures = 0;
    for (b, s) in &points {
        failures += (qam::demodulate(&[*s]) != b.to_vec()) as usize;
    }
    // nearest neighbours differ in exactly one bit
    let d = 2.0 * qam::unit();
    for (a, sa) in &points {
        for (b, sb) in &points {
            if ((sa - sb).norm() - d).abs() < 1e-9 {
                let diff = a.iter().zip(b).filter(|(x, y)| x != y).count();
                failures += (diff != 1) as usize;
            }
        }
    }
    let energy = points.iter().map(|(_, s)| s.norm_sqr()).sum::<f64>() / 16.0;
    failures += ((energy - 1.0).abs() > 1e-12) as usize;
    PropertyResult { name: "qam16_mapping", checked: points.len(), failures, detail: String::new() }
}

fn harq_accounting(rng: &mut ChaCha8Rng) -> Result<PropertyResult> {
    let trials = 2000;
    let mut failures = 0;
    for _ in 0..trials {
        let cap = rng.gen_range(1..=6);
        let mut s = HarqSession::new(Scheme::SvcHarq, cap)?;
        let mut last = 0;
        loop {
            let round = s.tx_count();
            s.send(if round < 2 { 160 } else { 320 })?;
            failures += (s.bits_used() < last) as usize;
            last = s.bits_used();
            if s.feedback(rng.gen_bool(0.3))? == SessionState::Done {
                break;
            }
        }
        let replay: usize = (0..s.ack_history().len()).map(|r| if r < 2 { 160 } else { 320 }).sum();
        failures += (replay != s.bits_used() || s.tx_count() > cap) as usize;
    }
    Ok(PropertyResult { name: "harq_accounting", checked: trials, failures, detail: String::new() })
}

/// Runs every invariant check with its own seeded generator so that one
/// property's outcome never depends on another's.
pub fn cmd_validate(opts: &ValidateOptions) -> Result<ValidationReport> {
    let rng = |k: u64| ChaCha8Rng::seed_from_u64(opts.seed ^ (k << 40));
    Ok(ValidationReport {
        properties: vec![
            rs_radius(opts, &mut rng(1))?,
            crc_errors(&mut rng(2)),
            gradient(opts)?,
            csi_permutation(&mut rng(3))?,
            quantizer(),
            qam_mapping(),
            harq_accounting(&mut rng(4))?,
        ],
    })
}
