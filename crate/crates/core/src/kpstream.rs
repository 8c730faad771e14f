//! Keypoint frames and streams, the AKD metric and dataset splits.
//!
//! Coordinates are normalized image coordinates in `[-1, 1]`. For a 256×256
//! frame one normalized unit is [`PIXELS_PER_UNIT`] pixels; AKD values here
//! are always reported in normalized units.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{arg, Error, Result};

pub const DEFAULT_KEYPOINTS: usize = 10;

/// Normalized-to-pixel scale for a 256×256 frame.
pub const PIXELS_PER_UNIT: f64 = 128.0;

/// Fluency label threshold: 5 pixels on a 256×256 frame, i.e. 5 × 2/256.
pub const FLUENCY_AKD_THRESHOLD: f64 = 5.0 * 2.0 / 256.0;

/// Per-frame, per-axis bound on coordinate change for the smooth profile.
pub const SMOOTH_MAX_STEP: f64 = 0.03;

/// Half-width of the uniform jitter added by the jittery profile.
pub const JITTER_AMPLITUDE: f64 = 0.01;

pub const DEFAULT_FRAME_RATE: f64 = 25.0;

/// One frame's `n` keypoints.
#[derive(Clone, Debug, PartialEq)]
pub struct KeypointFrame {
    coords: Vec<[f64; 2]>,
}

impl KeypointFrame {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.is_empty() {
            return arg("a frame needs at least one keypoint");
        }
        if let Some(c) = coords.iter().flatten().find(|c| !(-1.0..=1.0).contains(*c)) {
            return arg(format!("coordinate {c} outside [-1, 1]"));
        }
        Ok(KeypointFrame { coords })
    }

    /// Builds a frame from `2n` interleaved values `x1, y1, ..., xn, yn`.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() % 2 != 0 {
            return arg(format!("odd number of coordinates ({})", values.len()));
        }
        Self::new(values.chunks(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Interleaved `x1, y1, ..., xn, yn`.
    pub fn flatten(&self) -> Vec<f64> {
        self.coords.iter().flatten().copied().collect()
    }
}

/// Average keypoint distance: mean Euclidean distance between corresponding
/// keypoints, in normalized units.
pub fn akd(a: &KeypointFrame, b: &KeypointFrame) -> Result<f64> {
    if a.n() != b.n() {
        return arg(format!("keypoint count mismatch: {} vs {}", a.n(), b.n()));
    }
    Ok(akd_flat(&a.flatten(), &b.flatten()))
}

/// AKD over interleaved coordinate slices of equal length.
pub fn akd_flat(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() / 2;
    let sum: f64 = a
        .chunks(2)
        .zip(b.chunks(2))
        .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
        .sum();
    sum / n as f64
}

/// Keypoint MSE `‖a − b‖² / (2n)` over interleaved coordinates.
pub fn mse_flat(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    s / a.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeypointStream {
    pub frames: Vec<KeypointFrame>,
    /// Frames per second; metadata only.
    pub frame_rate: f64,
    pub stream_id: String,
}

impl KeypointStream {
    pub fn new(frames: Vec<KeypointFrame>, frame_rate: f64, stream_id: impl Into<String>) -> Result<Self> {
        if frames.len() < 2 {
            return arg("length ≥ 2 required");
        }
        let n = frames[0].n();
        if frames.iter().any(|f| f.n() != n) {
            return arg("frames disagree on keypoint count");
        }
        Ok(KeypointStream { frames, frame_rate, stream_id: stream_id.into() })
    }

    pub fn n(&self) -> usize {
        self.frames[0].n()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionProfile {
    Smooth,
    Jittery,
}

// Neutral face layout for the first ten keypoints: brows, eyes, nose tip,
// mouth corners, lips.
const FACE_TEMPLATE: [[f64; 2]; 10] = [
    [-0.30, -0.38],
    [0.30, -0.38],
    [-0.28, -0.22],
    [0.28, -0.22],
    [0.00, 0.02],
    [-0.22, 0.32],
    [0.22, 0.32],
    [0.00, 0.26],
    [0.00, 0.40],
    [0.00, 0.62],
];

#[derive(Clone, Copy)]
enum Region {
    Brow,
    Eye,
    Nose,
    MouthCorner,
    UpperLip,
    LowerLip,
    Jaw,
}

fn template_point(j: usize) -> ([f64; 2], Region) {
    if j < FACE_TEMPLATE.len() {
        let region = match j {
            0 | 1 => Region::Brow,
            2 | 3 => Region::Eye,
            4 => Region::Nose,
            5 | 6 => Region::MouthCorner,
            7 => Region::UpperLip,
            8 => Region::LowerLip,
            _ => Region::Jaw,
        };
        (FACE_TEMPLATE[j], region)
    } else {
        // extra points go along the jaw line
        let t = (j - FACE_TEMPLATE.len()) as f64 * 0.61803398875 * 2.0 * PI;
        ([0.5 * t.cos(), 0.1 + 0.5 * t.sin().abs()], Region::Jaw)
    }
}

/// Sum of three sinusoids with random amplitude, frequency and phase.
struct Trajectory {
    terms: [(f64, f64, f64); 3],
}

impl Trajectory {
    fn new(rng: &mut ChaCha8Rng, amplitude: f64, frame_rate: f64) -> Self {
        let mut term = || {
            let a = amplitude * rng.gen_range(0.2..1.0) / 3.0;
            let hz = rng.gen_range(0.05..0.8);
            let phase = rng.gen_range(0.0..2.0 * PI);
            (a, 2.0 * PI * hz / frame_rate, phase)
        };
        Trajectory { terms: [term(), term(), term()] }
    }

    fn at(&self, t: f64) -> f64 {
        self.terms.iter().map(|(a, w, p)| a * (w * t + p).sin()).sum()
    }
}

/// Generates a synthetic face keypoint stream.
///
/// A per-stream identity (template jitter, position, scale) is animated by
/// sinusoidal head pose (translation, roll, scale) and expression (mouth
/// opening, smile, brow raise) trajectories. Every per-axis frame-to-frame
/// step is limited to [`SMOOTH_MAX_STEP`]; the jittery profile adds
/// independent uniform noise of ±[`JITTER_AMPLITUDE`] on top. All
/// coordinates are clamped to `[-1, 1]`.
pub fn synth_stream(seed: u64, n: usize, num_frames: usize, profile: MotionProfile) -> Result<KeypointStream> {
    if n < 1 {
        return arg("n must be at least 1");
    }
    if num_frames < 2 {
        return arg("num_frames must be at least 2");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fr = DEFAULT_FRAME_RATE;

    let identity: Vec<([f64; 2], Region)> = (0..n)
        .map(|j| {
            let ([x, y], r) = template_point(j);
            ([x + rng.gen_range(-0.04..0.04), y + rng.gen_range(-0.04..0.04)], r)
        })
        .collect();
    let center = [rng.gen_range(-0.12..0.12), rng.gen_range(-0.12..0.12)];
    let base_scale = rng.gen_range(0.75..1.0);

    let tx = Trajectory::new(&mut rng, 0.15, fr);
    let ty = Trajectory::new(&mut rng, 0.10, fr);
    let roll = Trajectory::new(&mut rng, 0.15, fr);
    let zoom = Trajectory::new(&mut rng, 0.06, fr);
    let mouth = Trajectory::new(&mut rng, 0.08, fr);
    let smile = Trajectory::new(&mut rng, 0.04, fr);
    let brow = Trajectory::new(&mut rng, 0.04, fr);

    let step = SMOOTH_MAX_STEP * (1.0 - 1e-9);
    let mut frames = Vec::with_capacity(num_frames);
    let mut prev: Option<Vec<f64>> = None;
    for i in 0..num_frames {
        let t = i as f64;
        let open = 0.5 * (mouth.at(t) + 0.08).max(0.0);
        let (sm, br) = (smile.at(t), brow.at(t));
        let (cos, sin) = (roll.at(t).cos(), roll.at(t).sin());
        let s = base_scale * (1.0 + zoom.at(t));
        let (cx, cy) = (center[0] + tx.at(t), center[1] + ty.at(t));

        let mut raw = Vec::with_capacity(2 * n);
        for ([x, y], region) in &identity {
            let (mut px, mut py) = (*x, *y);
            match region {
                Region::Brow => py -= br.abs(),
                Region::MouthCorner => px += px.signum() * sm,
                Region::UpperLip => py -= 0.2 * open,
                Region::LowerLip => py += open,
                Region::Jaw => py += 0.7 * open,
                Region::Eye | Region::Nose => {}
            }
            raw.push(cx + s * (cos * px - sin * py));
            raw.push(cy + s * (sin * px + cos * py));
        }

        let smooth: Vec<f64> = match &prev {
            None => raw.iter().map(|v| v.clamp(-1.0, 1.0)).collect(),
            Some(p) => raw
                .iter()
                .zip(p)
                .map(|(r, q)| (q + (r - q).clamp(-step, step)).clamp(-1.0, 1.0))
                .collect(),
        };
        let coords: Vec<f64> = match profile {
            MotionProfile::Smooth => smooth.clone(),
            MotionProfile::Jittery => smooth
                .iter()
                .map(|v| (v + rng.gen_range(-JITTER_AMPLITUDE..=JITTER_AMPLITUDE)).clamp(-1.0, 1.0))
                .collect(),
        };
        prev = Some(smooth);
        frames.push(KeypointFrame::from_flat(&coords)?);
    }
    KeypointStream::new(frames, fr, format!("synth-{seed}"))
}

fn header(n: usize) -> Vec<String> {
    let mut h = vec!["frame".to_string()];
    for j in 1..=n {
        h.push(format!("x{j}"));
        h.push(format!("y{j}"));
    }
    h
}

/// Writes the keypoint CSV (`frame,x1,y1,...,xn,yn`) with round-trip precision.
pub fn write_stream<W: Write>(stream: &KeypointStream, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wr.write_record(header(stream.n()))?;
    for (i, f) in stream.frames.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(f.flatten().iter().map(|v| format!("{v:?}")));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn save_stream(stream: &KeypointStream, path: impl AsRef<Path>) -> Result<()> {
    write_stream(stream, BufWriter::new(File::create(path)?))
}

/// Parses a keypoint CSV. The stream id is left empty.
pub fn read_stream<R: Read>(r: R) -> Result<KeypointStream> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    let mut records = rd.records();
    let head = match records.next() {
        None => return Err(Error::Parse { line: 1, msg: "length ≥ 2 required".into() }),
        Some(h) => h?,
    };
    if head.get(0) != Some("frame") || head.len() < 3 || head.len() % 2 == 0 {
        return Err(Error::Parse { line: 1, msg: "expected header frame,x1,y1,...,xn,yn".into() });
    }
    let n = (head.len() - 1) / 2;
    if head.iter().collect::<Vec<_>>() != header(n) {
        return Err(Error::Parse { line: 1, msg: "expected header frame,x1,y1,...,xn,yn".into() });
    }
    let mut frames = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let perr = |msg: String| Error::Parse { line, msg };
        if rec.len() != 2 * n + 1 {
            return Err(perr(format!("expected {} fields, found {}", 2 * n + 1, rec.len())));
        }
        rec[0].trim().parse::<u64>().map_err(|_| perr(format!("bad frame index {:?}", &rec[0])))?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>().map_err(|_| perr(format!("bad number {s:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(v) = vals.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(perr(format!("coordinate {v} outside [-1, 1]")));
        }
        frames.push(KeypointFrame::from_flat(&vals).map_err(|e| perr(e.to_string()))?);
    }
    if frames.len() < 2 {
        return Err(Error::Parse { line: frames.len() + 1, msg: "length ≥ 2 required".into() });
    }
    KeypointStream::new(frames, DEFAULT_FRAME_RATE, "")
}

pub fn load_stream(path: impl AsRef<Path>) -> Result<KeypointStream> {
    let path = path.as_ref();
    let mut s = read_stream(BufReader::new(File::open(path)?))?;
    s.stream_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(s)
}

/// Train / validation / test streams drawn from disjoint seed ranges.
#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub train: Vec<KeypointStream>,
    pub validation: Vec<KeypointStream>,
    pub test: Vec<KeypointStream>,
}

#[derive(Clone, Debug, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub seed: u64,
    pub n: usize,
    pub frames_per_stream: usize,
    pub train_streams: usize,
    pub validation_streams: usize,
    pub test_streams: usize,
    pub profile: MotionProfile,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            seed: 0,
            n: DEFAULT_KEYPOINTS,
            frames_per_stream: 25,
            train_streams: 256,
            validation_streams: 4,
            test_streams: 16,
            profile: MotionProfile::Smooth,
        }
    }
}

// Seed blocks keep the three splits disjoint for any realistic stream count.
const SPLIT_STRIDE: u64 = 1 << 32;

pub fn synth_dataset(spec: &DatasetSpec) -> Result<DatasetSplit> {
    let make = |offset: u64, count: usize| -> Result<Vec<KeypointStream>> {
        (0..count as u64)
            .map(|i| synth_stream(spec.seed.wrapping_mul(1 << 20).wrapping_add(offset + i), spec.n, spec.frames_per_stream, spec.profile))
            .collect()
    };
    Ok(DatasetSplit {
        train: make(0, spec.train_streams)?,
        validation: make(SPLIT_STRIDE, spec.validation_streams)?,
        test: make(2 * SPLIT_STRIDE, spec.test_streams)?,
    })
}

/// All frames of the given streams, flattened, in stream order.
pub fn all_frames(streams: &[KeypointStream]) -> Vec<KeypointFrame> {
    streams.iter().flat_map(|s| s.frames.iter().cloned()).collect()
}
