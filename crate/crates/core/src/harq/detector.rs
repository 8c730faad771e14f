use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{arg, Error, Result};
use crate::kpstream::{akd, KeypointFrame, KeypointStream, FLUENCY_AKD_THRESHOLD};
use crate::neuralcodec::{CodecModel, Stage, Tokens};
use crate::phy::bsc_with;

const MAGIC: &str = "svcdetector";
const RIDGE: f64 = 1e-6;

/// One logistic unit over the squared coordinate differences between a
/// decoded frame and its reference.
#[derive(Clone, Debug, PartialEq)]
pub struct FluencyDetector {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `(a_j − b_j)²` per flattened coordinate.
pub fn features(reference: &KeypointFrame, decoded: &KeypointFrame) -> Vec<f64> {
    reference.flatten().iter().zip(decoded.flatten()).map(|(a, b)| (a - b) * (a - b)).collect()
}

impl FluencyDetector {
    pub fn n(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn score_features(&self, f: &[f64]) -> f64 {
        sigmoid(self.weights.iter().zip(f).map(|(w, x)| w * x).sum::<f64>() + self.bias)
    }

    /// Probability that `decoded` is a fluent continuation of `reference`.
    pub fn score(&self, reference: &KeypointFrame, decoded: &KeypointFrame) -> Result<f64> {
        if reference.n() != self.n() || decoded.n() != self.n() {
            return arg("frame size does not match the detector");
        }
        Ok(self.score_features(&features(reference, decoded)))
    }

    pub fn accepts(&self, score: f64) -> bool {
        score > self.threshold
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{MAGIC} 1")?;
        writeln!(w, "n {}", self.n())?;
        writeln!(w, "threshold {:?}", self.threshold)?;
        writeln!(w, "bias {:?}", self.bias)?;
        write!(w, "weights")?;
        for v in &self.weights {
            write!(w, " {v:?}")?;
        }
        writeln!(w)?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut t = Tokens::new(r);
        let head = t.next_line()?;
        if head != [MAGIC, "1"] {
            return t.error(format!("not a {MAGIC} v1 file"));
        }
        let n: usize = t.scalar("n")?;
        let threshold: f64 = t.scalar("threshold")?;
        let bias: f64 = t.scalar("bias")?;
        let w = t.keyed("weights", 2 * n)?;
        let weights = w.iter().map(|s| t.parse::<f64>(s)).collect::<Result<Vec<_>>>()?;
        t.finish()?;
        Ok(FluencyDetector { weights, bias, threshold })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Self::read(BufReader::new(std::fs::File::open(path)?))
    }
}

/// A decoded frame, the reference it is judged against, and its label.
#[derive(Clone, Debug, PartialEq)]
pub struct FluencyPair {
    pub reference: KeypointFrame,
    pub decoded: KeypointFrame,
    /// True AKD between the decoded frame and the transmitted one.
    pub akd: f64,
    /// `akd < FLUENCY_AKD_THRESHOLD`.
    pub label: bool,
    pub ber: f64,
}

/// Labeled pairs from running the stage-1 codec over a BSC at each BER in
/// `ber_grid`. The reference of frame `i` is the noiseless decode of frame
/// `i − 1`.
pub fn fluency_pairs(model: &CodecModel, streams: &[KeypointStream], ber_grid: &[f64], seed: u64) -> Result<Vec<FluencyPair>> {
    let mut out = Vec::new();
    for (si, stream) in streams.iter().enumerate() {
        let clean_bits: Vec<_> = stream.frames.iter().map(|f| model.encode(f)).collect::<Result<_>>()?;
        let clean = model.decode_many(&clean_bits, Stage::First)?;
        for (gi, &ber) in ber_grid.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((si as u64) << 20) ^ ((gi as u64) << 48));
            let noisy: Vec<_> = clean_bits[1..].iter().map(|b| bsc_with(b, ber, &mut rng)).collect::<Result<_>>()?;
            let decoded = model.decode_many(&noisy, Stage::First)?;
            for (i, d) in decoded.into_iter().enumerate() {
                let a = akd(&stream.frames[i + 1], &d)?;
                out.push(FluencyPair { reference: clean[i].clone(), decoded: d, akd: a, label: a < FLUENCY_AKD_THRESHOLD, ber });
            }
        }
    }
    Ok(out)
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major `d × d`).
fn cholesky_solve(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = a[i * d + j] - (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    let mut y = vec![0.0; d];
    for i in 0..d {
        y[i] = (b[i] - (0..i).map(|k| l[i * d + k] * y[k]).sum::<f64>()) / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        x[i] = (y[i] - (i + 1..d).map(|k| l[k * d + i] * x[k]).sum::<f64>()) / l[i * d + i];
    }
    Some(x)
}

/// Fits the detector by Newton's method (IRLS) on cross-entropy with a
/// small ridge, on standardized features; weights are returned in raw units.
pub fn train_fluency(pairs: &[FluencyPair]) -> Result<FluencyDetector> {
    let positives = pairs.iter().filter(|p| p.label).count();
    if positives == 0 || positives == pairs.len() {
        return Err(Error::Training("fluency training data must contain both classes".into()));
    }
    let x: Vec<Vec<f64>> = pairs.iter().map(|p| features(&p.reference, &p.decoded)).collect();
    let y: Vec<f64> = pairs.iter().map(|p| if p.label { 1.0 } else { 0.0 }).collect();
    let width = x[0].len();
    let count = x.len() as f64;
    let mean: Vec<f64> = (0..width).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / count).collect();
    let std: Vec<f64> = (0..width)
        .map(|j| (x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / count).sqrt().max(1e-12))
        .collect();
    let z: Vec<Vec<f64>> = x.iter().map(|r| r.iter().enumerate().map(|(j, v)| (v - mean[j]) / std[j]).chain([1.0]).collect()).collect();

    let d = width + 1;
    let mut w = vec![0.0; d];
    for _ in 0..100 {
        let mut grad = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        for (row, &t) in z.iter().zip(&y) {
            let p = sigmoid(row.iter().zip(&w).map(|(a, b)| a * b).sum());
            let s = (p * (1.0 - p)).max(1e-12);
            for i in 0..d {
                grad[i] += (p - t) * row[i];
                for j in 0..=i {
                    hess[i * d + j] += s * row[i] * row[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                hess[j * d + i] = hess[i * d + j];
            }
            // ridge on weights only, not the bias
            if i < width {
                hess[i * d + i] += RIDGE * count;
                grad[i] += RIDGE * count * w[i];
            }
        }
        let step = cholesky_solve(&hess, &grad, d).ok_or_else(|| Error::Training("singular Hessian".into()))?;
        let mut change = 0.0f64;
        for i in 0..d {
            w[i] -= step[i];
            change = change.max(step[i].abs());
        }
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::Training("fluency fit diverged".into()));
        }
        if change < 1e-10 {
            break;
        }
    }
    let weights: Vec<f64> = (0..width).map(|j| w[j] / std[j]).collect();
    let bias = w[width] - (0..width).map(|j| w[j] * mean[j] / std[j]).sum::<f64>();
    Ok(FluencyDetector { weights, bias, threshold: 0.5 })
}

/// Area under the ROC curve via the Mann–Whitney statistic (ties count ½).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return arg("scores and labels differ in length");
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return arg("AUC needs both classes");
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    Ok((rank_sum - (pos * (pos + 1)) as f64 / 2.0) / (pos * neg) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(v: &[f64]) -> KeypointFrame {
        KeypointFrame::from_flat(v).unwrap()
    }

    /// Pairs whose label depends on the size of a random offset.
    fn synthetic_pairs(count: usize) -> Vec<FluencyPair> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        (0..count)
            .map(|_| {
                let r = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
                let size = rng.gen_range(0.0..0.1);
                let angle: f64 = rng.gen_range(0.0..6.28);
                let d = [r[0] + size * angle.cos(), r[1] + size * angle.sin()];
                let noisy_label = if rng.gen_bool(0.05) { size >= 0.04 } else { size < 0.04 };
                FluencyPair { reference: frame(&r), decoded: frame(&d), akd: size, label: noisy_label, ber: 0.0 }
            })
            .collect()
    }

    #[test]
    fn learns_threshold_on_distance() {
        let pairs = synthetic_pairs(2000);
        let det = train_fluency(&pairs).unwrap();
        let scores: Vec<f64> = pairs.iter().map(|p| det.score(&p.reference, &p.decoded).unwrap()).collect();
        let labels: Vec<bool> = pairs.iter().map(|p| p.label).collect();
        assert!(auc(&scores, &labels).unwrap() > 0.9);
        assert!(det.bias > 0.0);
        let f = frame(&[0.1, 0.2]);
        assert!(det.accepts(det.score(&f, &f).unwrap()));
        assert!((det.score(&f, &f).unwrap() - sigmoid(det.bias)).abs() < 1e-15);
        assert!(!det.accepts(det.score(&f, &frame(&[0.2, 0.3])).unwrap()));
    }

    #[test]
    fn single_class_is_rejected() {
        let mut pairs = synthetic_pairs(20);
        pairs.iter_mut().for_each(|p| p.label = true);
        assert!(matches!(train_fluency(&pairs), Err(Error::Training(_))));
    }

    #[test]
    fn auc_oracle_values() {
        assert_eq!(auc(&[0.1, 0.2, 0.3, 0.4], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(auc(&[0.4, 0.3, 0.2, 0.1], &[false, false, true, true]).unwrap(), 0.0);
        assert_eq!(auc(&[0.5, 0.5], &[false, true]).unwrap(), 0.5);
        // brute-force pair count
        let s = [0.3, 0.1, 0.7, 0.7, 0.2, 0.9];
        let l = [true, false, true, false, false, true];
        let mut wins = 0.0;
        let mut total = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                if l[i] && !l[j] {
                    total += 1.0;
                    wins += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
                }
            }
        }
        assert!((auc(&s, &l).unwrap() - wins / total).abs() < 1e-15);
    }

    #[test]
    fn keypoint_relabeling_symmetry() {
        let det = FluencyDetector { weights: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], bias: 0.3, threshold: 0.5 };
        let a = frame(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let b = frame(&[0.0, 0.25, 0.35, 0.1, 0.5, 0.9]);
        // swap keypoints 0 and 2 in both frames and in the weights
        let perm = [2usize, 1, 0];
        let pf = |f: &KeypointFrame| KeypointFrame::new(perm.iter().map(|&p| f.coords()[p]).collect()).unwrap();
        let pw: Vec<f64> = perm.iter().flat_map(|&p| [det.weights[2 * p], det.weights[2 * p + 1]]).collect();
        let det2 = FluencyDetector { weights: pw, ..det.clone() };
        let s1 = det.score(&a, &b).unwrap();
        let s2 = det2.score(&pf(&a), &pf(&b)).unwrap();
        assert!((s1 - s2).abs() < 1e-15);
    }

    #[test]
    fn persistence_round_trip() {
        let det = train_fluency(&synthetic_pairs(300)).unwrap();
        let mut buf = Vec::new();
        det.write(&mut buf).unwrap();
        assert_eq!(FluencyDetector::read(buf.as_slice()).unwrap(), det);
        assert!(matches!(FluencyDetector::load("/nonexistent.svcmodel"), Err(Error::MissingArtifact(_))));
    }
}
