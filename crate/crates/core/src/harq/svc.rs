use rand::Rng;

use super::detector::FluencyDetector;
use super::record::TrialRecord;
use super::session::{HarqSession, Scheme, SessionState};
use crate::bits::Bits;
use crate::error::{arg, Result};
use crate::kpstream::{akd, KeypointFrame, KeypointStream, FLUENCY_AKD_THRESHOLD};
use crate::neuralcodec::{CodecModel, Stage};
use crate::phy::BitLink;

/// Source of the semantic ACK.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AckPolicy {
    /// Learned fluency detector against the previous delivered frame.
    Detector,
    /// Genie that knows the true AKD; its score is `1 / (1 + akd / threshold)`,
    /// which exceeds ½ exactly when `akd < threshold`.
    Oracle,
}

/// Links for the stage-1 and incremental transmissions.
#[derive(Clone, Debug, PartialEq)]
pub struct SvcLinks {
    pub first: BitLink,
    pub incremental: BitLink,
}

impl SvcLinks {
    /// Semantic schemes with CSI sort their stage-1 bits; the incremental
    /// stage and the non-CSI schemes never do.
    pub fn for_scheme(scheme: Scheme, link: &BitLink) -> Self {
        let csi = matches!(scheme, Scheme::SvcCsi | Scheme::SvcCsiHarq);
        SvcLinks { first: link.with_csi(csi), incremental: link.with_csi(false) }
    }
}

#[derive(Clone, Debug)]
pub struct StreamOutcome {
    /// Delivered frames; index 0 is the shared first frame.
    pub decoded: Vec<KeypointFrame>,
    /// One record per transmitted frame (frames 1..).
    pub records: Vec<TrialRecord>,
    pub sessions: Vec<HarqSession>,
}

fn judge(policy: AckPolicy, detector: &FluencyDetector, reference: &KeypointFrame, candidate: &KeypointFrame, truth: &KeypointFrame) -> Result<f64> {
    match policy {
        AckPolicy::Detector => detector.score(reference, candidate),
        AckPolicy::Oracle => Ok(1.0 / (1.0 + akd(truth, candidate)? / FLUENCY_AKD_THRESHOLD)),
    }
}

fn record(stream: &KeypointStream, frame: usize, scheme: &str, param: f64, session: &HarqSession, akd: f64, score: f64, accepted: bool) -> TrialRecord {
    TrialRecord {
        stream_id: stream.stream_id.clone(),
        frame,
        scheme: scheme.to_string(),
        ber_or_snr: param,
        rounds: session.tx_count(),
        bits_used: session.bits_used() as f64,
        akd,
        detector_score: score,
        accepted,
    }
}

/// Semantic HARQ over a stream. Frame 0 is shared knowledge and costs no
/// bits. For each later frame: 160 stage-1 bits; on NACK 160 incremental
/// bits decoded jointly; on further NACKs both halves are resent and
/// decoded afresh, up to `max_rounds`. If no round is accepted the
/// best-scoring candidate is delivered. The detector reference is the
/// previous delivered frame, accepted or not; holding it at the last
/// accepted frame makes every later frame look like a jump and rejections
/// chain.
#[allow(clippy::too_many_arguments)]
pub fn run_svc_harq<R: Rng>(
    model: &CodecModel,
    stream: &KeypointStream,
    links: &SvcLinks,
    detector: &FluencyDetector,
    policy: AckPolicy,
    scheme: Scheme,
    max_rounds: usize,
    rng: &mut R,
) -> Result<StreamOutcome> {
    model.stage2()?;
    if policy == AckPolicy::Detector && detector.n() != model.n {
        return arg("detector size does not match the codec");
    }
    let per = model.bits_per_frame();
    let mut reference = stream.frames[0].clone();
    let mut decoded = vec![reference.clone()];
    let mut records = Vec::with_capacity(stream.len() - 1);
    let mut sessions = Vec::with_capacity(stream.len() - 1);
    for (i, truth) in stream.frames.iter().enumerate().skip(1) {
        let mut session = HarqSession::new(scheme, max_rounds)?;
        let b1 = model.encode(truth)?;
        let mut r1 = links.first.transmit(&b1, rng)?;
        session.send(per)?;
        let mut candidate = model.decode(&r1, Stage::First)?;
        let mut score = judge(policy, detector, &reference, &candidate, truth)?;
        let mut best = (score, candidate.clone());
        let mut b2: Option<Bits> = None;
        loop {
            let ack = detector.accepts(score) || (policy == AckPolicy::Oracle && score > 0.5);
            match session.feedback(ack)? {
                SessionState::Done => break,
                SessionState::Incremental => {
                    let bits2 = b2.get_or_insert(model.encode_stage2(truth)?).clone();
                    let r2 = links.incremental.transmit(&bits2, rng)?;
                    session.send(per)?;
                    candidate = model.decode(&r1.concat(&r2), Stage::Combined)?;
                }
                _ => {
                    let bits2 = b2.get_or_insert(model.encode_stage2(truth)?).clone();
                    r1 = links.first.transmit(&b1, rng)?;
                    let r2 = links.incremental.transmit(&bits2, rng)?;
                    session.send(2 * per)?;
                    candidate = model.decode(&r1.concat(&r2), Stage::Combined)?;
                }
            }
            score = judge(policy, detector, &reference, &candidate, truth)?;
            if score > best.0 {
                best = (score, candidate.clone());
            }
        }
        let accepted = session.accepted();
        let (final_score, delivered) = if accepted { (score, candidate) } else { best };
        reference = delivered.clone();
        let name = scheme.name();
        records.push(record(stream, i, name, links.first.parameter(), &session, akd(truth, &delivered)?, final_score, accepted));
        decoded.push(delivered);
        sessions.push(session);
    }
    Ok(StreamOutcome { decoded, records, sessions })
}

/// One-shot stage-1 transmission of every frame after the first.
pub fn run_svc<R: Rng>(model: &CodecModel, stream: &KeypointStream, link: &BitLink, scheme: Scheme, rng: &mut R) -> Result<StreamOutcome> {
    let per = model.bits_per_frame();
    let mut decoded = vec![stream.frames[0].clone()];
    let mut records = Vec::new();
    let mut sessions = Vec::new();
    for (i, truth) in stream.frames.iter().enumerate().skip(1) {
        let mut session = HarqSession::new(scheme, 1)?;
        let rx = link.transmit(&model.encode(truth)?, rng)?;
        session.send(per)?;
        session.feedback(true)?;
        let d = model.decode(&rx, Stage::First)?;
        records.push(record(stream, i, scheme.name(), link.parameter(), &session, akd(truth, &d)?, f64::NAN, true));
        decoded.push(d);
        sessions.push(session);
    }
    Ok(StreamOutcome { decoded, records, sessions })
}

/// Feedback-free semantic transmission with a preassigned bit budget per
/// frame (`budgets[i − 1]` for frame `i`, multiples of the stage size).
/// One stage: stage-1 decode. Two or more: average of `budget / (2·stage)`
/// independent combined decodes.
pub fn run_svc_blind<R: Rng>(model: &CodecModel, stream: &KeypointStream, links: &SvcLinks, budgets: &[usize], rng: &mut R) -> Result<StreamOutcome> {
    model.stage2()?;
    let per = model.bits_per_frame();
    if budgets.len() + 1 != stream.len() {
        return arg("one budget per transmitted frame required");
    }
    let mut decoded = vec![stream.frames[0].clone()];
    let mut records = Vec::new();
    let mut sessions = Vec::new();
    for (i, truth) in stream.frames.iter().enumerate().skip(1) {
        let budget = budgets[i - 1];
        if budget == 0 || budget % per != 0 || (budget > per && budget % (2 * per) != 0) {
            return arg(format!("budget {budget} is not 1 or an even number of stages"));
        }
        let b1 = model.encode(truth)?;
        let mut session = HarqSession::new(Scheme::Svc, 1)?;
        let d = if budget == per {
            let rx = links.first.transmit(&b1, rng)?;
            model.decode(&rx, Stage::First)?
        } else {
            let b2 = model.encode_stage2(truth)?;
            let copies = budget / (2 * per);
            let mut acc = vec![0.0; 2 * model.n];
            for _ in 0..copies {
                let rx = links.first.transmit(&b1, rng)?.concat(&links.incremental.transmit(&b2, rng)?);
                for (a, v) in acc.iter_mut().zip(model.decode(&rx, Stage::Combined)?.flatten()) {
                    *a += v / copies as f64;
                }
            }
            KeypointFrame::from_flat(&acc)?
        };
        session.send(budget)?;
        session.feedback(true)?;
        records.push(record(stream, i, "svc_blind", links.first.parameter(), &session, akd(truth, &d)?, f64::NAN, true));
        decoded.push(d);
        sessions.push(session);
    }
    Ok(StreamOutcome { decoded, records, sessions })
}
