use rand::Rng;

use super::session::{HarqSession, Scheme};
use crate::bits::Bits;
use crate::error::{arg, Result};
use crate::fec::{crc32, CrcTag, RsCode, RS_INFO_SYMBOLS};
use crate::kpstream::KeypointFrame;
use crate::neuralcodec::{CodecModel, Stage};
use crate::phy::BitLink;

/// Frames per RS block: 3 × 160 bits + 32 CRC bits fill the 64 info octets.
pub const RS_BLOCK_FRAMES: usize = 3;
/// Codeword symbols sent in the first round.
pub const FIRST_ROUND_SYMBOLS: usize = 127;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RsVariant {
    /// 127 symbols, then the other 128, then full retransmissions.
    IrHarq,
    /// First 127 symbols only.
    Fixed127,
    /// All 255 symbols at once.
    Fixed255,
}

impl RsVariant {
    pub fn scheme(self) -> Scheme {
        match self {
            RsVariant::IrHarq => Scheme::RsIrharq,
            RsVariant::Fixed127 => Scheme::Rs127,
            RsVariant::Fixed255 => Scheme::Rs255,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RsBlockOutcome {
    pub decoded: Vec<KeypointFrame>,
    pub session: HarqSession,
    /// Whether the delivered payload passed its CRC.
    pub crc_ok: bool,
}

fn send_symbols<R: Rng>(link: &BitLink, symbols: &[u8], rng: &mut R) -> Result<Vec<u8>> {
    Ok(link.transmit(&Bits::from_bytes(symbols), rng)?.to_bytes())
}

fn check(info: &[u8]) -> bool {
    let payload = &info[..RS_INFO_SYMBOLS - 4];
    let tag = CrcTag::from_bytes(info[RS_INFO_SYMBOLS - 4..].try_into().expect("4 octets"));
    crc32(payload) == tag
}

/// Sends a block of three frames through RS(255,64) IR-HARQ with a CRC-32 ACK.
///
/// The stage-1 bits of the three frames (60 octets) plus their CRC form the
/// 64 information symbols. A block whose CRC never passes is delivered from
/// the last decoder output.
pub fn run_rs_irharq<R: Rng>(
    model: &CodecModel,
    code: &RsCode,
    frames: &[KeypointFrame],
    link: &BitLink,
    variant: RsVariant,
    max_rounds: usize,
    rng: &mut R,
) -> Result<RsBlockOutcome> {
    if frames.len() != RS_BLOCK_FRAMES {
        return arg(format!("RS blocks carry exactly {RS_BLOCK_FRAMES} frames"));
    }
    if code.k() != RS_INFO_SYMBOLS || code.n() <= FIRST_ROUND_SYMBOLS {
        return arg("RS-IR-HARQ needs an (n, 64) code with n > 127");
    }
    if RS_BLOCK_FRAMES * model.bits_per_frame() + 32 != 8 * RS_INFO_SYMBOLS {
        return arg("codec payload does not fill the RS information block");
    }
    let mut payload = Bits::default();
    for f in frames {
        payload = payload.concat(&model.encode(f)?);
    }
    let mut info = payload.to_bytes();
    info.extend_from_slice(&crc32(&info).to_bytes());
    let word = code.encode(&info)?;
    let n = code.n();

    let rounds = if variant == RsVariant::IrHarq { max_rounds } else { 1 };
    let mut session = HarqSession::new(variant.scheme(), rounds)?;
    let mut rx = vec![0u8; n];
    let mut erased = vec![true; n];
    let first = if variant == RsVariant::Fixed255 { n } else { FIRST_ROUND_SYMBOLS };
    let got = send_symbols(link, &word[..first], rng)?;
    rx[..first].copy_from_slice(&got);
    erased[..first].iter_mut().for_each(|e| *e = false);
    session.send(8 * first)?;
    let mut delivered;
    loop {
        let (out, ok) = code.decode(&rx, &erased)?;
        delivered = out;
        let ack = ok && check(&delivered);
        match session.feedback(ack)? {
            super::SessionState::Done => break,
            super::SessionState::Incremental => {
                let got = send_symbols(link, &word[first..], rng)?;
                rx[first..].copy_from_slice(&got);
                erased.iter_mut().for_each(|e| *e = false);
                session.send(8 * (n - first))?;
            }
            _ => {
                rx = send_symbols(link, &word, rng)?;
                erased.iter_mut().for_each(|e| *e = false);
                session.send(8 * n)?;
            }
        }
    }
    let crc_ok = session.accepted();
    let bits = Bits::from_bytes(&delivered[..RS_INFO_SYMBOLS - 4]);
    let per = model.bits_per_frame();
    let chunks: Vec<Bits> = (0..RS_BLOCK_FRAMES).map(|i| Bits(bits[i * per..(i + 1) * per].to_vec())).collect();
    let decoded = model.decode_many(&chunks, Stage::First)?;
    Ok(RsBlockOutcome { decoded, session, crc_ok })
}
