use std::io::Write;

use crate::error::Result;

/// Metrics of one delivered frame.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrialRecord {
    pub stream_id: String,
    pub frame: usize,
    pub scheme: String,
    /// BER for bit-level links, SNR in dB for OFDM links.
    pub ber_or_snr: f64,
    pub rounds: usize,
    /// Payload bits spent on this frame; RS blocks split their bits evenly
    /// over the frames they carry.
    pub bits_used: f64,
    pub akd: f64,
    /// Final detector output; NaN when no detector ran.
    pub detector_score: f64,
    pub accepted: bool,
}

/// Writes records as CSV with header
/// `stream_id,frame,scheme,ber_or_snr,rounds,bits_used,akd,detector_score,accepted`.
pub fn write_records<W: Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    if records.is_empty() {
        out.write_record(["stream_id", "frame", "scheme", "ber_or_snr", "rounds", "bits_used", "akd", "detector_score", "accepted"])?;
    }
    out.flush()?;
    Ok(())
}
