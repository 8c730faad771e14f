//! Retransmission protocols and the learned ACK.
//!
//! Three schemes share one session state machine: an RS(255,64)
//! incremental-redundancy baseline acknowledged by CRC-32, and two semantic
//! schemes that send 160 stage-1 bits, then 160 incremental bits when a
//! fluency detector rejects the decoded frame.

mod detector;
mod record;
mod rsharq;
mod session;
mod svc;

pub use detector::{auc, fluency_pairs, train_fluency, FluencyDetector, FluencyPair};
pub use record::{write_records, TrialRecord};
pub use rsharq::{run_rs_irharq, RsBlockOutcome, RsVariant, RS_BLOCK_FRAMES};
pub use session::{HarqSession, Scheme, SessionState, DEFAULT_MAX_ROUNDS};
pub use svc::{run_svc, run_svc_blind, run_svc_harq, AckPolicy, StreamOutcome, SvcLinks};
