use crate::error::{Error, Result};

pub const DEFAULT_MAX_ROUNDS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Stage-1 only, no feedback.
    Svc,
    SvcHarq,
    /// Stage-1 on CSI-sorted subchannels, incremental stage unsorted.
    SvcCsi,
    SvcCsiHarq,
    RsIrharq,
    /// RS(255,64) punctured to its first 127 symbols, one shot.
    Rs127,
    /// Full RS(255,64) codeword, one shot.
    Rs255,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [Scheme::Svc, Scheme::SvcHarq, Scheme::SvcCsi, Scheme::SvcCsiHarq, Scheme::RsIrharq, Scheme::Rs127, Scheme::Rs255];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Svc => "svc",
            Scheme::SvcHarq => "svc_harq",
            Scheme::SvcCsi => "svc_csi",
            Scheme::SvcCsiHarq => "svc_csi_harq",
            Scheme::RsIrharq => "rs_irharq",
            Scheme::Rs127 => "rs127",
            Scheme::Rs255 => "rs255",
        }
    }

    pub fn from_name(s: &str) -> Option<Scheme> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionState {
    Idle,
    AwaitAck,
    /// NACK after the first round: next send is incremental redundancy.
    Incremental,
    /// NACK after a later round: next send is a retransmission.
    Retransmit,
    Done,
}

/// Per-frame (or per-block) transmission bookkeeping.
///
/// `Idle → AwaitAck → {Done | Incremental → AwaitAck → {Done | Retransmit → AwaitAck → …}}`
#[derive(Clone, Debug, PartialEq)]
pub struct HarqSession {
    pub scheme: Scheme,
    state: SessionState,
    tx_count: usize,
    bits_used: usize,
    max_rounds: usize,
    ack_history: Vec<bool>,
    sends: Vec<usize>,
}

impl HarqSession {
    pub fn new(scheme: Scheme, max_rounds: usize) -> Result<Self> {
        if max_rounds == 0 {
            return Err(Error::Argument("max_rounds must be at least 1".into()));
        }
        Ok(HarqSession { scheme, state: SessionState::Idle, tx_count: 0, bits_used: 0, max_rounds, ack_history: Vec::new(), sends: Vec::new() })
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn tx_count(&self) -> usize {
        self.tx_count
    }

    pub fn bits_used(&self) -> usize {
        self.bits_used
    }

    pub fn max_rounds(&self) -> usize {
        self.max_rounds
    }

    pub fn ack_history(&self) -> &[bool] {
        &self.ack_history
    }

    /// Payload bits of each round, in order.
    pub fn sends(&self) -> &[usize] {
        &self.sends
    }

    fn bad(&self, what: &str) -> Error {
        Error::State(format!("{what} in state {:?}", self.state))
    }

    /// Records a transmission of `bits` payload bits. Allowed from `Idle`
    /// (first round), `Incremental` and `Retransmit`.
    pub fn send(&mut self, bits: usize) -> Result<()> {
        match self.state {
            SessionState::Idle | SessionState::Incremental | SessionState::Retransmit => {
                self.tx_count += 1;
                self.bits_used += bits;
                self.sends.push(bits);
                self.state = SessionState::AwaitAck;
                Ok(())
            }
            _ => Err(self.bad("send")),
        }
    }

    /// Processes the receiver's verdict on the latest round.
    pub fn feedback(&mut self, ack: bool) -> Result<SessionState> {
        if self.state != SessionState::AwaitAck {
            return Err(self.bad("feedback"));
        }
        self.ack_history.push(ack);
        self.state = if ack || self.tx_count >= self.max_rounds {
            SessionState::Done
        } else if self.tx_count == 1 {
            SessionState::Incremental
        } else {
            SessionState::Retransmit
        };
        Ok(self.state)
    }

    pub fn is_done(&self) -> bool {
        self.state == SessionState::Done
    }

    /// Final verdict: the last ACK, `false` before any feedback.
    pub fn accepted(&self) -> bool {
        self.ack_history.last().copied().unwrap_or(false)
    }
}
