use super::ChannelRealization;
use crate::error::{arg, Result};

/// Subchannel ranking fed back by the receiver: `order[r]` is the physical
/// subchannel with the `r`-th largest `|h|²`. The transmitter never sees
/// the gains themselves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsiPermutation {
    order: Vec<usize>,
}

/// Sorts subchannels by descending `|h_l|²`; ties keep the lower index first.
pub fn sort_csi(ch: &ChannelRealization) -> CsiPermutation {
    let mut order: Vec<usize> = (0..ch.subchannels()).collect();
    order.sort_by(|&a, &b| ch.gain_power(b).partial_cmp(&ch.gain_power(a)).unwrap_or(std::cmp::Ordering::Equal));
    CsiPermutation { order }
}

impl CsiPermutation {
    pub fn identity(len: usize) -> Self {
        CsiPermutation { order: (0..len).collect() }
    }

    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &o in &order {
            if o >= order.len() || std::mem::replace(&mut seen[o], true) {
                return arg("not a permutation");
            }
        }
        Ok(CsiPermutation { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Physical subchannel carrying logical slot `rank`.
    pub fn physical(&self, rank: usize) -> usize {
        self.order[rank]
    }

    /// Places the `r`-th element on the `r`-th best subchannel:
    /// `out[order[r]] = x[r]`.
    pub fn apply<T: Clone>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.order.len() {
            return arg(format!("length {} does not match {} subchannels", x.len(), self.order.len()));
        }
        let mut out = x.to_vec();
        for (r, &p) in self.order.iter().enumerate() {
            out[p] = x[r].clone();
        }
        Ok(out)
    }

    pub fn invert<T: Clone>(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.order.len() {
            return arg(format!("length {} does not match {} subchannels", y.len(), self.order.len()));
        }
        Ok(self.order.iter().map(|&p| y[p].clone()).collect())
    }
}
