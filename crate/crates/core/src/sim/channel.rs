//! Exclusive broadcast channel shared by all base stations.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// FIFO mutex over the broadcast channel. Pending requests are granted in
/// `(request time, bs id)` order; a grant never precedes the previous release.
#[derive(Debug, Clone)]
pub struct BroadcastChannel<F> {
    pending: Vec<(F, u32)>,
    holder: Option<(u32, F)>,
    free_at: F,
}

impl<F: Scalar> Default for BroadcastChannel<F> {
    fn default() -> Self {
        Self { pending: Vec::new(), holder: None, free_at: F::neg_infinity() }
    }
}

impl<F: Scalar> BroadcastChannel<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn request(&mut self, bs_id: u32, time_s: F) {
        self.pending.push((time_s, bs_id));
    }

    pub fn holder(&self) -> Option<u32> {
        self.holder.map(|h| h.0)
    }

    /// Grants the channel to the earliest pending request, if the channel
    /// is free. Returns the BS and its grant time.
    pub fn acquire_next(&mut self) -> Option<(u32, F)> {
        if self.holder.is_some() || self.pending.is_empty() {
            return None;
        }
        let mut best = 0;
        for (i, r) in self.pending.iter().enumerate() {
            let b = self.pending[best];
            if r.0 < b.0 || (r.0 == b.0 && r.1 < b.1) {
                best = i;
            }
        }
        let (t, bs) = self.pending.remove(best);
        let grant = t.max(self.free_at);
        self.holder = Some((bs, grant));
        Some((bs, grant))
    }

    pub fn release(&mut self, bs_id: u32, time_s: F) -> Result<()> {
        match self.holder {
            Some((h, granted)) if h == bs_id => {
                if time_s < granted {
                    return Err(Error::ProtocolViolation(format!(
                        "BS {bs_id} released at {time_s} before its grant at {granted}"
                    )));
                }
                self.holder = None;
                self.free_at = time_s;
                Ok(())
            }
            Some((h, _)) => Err(Error::ProtocolViolation(format!(
                "BS {bs_id} released the channel held by BS {h}"
            ))),
            None => Err(Error::ProtocolViolation(format!("BS {bs_id} released the channel before acquiring it"))),
        }
    }
}
