use serde::{Deserialize, Serialize};

use super::{BandwidthTrace, VideoProfile};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryPhase {
    Burst,
    Throttle,
}

/// Media server progress for one session.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ServerState<T> {
    pub bytes_sent: T,
    /// Bytes the throttle schedule has released but the network has not yet
    /// carried.
    pub backlog: T,
}

impl<T: Real> ServerState<T> {
    pub fn phase(&self, video: &VideoProfile<T>) -> DeliveryPhase {
        if self.bytes_sent < video.initial_burst {
            DeliveryPhase::Burst
        } else {
            DeliveryPhase::Throttle
        }
    }
}

/// Rate the server pushes data at time `t`.
///
/// The burst goes out at the full available bandwidth. Afterwards data is
/// paced at `throttle_factor * encoding_rate`; whatever the network could
/// not carry at that pace is held as backlog and flushed at full bandwidth.
pub fn server_send_rate<T: Real>(
    t: T,
    state: &ServerState<T>,
    trace: &BandwidthTrace<T>,
    video: &VideoProfile<T>,
) -> T {
    let available = trace.rate_at(t);
    match state.phase(video) {
        DeliveryPhase::Burst => available,
        DeliveryPhase::Throttle if state.backlog > T::zero() => available,
        DeliveryPhase::Throttle => available.min(video.throttle_rate()),
    }
}
