//! Steady-state TCP throughput from network-level QoS.
//!
//! Uses the loss/RTT/timeout throughput approximation for a bulk TCP Reno
//! flow, capped by the receive window and by the physical link rate:
//!
//! ```text
//! rate_pkts = 1 / (rtt * sqrt(2bp/3) + T0 * min(1, 3 sqrt(3bp/8)) * p * (1 + 32 p^2))
//! throughput = min(link_bandwidth, max_window / rtt, rate_pkts * mss)
//! ```
//!
//! At `p = 0` the loss term vanishes and the window/link caps apply.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{lit, Real};

/// Network conditions, assumed constant over the download.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkQoS<T> {
    /// Bytes per second.
    pub link_bandwidth: T,
    /// Seconds.
    pub rtt: T,
    /// Packet loss probability in `[0, 1)`.
    pub loss_rate: T,
}

impl<T: Real> NetworkQoS<T> {
    pub fn new(link_bandwidth: T, rtt: T, loss_rate: T) -> Result<Self> {
        let qos = Self {
            link_bandwidth,
            rtt,
            loss_rate,
        };
        qos.validate()?;
        Ok(qos)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.link_bandwidth > T::zero()) || !self.link_bandwidth.is_finite() {
            return Err(Error::param(
                "link_bandwidth",
                "must be positive and finite",
            ));
        }
        if !(self.rtt > T::zero()) || !self.rtt.is_finite() {
            return Err(Error::param("rtt", "must be positive and finite"));
        }
        if !(self.loss_rate >= T::zero() && self.loss_rate < T::one()) {
            return Err(Error::param("loss_rate", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Sender-side TCP parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcpParams<T> {
    /// Maximum segment size, bytes.
    pub mss: T,
    /// Receive window limit, bytes.
    pub max_window: T,
    /// Segments acknowledged per ACK (delayed ACK factor).
    pub acked_per_ack: T,
    /// Retransmission timeout, seconds.
    pub rto: T,
}

impl<T: Real> TcpParams<T> {
    pub const DEFAULT_MSS: f64 = 1460.0;
    pub const DEFAULT_MAX_WINDOW: f64 = 65535.0;
    pub const DEFAULT_ACKED_PER_ACK: f64 = 2.0;

    /// Conventional defaults; the timeout is `max(1 s, 4 * rtt)`.
    pub fn defaults_for_rtt(rtt: T) -> Self {
        Self {
            mss: lit(Self::DEFAULT_MSS),
            max_window: lit(Self::DEFAULT_MAX_WINDOW),
            acked_per_ack: lit(Self::DEFAULT_ACKED_PER_ACK),
            rto: default_rto(rtt),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mss", self.mss),
            ("max_window", self.max_window),
            ("acked_per_ack", self.acked_per_ack),
            ("rto", self.rto),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::param(name, "must be positive and finite"));
            }
        }
        if self.max_window < self.mss {
            return Err(Error::param("max_window", "must be at least one mss"));
        }
        Ok(())
    }
}

pub fn default_rto<T: Real>(rtt: T) -> T {
    T::one().max(lit::<T>(4.0) * rtt)
}

/// Average throughput (bytes/second) of a long-lived TCP flow.
pub fn steady_state_throughput<T: Real>(qos: &NetworkQoS<T>, tcp: &TcpParams<T>) -> Result<T> {
    qos.validate()?;
    tcp.validate()?;

    let window_cap = tcp.max_window / qos.rtt;
    let cap = qos.link_bandwidth.min(window_cap);
    let p = qos.loss_rate;
    if p == T::zero() {
        return Ok(cap);
    }

    let b = tcp.acked_per_ack;
    let three = lit::<T>(3.0);
    let rtt_term = qos.rtt * (lit::<T>(2.0) * b * p / three).sqrt();
    let timeout_prob = T::one().min(three * (three * b * p / lit(8.0)).sqrt());
    let timeout_term = tcp.rto * timeout_prob * p * (T::one() + lit::<T>(32.0) * p * p);
    let loss_limited = tcp.mss / (rtt_term + timeout_term);

    Ok(cap.min(loss_limited))
}
