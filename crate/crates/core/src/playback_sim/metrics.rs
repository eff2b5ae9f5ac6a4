use serde::{Deserialize, Serialize};

use super::PlaybackTimeline;
use crate::num::{count, Real};

/// Application-level performance of one session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppQoSMetrics<T> {
    /// Initial buffering time, seconds.
    pub t_init: T,
    /// Stall events per second of reproduction time.
    pub f_rebuf: T,
    /// Mean stall duration, seconds.
    pub t_rebuf: T,
    pub n_pauses: usize,
}

impl<T: Real> AppQoSMetrics<T> {
    pub fn new(t_init: T, f_rebuf: T, t_rebuf: T, n_pauses: usize) -> Self {
        Self {
            t_init,
            f_rebuf,
            t_rebuf,
            n_pauses,
        }
    }

    pub fn is_valid(&self) -> bool {
        let z = T::zero();
        self.t_init >= z
            && self.f_rebuf >= z
            && self.t_rebuf >= z
            && (self.f_rebuf == z) == (self.n_pauses == 0)
            && (self.n_pauses > 0 || self.t_rebuf == z)
    }
}

/// Reduces a timeline to `(t_init, f_rebuf, t_rebuf, n_pauses)`.
///
/// The rebuffering frequency is taken over the wall-clock reproduction time,
/// stalls included.
pub fn extract_metrics<T: Real>(timeline: &PlaybackTimeline<T>) -> AppQoSMetrics<T> {
    let n = timeline.stall_events.len();
    let (f_rebuf, t_rebuf) = if n == 0 {
        (T::zero(), T::zero())
    } else {
        let total: T = timeline.stall_events.iter().map(|s| s.duration).sum();
        (
            count::<T>(n) / timeline.reproduction_time,
            total / count::<T>(n),
        )
    };
    AppQoSMetrics {
        t_init: timeline.t_init,
        f_rebuf,
        t_rebuf,
        n_pauses: n,
    }
}
