//! Progressive-download session simulation.
//!
//! The server sends an initial burst at the full available bandwidth, then
//! paces the rest at `throttle_factor * encoding_rate`, holding back and
//! later flushing whatever the network could not carry. The client is a
//! fluid play-out buffer: it fills at the delivered rate and drains at the
//! encoding rate while playing. Between events every rate is constant, so
//! the simulation jumps from one event to the next with exact crossing
//! times instead of stepping a clock.

mod metrics;
mod server;
mod trace;

use serde::{Deserialize, Serialize};

pub use metrics::{extract_metrics, AppQoSMetrics};
pub use server::{server_send_rate, DeliveryPhase, ServerState};
pub use trace::{BandwidthTrace, TraceSegment, CSV_HEADER as TRACE_CSV_HEADER};

use crate::error::{Error, Result};
use crate::num::{lit, Real};

/// Event budget; a well-formed session needs a handful per stall.
const MAX_EVENTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VideoProfile<T> {
    /// Bytes.
    pub media_size: T,
    /// Seconds of media.
    pub duration: T,
    /// Bytes/second, `media_size / duration`.
    pub encoding_rate: T,
    /// Throttle pace as a multiple of the encoding rate.
    pub throttle_factor: T,
    /// Bytes sent at full bandwidth before throttling starts.
    pub initial_burst: T,
}

impl<T: Real> VideoProfile<T> {
    pub fn new(media_size: T, duration: T, throttle_factor: T, initial_burst: T) -> Result<Self> {
        let video = Self {
            media_size,
            duration,
            encoding_rate: media_size / duration,
            throttle_factor,
            initial_burst,
        };
        video.validate()?;
        Ok(video)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.media_size) {
            return Err(Error::param("media_size", "must be positive and finite"));
        }
        if !positive(self.duration) {
            return Err(Error::param("duration", "must be positive and finite"));
        }
        if !positive(self.encoding_rate) {
            return Err(Error::param("encoding_rate", "must be positive and finite"));
        }
        let mismatch = (self.encoding_rate * self.duration - self.media_size).abs();
        if mismatch > self.media_size * lit(1e-6) {
            return Err(Error::param(
                "encoding_rate",
                "must equal media_size / duration",
            ));
        }
        if !(self.throttle_factor >= T::one()) || !self.throttle_factor.is_finite() {
            return Err(Error::param("throttle_factor", "must be at least 1"));
        }
        if !(self.initial_burst >= T::zero() && self.initial_burst <= self.media_size) {
            return Err(Error::param(
                "initial_burst",
                "must lie between 0 and media_size",
            ));
        }
        Ok(())
    }

    pub fn throttle_rate(&self) -> T {
        self.throttle_factor * self.encoding_rate
    }

    /// Bytes covering `seconds` of playback.
    pub fn media_bytes(&self, seconds: T) -> T {
        seconds * self.encoding_rate
    }
}

/// Client play-out thresholds, in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerConfig<T> {
    pub startup_threshold: T,
    pub resume_threshold: T,
    /// `None` is an unbounded buffer.
    pub buffer_capacity: Option<T>,
}

impl<T: Real> PlayerConfig<T> {
    pub const DEFAULT_STARTUP_SECONDS: f64 = 5.0;

    pub fn new(
        startup_threshold: T,
        resume_threshold: T,
        buffer_capacity: Option<T>,
    ) -> Result<Self> {
        let cfg = Self {
            startup_threshold,
            resume_threshold,
            buffer_capacity,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same threshold before the first frame and after every stall.
    pub fn symmetric(threshold: T) -> Result<Self> {
        Self::new(threshold, threshold, None)
    }

    /// Five seconds of media, symmetric, unbounded.
    pub fn default_for(video: &VideoProfile<T>) -> Self {
        let th = video.media_bytes(lit(Self::DEFAULT_STARTUP_SECONDS));
        Self {
            startup_threshold: th,
            resume_threshold: th,
            buffer_capacity: None,
        }
    }

    pub fn capacity(&self) -> T {
        self.buffer_capacity.unwrap_or_else(T::infinity)
    }

    pub fn validate(&self) -> Result<()> {
        let cap = self.capacity();
        if !(cap > T::zero()) {
            return Err(Error::param("buffer_capacity", "must be positive"));
        }
        if !(self.startup_threshold > T::zero() && self.startup_threshold <= cap) {
            return Err(Error::param(
                "startup_threshold",
                "must be positive and within buffer_capacity",
            ));
        }
        if !(self.resume_threshold > T::zero() && self.resume_threshold <= cap) {
            return Err(Error::param(
                "resume_threshold",
                "must be positive and within buffer_capacity",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlayerState {
    Startup,
    Playing,
    Stalled,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StallEvent<T> {
    pub start: T,
    pub duration: T,
}

impl<T: Real> StallEvent<T> {
    pub fn end(&self) -> T {
        self.start + self.duration
    }
}

/// Snapshot taken at every simulation event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BufferSample<T> {
    pub time: T,
    pub downloaded: T,
    pub played: T,
    pub buffered: T,
    pub backlog: T,
    pub state: PlayerState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackTimeline<T> {
    pub t_init: T,
    pub stall_events: Vec<StallEvent<T>>,
    /// From request to the last frame, stalls included.
    pub reproduction_time: T,
    pub download_complete_time: T,
    pub buffer_trajectory: Vec<BufferSample<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    TraceChange,
    BurstEnd,
    DownloadDone,
    BacklogCleared,
    ScheduleExhausted,
    Threshold,
    BufferEmpty,
    BufferFull,
    PlaybackEnd,
}

struct Sim<'a, T> {
    trace: &'a BandwidthTrace<T>,
    video: &'a VideoProfile<T>,
    player: &'a PlayerConfig<T>,
    t: T,
    server: ServerState<T>,
    played: T,
    buffered: T,
    state: PlayerState,
    t_init: Option<T>,
    stall_start: Option<T>,
    download_done: Option<T>,
    stalls: Vec<StallEvent<T>>,
    samples: Vec<BufferSample<T>>,
}

/// Rates in force until the next event.
struct Rates<T> {
    delivered: T,
    drain: T,
    backlog: T,
}

impl<'a, T: Real> Sim<'a, T> {
    fn sample(&mut self) {
        self.samples.push(BufferSample {
            time: self.t,
            downloaded: self.server.bytes_sent,
            played: self.played,
            buffered: self.buffered,
            backlog: self.server.backlog,
            state: self.state,
        });
    }

    fn throttling(&self) -> bool {
        self.server.phase(self.video) == DeliveryPhase::Throttle
    }

    fn schedule_open(&self) -> bool {
        self.server.bytes_sent + self.server.backlog < self.video.media_size
    }

    fn rates(&self) -> Rates<T> {
        let drain = if self.state == PlayerState::Playing {
            self.video.encoding_rate
        } else {
            T::zero()
        };
        let mut delivered = if self.server.bytes_sent >= self.video.media_size {
            T::zero()
        } else {
            server_send_rate(self.t, &self.server, self.trace, self.video)
        };
        // Flow control: a full buffer only accepts what playback consumes.
        if self.buffered >= self.player.capacity() && delivered > drain {
            delivered = drain;
        }
        let backlog = if !self.throttling() {
            T::zero()
        } else if self.schedule_open() {
            self.video.throttle_rate() - delivered
        } else {
            -delivered
        };
        Rates {
            delivered,
            drain,
            backlog,
        }
    }

    fn threshold(&self) -> Option<T> {
        match self.state {
            PlayerState::Startup => Some(self.player.startup_threshold),
            PlayerState::Stalled => Some(self.player.resume_threshold),
            _ => None,
        }
    }

    fn candidates(&self, r: &Rates<T>) -> Vec<(Event, T)> {
        let z = T::zero();
        let media = self.video.media_size;
        let sent = self.server.bytes_sent;
        let fill = r.delivered - r.drain;
        let mut out = Vec::with_capacity(8);

        if let Some(next) = self.trace.next_change_after(self.t) {
            out.push((Event::TraceChange, next - self.t));
        }
        if r.delivered > z {
            if !self.throttling() {
                out.push((
                    Event::BurstEnd,
                    (self.video.initial_burst - sent) / r.delivered,
                ));
            }
            out.push((Event::DownloadDone, (media - sent) / r.delivered));
        }
        if self.throttling() {
            if self.server.backlog > z && r.backlog < z {
                out.push((Event::BacklogCleared, self.server.backlog / -r.backlog));
            }
            let schedule_rate = r.delivered + r.backlog;
            if self.schedule_open() && schedule_rate > z {
                let left = media - sent - self.server.backlog;
                out.push((Event::ScheduleExhausted, left / schedule_rate));
            }
        }
        if let Some(th) = self.threshold() {
            if fill > z {
                out.push((Event::Threshold, (th - self.buffered) / fill));
            }
        }
        if self.state == PlayerState::Playing {
            if fill < z {
                out.push((Event::BufferEmpty, self.buffered / -fill));
            }
            out.push((Event::PlaybackEnd, (media - self.played) / r.drain));
        }
        if let Some(cap) = self.player.buffer_capacity {
            if fill > z && self.buffered < cap {
                out.push((Event::BufferFull, (cap - self.buffered) / fill));
            }
        }
        for c in &mut out {
            c.1 = c.1.max(z);
        }
        out
    }

    fn advance(&mut self, r: &Rates<T>, dt: T, hits: &[Event]) {
        self.t += dt;
        self.server.bytes_sent += r.delivered * dt;
        self.played += r.drain * dt;
        self.buffered += (r.delivered - r.drain) * dt;
        self.server.backlog += r.backlog * dt;

        // Snap quantities that reached their targets so rounding cannot
        // leave a residue that re-triggers the same event.
        let media = self.video.media_size;
        for hit in hits {
            match hit {
                Event::TraceChange => {
                    if let Some(next) = self.trace.next_change_after(self.t - dt) {
                        self.t = next;
                    }
                }
                Event::BurstEnd => self.server.bytes_sent = self.video.initial_burst,
                Event::DownloadDone => self.server.bytes_sent = media,
                Event::BacklogCleared => self.server.backlog = T::zero(),
                Event::ScheduleExhausted => {
                    self.server.backlog = media - self.server.bytes_sent;
                }
                Event::Threshold => {
                    if let Some(th) = self.threshold() {
                        self.buffered = th;
                    }
                }
                Event::BufferEmpty => self.buffered = T::zero(),
                Event::BufferFull => self.buffered = self.player.capacity(),
                Event::PlaybackEnd => self.played = media,
            }
        }
        self.server.bytes_sent = self.server.bytes_sent.min(media);
        self.played = self.played.min(self.server.bytes_sent);
        self.buffered = self.buffered.max(T::zero());
        self.server.backlog = self.server.backlog.max(T::zero());
    }

    /// State changes that happen at the current instant.
    fn transitions(&mut self) {
        let media = self.video.media_size;
        let complete = self.server.bytes_sent >= media;
        if complete && self.download_done.is_none() {
            self.download_done = Some(self.t);
        }
        match self.state {
            PlayerState::Startup if complete || self.buffered >= self.player.startup_threshold => {
                self.t_init = Some(self.t);
                self.state = PlayerState::Playing;
            }
            PlayerState::Stalled if complete || self.buffered >= self.player.resume_threshold => {
                let start = self.stall_start.take().expect("stall has a start");
                self.stalls.push(StallEvent {
                    start,
                    duration: self.t - start,
                });
                self.state = PlayerState::Playing;
            }
            _ => {}
        }
        if self.state == PlayerState::Playing && self.played >= media {
            self.state = PlayerState::Finished;
        }
    }

    fn run(mut self) -> Result<PlaybackTimeline<T>> {
        self.sample();
        let tol = T::epsilon().sqrt() * lit(1e-2);
        for _ in 0..MAX_EVENTS {
            if self.state == PlayerState::Finished {
                return Ok(PlaybackTimeline {
                    t_init: self.t_init.expect("playback started"),
                    stall_events: self.stalls,
                    reproduction_time: self.t,
                    download_complete_time: self.download_done.expect("download completed"),
                    buffer_trajectory: self.samples,
                });
            }

            let mut r = self.rates();
            if self.state == PlayerState::Playing
                && self.buffered <= T::zero()
                && r.delivered < r.drain
            {
                self.state = PlayerState::Stalled;
                self.stall_start = Some(self.t);
                self.sample();
                r = self.rates();
            }

            let cands = self.candidates(&r);
            let Some(dt) = cands.iter().map(|c| c.1).reduce(T::min) else {
                return Err(Error::UnfinishableSession(format!(
                    "no bandwidth left at t = {} s with {} of {} bytes delivered",
                    self.t, self.server.bytes_sent, self.video.media_size
                )));
            };
            let slack = tol * (self.t + dt).max(T::one());
            let hits: Vec<Event> = cands
                .iter()
                .filter(|c| c.1 <= dt + slack)
                .map(|c| c.0)
                .collect();
            self.advance(&r, dt, &hits);
            self.transitions();
            self.sample();
        }
        Err(Error::UnfinishableSession(format!(
            "event budget of {MAX_EVENTS} exhausted"
        )))
    }
}

/// Runs one session to the last played byte.
pub fn simulate_session<T: Real>(
    trace: &BandwidthTrace<T>,
    video: &VideoProfile<T>,
    player: &PlayerConfig<T>,
) -> Result<PlaybackTimeline<T>> {
    video.validate()?;
    player.validate()?;
    Sim {
        trace,
        video,
        player,
        t: T::zero(),
        server: ServerState::default(),
        played: T::zero(),
        buffered: T::zero(),
        state: PlayerState::Startup,
        t_init: None,
        stall_start: None,
        download_done: None,
        stalls: Vec::new(),
        samples: Vec::new(),
    }
    .run()
}

/// Metrics for a constant average throughput.
///
/// Real throughput fluctuates, so buffer behaviour driven by the average
/// tends to be slightly optimistic.
pub fn estimate_metrics_from_averages<T: Real>(
    avg_throughput: T,
    video: &VideoProfile<T>,
    player: &PlayerConfig<T>,
) -> Result<AppQoSMetrics<T>> {
    if !(avg_throughput > T::zero()) || !avg_throughput.is_finite() {
        return Err(Error::param(
            "avg_throughput",
            "must be positive and finite",
        ));
    }
    let trace = BandwidthTrace::constant(avg_throughput)?;
    Ok(extract_metrics(&simulate_session(&trace, video, player)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(burst: f64) -> VideoProfile<f64> {
        VideoProfile::new(1e7, 160.0, 1.25, burst).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn startup_inside_burst_without_stalls() {
        let trace = BandwidthTrace::constant(125_000.0).unwrap();
        let tl = simulate_session(
            &trace,
            &video(1e6),
            &PlayerConfig::symmetric(320_000.0).unwrap(),
        )
        .unwrap();
        assert!(close(tl.t_init, 2.56), "{}", tl.t_init);
        assert!(tl.stall_events.is_empty());
        // Burst ends at 8 s, the remaining 9e6 bytes go out at 78125 B/s.
        assert!(close(tl.download_complete_time, 8.0 + 9e6 / 78_125.0));
        assert!(close(tl.reproduction_time, 162.56));
    }

    #[test]
    fn half_rate_supply_stalls_periodically() {
        let trace = BandwidthTrace::constant(31_250.0).unwrap();
        let tl = simulate_session(
            &trace,
            &video(1e6),
            &PlayerConfig::symmetric(125_000.0).unwrap(),
        )
        .unwrap();
        assert!(close(tl.t_init, 4.0));
        assert!(close(tl.download_complete_time, 320.0));
        assert!(close(tl.reproduction_time, 320.0));
        assert_eq!(tl.stall_events.len(), 39);
        for (k, s) in tl.stall_events.iter().enumerate() {
            assert!(close(s.start, 8.0 * (k + 1) as f64), "{k}: {s:?}");
            assert!(close(s.duration, 4.0), "{k}: {s:?}");
        }
    }

    #[test]
    fn supply_equal_to_demand_never_stalls() {
        let v = video(1e6);
        let m = estimate_metrics_from_averages(v.encoding_rate, &v, &PlayerConfig::default_for(&v))
            .unwrap();
        assert_eq!(m.n_pauses, 0);
        assert!(close(m.t_init, 5.0));
    }

    #[test]
    fn zero_bandwidth_tail_is_unfinishable() {
        let trace = BandwidthTrace::new(vec![
            TraceSegment {
                start: 0.0,
                rate: 1e5,
            },
            TraceSegment {
                start: 10.0,
                rate: 0.0,
            },
        ])
        .unwrap();
        let err = simulate_session(&trace, &video(1e6), &PlayerConfig::symmetric(1e5).unwrap());
        assert!(matches!(err, Err(Error::UnfinishableSession(_))));
        let zero = BandwidthTrace::constant(0.0).unwrap();
        assert!(
            simulate_session(&zero, &video(1e6), &PlayerConfig::symmetric(1e5).unwrap()).is_err()
        );
    }

    #[test]
    fn outage_then_recovery_flushes_backlog() {
        // 20 s outage after the burst; backlog then drains at 1e6 B/s.
        let trace = BandwidthTrace::new(vec![
            TraceSegment {
                start: 0.0,
                rate: 1e6,
            },
            TraceSegment {
                start: 2.0,
                rate: 0.0,
            },
            TraceSegment {
                start: 22.0,
                rate: 1e6,
            },
        ])
        .unwrap();
        let v = video(1e6);
        let tl =
            simulate_session(&trace, &v, &PlayerConfig::symmetric(312_500.0).unwrap()).unwrap();
        assert!(close(tl.t_init, 0.3125));
        // 972656.25 bytes buffered at 2 s run dry at 17.5625 s; the flushed
        // backlog refills the resume threshold 0.3125 s after the outage.
        assert_eq!(tl.stall_events.len(), 1);
        assert!(close(tl.stall_events[0].start, 17.5625));
        assert!(close(tl.stall_events[0].duration, 4.75));
        let at_22 = tl
            .buffer_trajectory
            .iter()
            .find(|s| close(s.time, 22.0))
            .unwrap();
        assert!(close(at_22.backlog, 20.0 * 78_125.0));
        let cleared = tl
            .buffer_trajectory
            .iter()
            .find(|s| s.time > 22.0 && s.backlog == 0.0)
            .unwrap();
        // Backlog shrinks at 1e6 - 78125 B/s.
        assert!(close(cleared.time, 22.0 + 1_562_500.0 / 921_875.0));
    }

    #[test]
    fn bounded_buffer_holds_delivery_at_capacity() {
        let trace = BandwidthTrace::constant(1e6).unwrap();
        let v = video(1e7);
        let player = PlayerConfig::new(125_000.0, 125_000.0, Some(500_000.0)).unwrap();
        let tl = simulate_session(&trace, &v, &player).unwrap();
        assert!(tl.stall_events.is_empty());
        assert!(tl
            .buffer_trajectory
            .iter()
            .all(|s| s.buffered <= 500_000.0 * (1.0 + 1e-12)));
        // Full at 0.125 + 375000 / 937500 s, then delivery equals playback.
        let full_at = 0.125 + 375_000.0 / 937_500.0;
        assert!(close(
            tl.download_complete_time,
            full_at + (1e7 - 500_000.0 - 62_500.0 * 0.4) / 62_500.0
        ));
    }

    #[test]
    fn startup_threshold_beyond_media_waits_for_download() {
        let trace = BandwidthTrace::constant(1e6).unwrap();
        let v = VideoProfile::new(1e5, 10.0, 1.25, 1e5).unwrap();
        let tl = simulate_session(&trace, &v, &PlayerConfig::symmetric(5e5).unwrap()).unwrap();
        assert!(close(tl.t_init, 0.1));
        assert!(close(tl.reproduction_time, 10.1));
    }

    #[test]
    fn rejects_invalid_profiles() {
        assert!(VideoProfile::new(0.0, 1.0, 1.25, 0.0).is_err());
        assert!(VideoProfile::new(1.0, 1.0, 0.5, 0.0).is_err());
        assert!(VideoProfile::new(1.0, 1.0, 1.25, 2.0).is_err());
        let mut v = video(0.0);
        v.encoding_rate *= 2.0;
        assert!(v.validate().is_err());
        assert!(PlayerConfig::new(0.0, 1.0, None).is_err());
        assert!(PlayerConfig::new(10.0, 1.0, Some(5.0)).is_err());
        assert!(estimate_metrics_from_averages(
            0.0,
            &video(0.0),
            &PlayerConfig::symmetric(1.0).unwrap()
        )
        .is_err());
    }

    #[test]
    fn single_precision_half_rate_scenario() {
        let v = VideoProfile::<f32>::new(1e7, 160.0, 1.25, 1e6).unwrap();
        let tl = simulate_session(
            &BandwidthTrace::constant(31_250.0_f32).unwrap(),
            &v,
            &PlayerConfig::symmetric(125_000.0).unwrap(),
        )
        .unwrap();
        assert_eq!(tl.stall_events.len(), 39);
        assert!((tl.t_init - 4.0).abs() < 1e-3);
    }
}
