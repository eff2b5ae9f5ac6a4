#![allow(dead_code)]

use qoe_core::playback_sim::TraceSegment;
use qoe_core::{BandwidthTrace, PlayerConfig, VideoProfile};
use qoe_testkit::playback::Scenario;

pub fn to_core(sc: &Scenario) -> (BandwidthTrace, VideoProfile, PlayerConfig) {
    let trace = BandwidthTrace::new(
        sc.segments
            .iter()
            .map(|&(start, rate)| TraceSegment { start, rate })
            .collect(),
    )
    .unwrap();
    let video = VideoProfile::new(
        sc.media_size,
        sc.duration,
        sc.throttle_factor,
        sc.initial_burst,
    )
    .unwrap();
    let player = PlayerConfig::new(sc.startup, sc.resume, sc.capacity).unwrap();
    (trace, video, player)
}

/// Bytes the trace could have carried by time `t`.
pub fn trace_integral(sc: &Scenario, t: f64) -> f64 {
    let mut total = 0.0;
    for (i, &(start, rate)) in sc.segments.iter().enumerate() {
        if start >= t {
            break;
        }
        let end = sc.segments.get(i + 1).map_or(t, |s| s.0.min(t));
        total += rate * (end - start);
    }
    total
}
