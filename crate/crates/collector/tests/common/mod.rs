#![allow(dead_code)]

use qoe_core::report_schema::{serialize, LocationProvider};
use qoe_core::{Location, SessionReport};

pub fn report(
    connection_type: i64,
    t_init_ms: i64,
    feedback: Option<i64>,
    estimated: f64,
) -> SessionReport {
    SessionReport {
        imei: "490154203237518".into(),
        reproduction_mode: 2,
        reproduction_time_ms: 95_000,
        date: "2012-06-01".into(),
        hour: "12:00:00".into(),
        initial_buffering_time_ms: t_init_ms,
        rebuffering_frequency: 0.0,
        mean_rebuffering_time_ms: 0,
        location: Location {
            latitude: 40.4,
            longitude: -3.7,
            altitude: 650.0,
            accuracy: 20.0,
            time: "2012-06-01_11:59:40".into(),
            provider: LocationProvider::Gps,
        },
        connection_type,
        lac: 12,
        cell_id: 3456,
        rssi_dbm: -85,
        video_quality_feedback: None,
        audio_quality_feedback: None,
        general_feedback: feedback,
        additional_comments: String::new(),
        estimated_video_quality: estimated,
    }
}

pub fn line(r: &SessionReport) -> String {
    serialize(r).unwrap()
}
