//! Session reports sent from a terminal to the collector.
//!
//! On the wire a report is a single JSON object per line whose keys are the
//! reported parameter names (`IMEI`, `ReproductionMode`, ...). Location
//! fields are flat on the wire and grouped into [`Location`] in memory.

use std::fmt;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationProvider {
    Gps,
    Network,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    /// Degrees, open interval (-90, 90).
    pub latitude: f64,
    /// Degrees, open interval (-180, 180).
    pub longitude: f64,
    /// Meters above sea level.
    pub altitude: f64,
    /// Meters.
    pub accuracy: f64,
    /// `YYYY-MM-DD_HH:MM:SS`.
    pub time: String,
    pub provider: LocationProvider,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechnologyGroup {
    Wifi,
    UmtsFamily,
    Other,
}

impl TechnologyGroup {
    pub const ALL: [TechnologyGroup; 3] = [
        TechnologyGroup::Wifi,
        TechnologyGroup::UmtsFamily,
        TechnologyGroup::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TechnologyGroup::Wifi => "wifi",
            TechnologyGroup::UmtsFamily => "umts_family",
            TechnologyGroup::Other => "other",
        }
    }
}

impl fmt::Display for TechnologyGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Active data connection codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConnectionType {
    Wifi = 0,
    Gprs = 1,
    Edge = 2,
    Umts = 3,
    Cdma = 4,
    Evdo0 = 5,
    EvdoA = 6,
    OneXRtt = 7,
    Hsdpa = 8,
    Hsupa = 9,
    Hspa = 10,
    Iden = 11,
    EvdoB = 12,
    Lte = 13,
    Ehrpd = 14,
    Hspap = 15,
}

impl ConnectionType {
    pub const ALL: [ConnectionType; 16] = [
        ConnectionType::Wifi,
        ConnectionType::Gprs,
        ConnectionType::Edge,
        ConnectionType::Umts,
        ConnectionType::Cdma,
        ConnectionType::Evdo0,
        ConnectionType::EvdoA,
        ConnectionType::OneXRtt,
        ConnectionType::Hsdpa,
        ConnectionType::Hsupa,
        ConnectionType::Hspa,
        ConnectionType::Iden,
        ConnectionType::EvdoB,
        ConnectionType::Lte,
        ConnectionType::Ehrpd,
        ConnectionType::Hspap,
    ];

    pub fn from_code(code: i64) -> Option<Self> {
        usize::try_from(code)
            .ok()
            .and_then(|i| Self::ALL.get(i).copied())
    }

    pub fn code(self) -> i64 {
        self as i64
    }

    /// Label as it appears in terminal reports (`CMDA` spelling included).
    pub fn label(self) -> &'static str {
        match self {
            ConnectionType::Wifi => "WIFI",
            ConnectionType::Gprs => "GPRS",
            ConnectionType::Edge => "EDGE",
            ConnectionType::Umts => "UMTS",
            ConnectionType::Cdma => "CMDA",
            ConnectionType::Evdo0 => "EVDO_0",
            ConnectionType::EvdoA => "EVDO_A",
            ConnectionType::OneXRtt => "1XRTT",
            ConnectionType::Hsdpa => "HSDPA",
            ConnectionType::Hsupa => "HSUPA",
            ConnectionType::Hspa => "HSPA",
            ConnectionType::Iden => "IDEN",
            ConnectionType::EvdoB => "EVDO_B",
            ConnectionType::Lte => "LTE",
            ConnectionType::Ehrpd => "EHRPD",
            ConnectionType::Hspap => "HSPAP",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == label)
    }

    /// WiFi, the UMTS/HSPA family, or anything else.
    pub fn technology_group(self) -> TechnologyGroup {
        match self {
            ConnectionType::Wifi => TechnologyGroup::Wifi,
            ConnectionType::Umts
            | ConnectionType::Hsdpa
            | ConnectionType::Hsupa
            | ConnectionType::Hspa => TechnologyGroup::UmtsFamily,
            _ => TechnologyGroup::Other,
        }
    }
}

impl fmt::Display for ConnectionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One monitored video session.
///
/// Integer fields are signed so out-of-range values survive parsing and
/// show up as validation violations instead of decode failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WireReport", into = "WireReport")]
pub struct SessionReport {
    pub imei: String,
    /// 1 embedded player, 2 native app, 3 web browser.
    pub reproduction_mode: i64,
    pub reproduction_time_ms: i64,
    /// `YYYY-MM-DD`.
    pub date: String,
    /// `HH:MM:SS`.
    pub hour: String,
    pub initial_buffering_time_ms: i64,
    /// Events per second.
    pub rebuffering_frequency: f64,
    pub mean_rebuffering_time_ms: i64,
    pub location: Location,
    pub connection_type: i64,
    pub lac: i64,
    pub cell_id: i64,
    pub rssi_dbm: i64,
    pub video_quality_feedback: Option<i64>,
    pub audio_quality_feedback: Option<i64>,
    pub general_feedback: Option<i64>,
    pub additional_comments: String,
    pub estimated_video_quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireReport {
    #[serde(rename = "IMEI")]
    imei: String,
    #[serde(rename = "ReproductionMode")]
    reproduction_mode: i64,
    #[serde(rename = "ReproductionTime")]
    reproduction_time: i64,
    #[serde(rename = "Date")]
    date: String,
    #[serde(rename = "Hour")]
    hour: String,
    #[serde(rename = "InitialBufferingTime")]
    initial_buffering_time: i64,
    #[serde(rename = "RebufferingFrequency")]
    rebuffering_frequency: f64,
    #[serde(rename = "MeanRebufferingTime")]
    mean_rebuffering_time: i64,
    #[serde(rename = "Latitude")]
    latitude: f64,
    #[serde(rename = "Longitude")]
    longitude: f64,
    #[serde(rename = "Altitude")]
    altitude: f64,
    #[serde(rename = "Accuracy")]
    accuracy: f64,
    #[serde(rename = "Time")]
    time: String,
    #[serde(rename = "Provider")]
    provider: LocationProvider,
    #[serde(rename = "ConnectionType")]
    connection_type: i64,
    #[serde(rename = "LAC")]
    lac: i64,
    #[serde(rename = "CellID")]
    cell_id: i64,
    #[serde(rename = "RSSI")]
    rssi: i64,
    #[serde(
        rename = "VideoQualityFeedback",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    video_quality_feedback: Option<i64>,
    #[serde(
        rename = "AudioQualityFeedback",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    audio_quality_feedback: Option<i64>,
    #[serde(
        rename = "GeneralFeedback",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    general_feedback: Option<i64>,
    #[serde(rename = "AdditionalComments", default)]
    additional_comments: String,
    #[serde(rename = "EstimatedVideoQuality")]
    estimated_video_quality: f64,
}

impl From<WireReport> for SessionReport {
    fn from(w: WireReport) -> Self {
        SessionReport {
            imei: w.imei,
            reproduction_mode: w.reproduction_mode,
            reproduction_time_ms: w.reproduction_time,
            date: w.date,
            hour: w.hour,
            initial_buffering_time_ms: w.initial_buffering_time,
            rebuffering_frequency: w.rebuffering_frequency,
            mean_rebuffering_time_ms: w.mean_rebuffering_time,
            location: Location {
                latitude: w.latitude,
                longitude: w.longitude,
                altitude: w.altitude,
                accuracy: w.accuracy,
                time: w.time,
                provider: w.provider,
            },
            connection_type: w.connection_type,
            lac: w.lac,
            cell_id: w.cell_id,
            rssi_dbm: w.rssi,
            video_quality_feedback: w.video_quality_feedback,
            audio_quality_feedback: w.audio_quality_feedback,
            general_feedback: w.general_feedback,
            additional_comments: w.additional_comments,
            estimated_video_quality: w.estimated_video_quality,
        }
    }
}

impl From<SessionReport> for WireReport {
    fn from(r: SessionReport) -> Self {
        WireReport {
            imei: r.imei,
            reproduction_mode: r.reproduction_mode,
            reproduction_time: r.reproduction_time_ms,
            date: r.date,
            hour: r.hour,
            initial_buffering_time: r.initial_buffering_time_ms,
            rebuffering_frequency: r.rebuffering_frequency,
            mean_rebuffering_time: r.mean_rebuffering_time_ms,
            latitude: r.location.latitude,
            longitude: r.location.longitude,
            altitude: r.location.altitude,
            accuracy: r.location.accuracy,
            time: r.location.time,
            provider: r.location.provider,
            connection_type: r.connection_type,
            lac: r.lac,
            cell_id: r.cell_id,
            rssi: r.rssi_dbm,
            video_quality_feedback: r.video_quality_feedback,
            audio_quality_feedback: r.audio_quality_feedback,
            general_feedback: r.general_feedback,
            additional_comments: r.additional_comments,
            estimated_video_quality: r.estimated_video_quality,
        }
    }
}

/// One failed constraint, keyed by wire field name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_owned(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn check_open_range(out: &mut Vec<Violation>, field: &str, v: f64, bound: f64) {
    if !(v > -bound && v < bound) {
        out.push(Violation::new(
            field,
            format!("{v} outside ({}, {bound})", -bound),
        ));
    }
}

fn check_non_negative(out: &mut Vec<Violation>, field: &str, v: i64) {
    if v < 0 {
        out.push(Violation::new(field, format!("{v} is negative")));
    }
}

fn check_feedback(out: &mut Vec<Violation>, field: &str, v: Option<i64>) {
    if let Some(v) = v {
        if !(1..=5).contains(&v) {
            out.push(Violation::new(field, format!("{v} outside scale 1 to 5")));
        }
    }
}

/// Lists every violated constraint; an empty result means the report is
/// valid.
pub fn violations(r: &SessionReport) -> Vec<Violation> {
    let mut out = Vec::new();

    if r.imei.len() != 15 || !r.imei.bytes().all(|b| b.is_ascii_digit()) {
        out.push(Violation::new("IMEI", "must be exactly 15 decimal digits"));
    }
    if !(1..=3).contains(&r.reproduction_mode) {
        out.push(Violation::new(
            "ReproductionMode",
            format!("{} not in {{1, 2, 3}}", r.reproduction_mode),
        ));
    }
    check_non_negative(&mut out, "ReproductionTime", r.reproduction_time_ms);
    if NaiveDate::parse_from_str(&r.date, "%Y-%m-%d").is_err() || r.date.len() != 10 {
        out.push(Violation::new("Date", "expected YYYY-MM-DD"));
    }
    if NaiveTime::parse_from_str(&r.hour, "%H:%M:%S").is_err() || r.hour.len() != 8 {
        out.push(Violation::new("Hour", "expected HH:MM:SS"));
    }
    check_non_negative(
        &mut out,
        "InitialBufferingTime",
        r.initial_buffering_time_ms,
    );
    if !(r.rebuffering_frequency >= 0.0) || !r.rebuffering_frequency.is_finite() {
        out.push(Violation::new(
            "RebufferingFrequency",
            "must be finite and non-negative",
        ));
    }
    check_non_negative(&mut out, "MeanRebufferingTime", r.mean_rebuffering_time_ms);

    let loc = &r.location;
    check_open_range(&mut out, "Latitude", loc.latitude, 90.0);
    check_open_range(&mut out, "Longitude", loc.longitude, 180.0);
    if !loc.altitude.is_finite() {
        out.push(Violation::new("Altitude", "must be finite"));
    }
    if !(loc.accuracy >= 0.0) || !loc.accuracy.is_finite() {
        out.push(Violation::new(
            "Accuracy",
            "must be finite and non-negative",
        ));
    }
    if NaiveDateTime::parse_from_str(&loc.time, "%Y-%m-%d_%H:%M:%S").is_err()
        || loc.time.len() != 19
    {
        out.push(Violation::new("Time", "expected YYYY-MM-DD_HH:MM:SS"));
    }

    if ConnectionType::from_code(r.connection_type).is_none() {
        out.push(Violation::new(
            "ConnectionType",
            format!("{} not in 0..=15", r.connection_type),
        ));
    }
    check_feedback(&mut out, "VideoQualityFeedback", r.video_quality_feedback);
    check_feedback(&mut out, "AudioQualityFeedback", r.audio_quality_feedback);
    check_feedback(&mut out, "GeneralFeedback", r.general_feedback);
    if !(1.0..=5.0).contains(&r.estimated_video_quality) {
        out.push(Violation::new(
            "EstimatedVideoQuality",
            format!("{} outside scale 1 to 5", r.estimated_video_quality),
        ));
    }
    out
}

pub fn validate(r: &SessionReport) -> std::result::Result<(), Vec<Violation>> {
    let v = violations(r);
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Encodes a valid report as one JSON line (no trailing newline).
pub fn serialize(r: &SessionReport) -> Result<String> {
    if let Err(v) = validate(r) {
        let joined = v
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Parse(format!(
            "refusing to serialize invalid report: {joined}"
        )));
    }
    serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))
}

/// Decodes one JSON object. Unknown keys and missing required keys are
/// errors; the feedback fields and comments may be omitted.
pub fn parse(text: &str) -> Result<SessionReport> {
    serde_json::from_str(text.trim()).map_err(|e| Error::Parse(e.to_string()))
}

pub fn technology_of(r: &SessionReport) -> TechnologyGroup {
    ConnectionType::from_code(r.connection_type)
        .map(ConnectionType::technology_group)
        .unwrap_or(TechnologyGroup::Other)
}

/// Human-readable multi-line rendering.
pub struct Pretty<'a>(pub &'a SessionReport);

impl fmt::Display for Pretty<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0;
        let conn = ConnectionType::from_code(r.connection_type)
            .map(|c| c.label().to_owned())
            .unwrap_or_else(|| format!("?{}", r.connection_type));
        let fb = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
        writeln!(f, "IMEI                  {}", r.imei)?;
        writeln!(
            f,
            "Session               {} {} (mode {})",
            r.date, r.hour, r.reproduction_mode
        )?;
        writeln!(f, "ReproductionTime      {} ms", r.reproduction_time_ms)?;
        writeln!(
            f,
            "InitialBufferingTime  {} ms",
            r.initial_buffering_time_ms
        )?;
        writeln!(f, "RebufferingFrequency  {} /s", r.rebuffering_frequency)?;
        writeln!(f, "MeanRebufferingTime   {} ms", r.mean_rebuffering_time_ms)?;
        writeln!(
            f,
            "Location              {}, {} ({} m, +/-{} m, {:?} at {})",
            r.location.latitude,
            r.location.longitude,
            r.location.altitude,
            r.location.accuracy,
            r.location.provider,
            r.location.time
        )?;
        writeln!(f, "ConnectionType        {} ({})", conn, r.connection_type)?;
        writeln!(
            f,
            "Cell                  LAC {} CellID {} RSSI {} dBm",
            r.lac, r.cell_id, r.rssi_dbm
        )?;
        writeln!(
            f,
            "Feedback              video {} audio {} general {}",
            fb(r.video_quality_feedback),
            fb(r.audio_quality_feedback),
            fb(r.general_feedback)
        )?;
        if !r.additional_comments.is_empty() {
            writeln!(f, "Comments              {}", r.additional_comments)?;
        }
        write!(f, "EstimatedVideoQuality {}", r.estimated_video_quality)
    }
}
