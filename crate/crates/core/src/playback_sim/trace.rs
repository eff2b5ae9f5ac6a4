use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{lit, Real};

pub const CSV_HEADER: [&str; 2] = ["time_s", "rate_Bps"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSegment<T> {
    /// Seconds since the request.
    pub start: T,
    /// Available bandwidth, bytes/second.
    pub rate: T,
}

/// Piecewise-constant available bandwidth.
///
/// The last segment extends forever; a trailing zero-rate segment marks the
/// end of usable capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TraceSegment<T>>", into = "Vec<TraceSegment<T>>")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct BandwidthTrace<T> {
    segments: Vec<TraceSegment<T>>,
}

impl<T: Real> BandwidthTrace<T> {
    pub fn new(segments: Vec<TraceSegment<T>>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::param("trace", "at least one segment required"));
        };
        if first.start != T::zero() {
            return Err(Error::param("trace", "first segment must start at 0"));
        }
        for pair in segments.windows(2) {
            if !(pair[1].start > pair[0].start) {
                return Err(Error::param(
                    "trace",
                    "start times must be strictly increasing",
                ));
            }
        }
        for seg in &segments {
            if !seg.start.is_finite() {
                return Err(Error::param("trace", "start times must be finite"));
            }
            if !(seg.rate >= T::zero()) || !seg.rate.is_finite() {
                return Err(Error::param(
                    "trace",
                    "rates must be finite and non-negative",
                ));
            }
        }
        Ok(Self { segments })
    }

    pub fn constant(rate: T) -> Result<Self> {
        Self::new(vec![TraceSegment {
            start: T::zero(),
            rate,
        }])
    }

    pub fn segments(&self) -> &[TraceSegment<T>] {
        &self.segments
    }

    fn index_at(&self, t: T) -> usize {
        self.segments
            .partition_point(|s| s.start <= t)
            .saturating_sub(1)
    }

    pub fn rate_at(&self, t: T) -> T {
        self.segments[self.index_at(t)].rate
    }

    /// Start of the first segment strictly after `t`.
    pub fn next_change_after(&self, t: T) -> Option<T> {
        let i = self.segments.partition_point(|s| s.start <= t);
        self.segments.get(i).map(|s| s.start)
    }

    pub fn min_rate(&self) -> T {
        self.segments
            .iter()
            .map(|s| s.rate)
            .fold(T::infinity(), T::min)
    }

    pub fn scaled(&self, k: T) -> Result<Self> {
        Self::new(
            self.segments
                .iter()
                .map(|s| TraceSegment {
                    start: s.start,
                    rate: s.rate * k,
                })
                .collect(),
        )
    }

    /// Reads a `time_s,rate_Bps` CSV.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?;
        if headers.iter().ne(CSV_HEADER) {
            return Err(Error::Parse(format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut segments = Vec::new();
        for row in rdr.deserialize::<(f64, f64)>() {
            let (start, rate) = row.map_err(|e| Error::Parse(e.to_string()))?;
            segments.push(TraceSegment {
                start: lit(start),
                rate: lit(rate),
            });
        }
        Self::new(segments)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        wtr.write_record(CSV_HEADER).map_err(io)?;
        for s in &self.segments {
            wtr.write_record([s.start.to_string(), s.rate.to_string()])
                .map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

impl<T: Real> TryFrom<Vec<TraceSegment<T>>> for BandwidthTrace<T> {
    type Error = Error;

    fn try_from(segments: Vec<TraceSegment<T>>) -> Result<Self> {
        Self::new(segments)
    }
}

impl<T> From<BandwidthTrace<T>> for Vec<TraceSegment<T>> {
    fn from(trace: BandwidthTrace<T>) -> Self {
        trace.segments
    }
}
