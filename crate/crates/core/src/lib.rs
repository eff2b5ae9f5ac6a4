//! Quality-of-experience estimation for progressive-download video.
//!
//! The pipeline turns network conditions into an average TCP throughput
//! ([`tcp_model`]), simulates the player buffer to obtain startup delay and
//! stalls ([`playback_sim`]), and maps those onto a 1-5 MOS ([`mos_model`]).
//! Around it sit the terminal report format ([`report_schema`]), rule-based
//! diagnosis ([`advice_engine`]) and offline statistics ([`analytics`]).
//!
//! The numeric modules are generic over [`Real`]; the aliases at the crate
//! root fix the scalar to `f64`.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advice_engine;
pub mod analytics;
pub mod config;
pub mod error;
pub mod mos_model;
pub mod num;
pub mod playback_sim;
pub mod report_schema;
pub mod tcp_model;

pub use error::{Error, Result};
pub use num::Real;

pub type NetworkQoS = tcp_model::NetworkQoS<f64>;
pub type TcpParams = tcp_model::TcpParams<f64>;

pub type VideoProfile = playback_sim::VideoProfile<f64>;
pub type PlayerConfig = playback_sim::PlayerConfig<f64>;
pub type BandwidthTrace = playback_sim::BandwidthTrace<f64>;
pub type PlaybackTimeline = playback_sim::PlaybackTimeline<f64>;
pub type AppQoSMetrics = playback_sim::AppQoSMetrics<f64>;

pub type QuantizationConfig = mos_model::QuantizationConfig<f64>;
pub type MosCoefficients = mos_model::MosCoefficients<f64>;
pub type CalibrationSlope = mos_model::CalibrationSlope<f64>;
pub type MosScore = mos_model::MosScore<f64>;
pub type MosEstimate = mos_model::MosEstimate<f64>;

pub type SampleSummary = analytics::SampleSummary<f64>;
pub type BoxStats = analytics::BoxStats<f64>;
pub type RegressionFit = analytics::RegressionFit<f64>;
pub type ResidualReport = analytics::ResidualReport<f64>;
pub type HistogramSpec = analytics::HistogramSpec<f64>;

pub use mos_model::{Level, MosVariant, QuantizedLevels, TechnologyScope};
pub use report_schema::{ConnectionType, Location, SessionReport, TechnologyGroup, Violation};
