//! Application metrics to MOS.
//!
//! Each metric is quantized into a low/medium/high level and the levels are
//! combined linearly:
//!
//! ```text
//! MOS = 4.23 - 0.0672 * L_ti - 0.742 * L_fr - 0.106 * L_tr
//! ```
//!
//! A wireless-calibrated score multiplies the base score by a fitted slope
//! (1.1935 pooled, 1.1995 WiFi, 1.2089 UMTS). Both are clamped to `[1, 5]`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{lit, Real};
use crate::playback_sim::{
    estimate_metrics_from_averages, AppQoSMetrics, PlayerConfig, VideoProfile,
};
use crate::tcp_model::{steady_state_throughput, NetworkQoS, TcpParams};

pub const MOS_MIN: f64 = 1.0;
pub const MOS_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Level {
    Low = 1,
    Medium = 2,
    High = 3,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Medium, Level::High];

    pub fn value(self) -> u8 {
        self as u8
    }
}

impl From<Level> for u8 {
    fn from(l: Level) -> u8 {
        l.value()
    }
}

impl TryFrom<u8> for Level {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Level::Low),
            2 => Ok(Level::Medium),
            3 => Ok(Level::High),
            _ => Err(Error::param("level", format!("{v} is not in {{1, 2, 3}}"))),
        }
    }
}

/// Two cut points splitting `[0, inf)` into three half-open bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> Bounds<T> {
    pub fn new(lower: T, upper: T) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate("bounds")?;
        Ok(b)
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.lower >= T::zero() && self.lower < self.upper) || !self.upper.is_finite() {
            return Err(Error::param(name, "need 0 <= lower < upper < inf"));
        }
        Ok(())
    }

    /// `[0, lower) -> Low`, `[lower, upper) -> Medium`, `[upper, inf) -> High`.
    pub fn level(&self, v: T) -> Level {
        if v < self.lower {
            Level::Low
        } else if v < self.upper {
            Level::Medium
        } else {
            Level::High
        }
    }
}

/// Quantization cut points.
///
/// The defaults are placeholders sized against typical field magnitudes,
/// not published ground truth: startup 5 s / 15 s, rebuffering frequency
/// 0.002 / 0.01 per second, stall duration 5 s / 10 s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub struct QuantizationConfig<T> {
    pub t_init_bounds: Bounds<T>,
    pub f_rebuf_bounds: Bounds<T>,
    pub t_rebuf_bounds: Bounds<T>,
}

impl<T: Real> Default for QuantizationConfig<T> {
    fn default() -> Self {
        let b = |lower, upper| Bounds {
            lower: lit(lower),
            upper: lit(upper),
        };
        Self {
            t_init_bounds: b(5.0, 15.0),
            f_rebuf_bounds: b(0.002, 0.01),
            t_rebuf_bounds: b(5.0, 10.0),
        }
    }
}

impl<T: Real> QuantizationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.t_init_bounds.validate("t_init_bounds")?;
        self.f_rebuf_bounds.validate("f_rebuf_bounds")?;
        self.t_rebuf_bounds.validate("t_rebuf_bounds")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantizedLevels {
    pub l_ti: Level,
    pub l_fr: Level,
    pub l_tr: Level,
}

impl QuantizedLevels {
    pub fn new(l_ti: Level, l_fr: Level, l_tr: Level) -> Self {
        Self { l_ti, l_fr, l_tr }
    }

    pub fn from_values(l_ti: u8, l_fr: u8, l_tr: u8) -> Result<Self> {
        Ok(Self::new(
            l_ti.try_into()?,
            l_fr.try_into()?,
            l_tr.try_into()?,
        ))
    }

    /// All 27 combinations, `l_ti` varying slowest.
    pub fn all() -> impl Iterator<Item = QuantizedLevels> {
        Level::ALL.into_iter().flat_map(|ti| {
            Level::ALL.into_iter().flat_map(move |fr| {
                Level::ALL
                    .into_iter()
                    .map(move |tr| QuantizedLevels::new(ti, fr, tr))
            })
        })
    }
}

impl fmt::Display for QuantizedLevels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.l_ti.value(),
            self.l_fr.value(),
            self.l_tr.value()
        )
    }
}

pub fn quantize<T: Real>(
    metrics: &AppQoSMetrics<T>,
    cfg: &QuantizationConfig<T>,
) -> QuantizedLevels {
    QuantizedLevels {
        l_ti: cfg.t_init_bounds.level(metrics.t_init),
        l_fr: cfg.f_rebuf_bounds.level(metrics.f_rebuf),
        l_tr: cfg.t_rebuf_bounds.level(metrics.t_rebuf),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub struct MosCoefficients<T> {
    pub intercept: T,
    pub c_ti: T,
    pub c_fr: T,
    pub c_tr: T,
}

impl<T: Real> Default for MosCoefficients<T> {
    fn default() -> Self {
        Self {
            intercept: lit(4.23),
            c_ti: lit(0.0672),
            c_fr: lit(0.742),
            c_tr: lit(0.106),
        }
    }
}

impl<T: Real> MosCoefficients<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.intercept > T::zero()) || !self.intercept.is_finite() {
            return Err(Error::param("intercept", "must be positive"));
        }
        for (name, c) in [
            ("c_ti", self.c_ti),
            ("c_fr", self.c_fr),
            ("c_tr", self.c_tr),
        ] {
            if !(c >= T::zero()) || !c.is_finite() {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Linear score before clamping.
    pub fn raw(&self, levels: &QuantizedLevels) -> T {
        let l = |x: Level| lit::<T>(f64::from(x.value()));
        self.intercept
            - self.c_ti * l(levels.l_ti)
            - self.c_fr * l(levels.l_fr)
            - self.c_tr * l(levels.l_tr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechnologyScope {
    All,
    Wifi,
    Umts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSlope<T> {
    pub slope: T,
    pub technology_scope: TechnologyScope,
}

impl<T: Real> CalibrationSlope<T> {
    pub const POOLED: f64 = 1.1935;
    pub const WIFI: f64 = 1.1995;
    pub const UMTS: f64 = 1.2089;

    pub fn new(slope: T, technology_scope: TechnologyScope) -> Result<Self> {
        let c = Self {
            slope,
            technology_scope,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slope > T::zero()) || !self.slope.is_finite() {
            return Err(Error::param("slope", "must be positive and finite"));
        }
        Ok(())
    }

    /// Fitted slope for the given technology group.
    pub fn for_scope(technology_scope: TechnologyScope) -> Self {
        let slope = match technology_scope {
            TechnologyScope::All => Self::POOLED,
            TechnologyScope::Wifi => Self::WIFI,
            TechnologyScope::Umts => Self::UMTS,
        };
        Self {
            slope: lit(slope),
            technology_scope,
        }
    }

    pub fn pooled() -> Self {
        Self::for_scope(TechnologyScope::All)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MosVariant {
    Base,
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosScore<T> {
    pub value: T,
    pub variant: MosVariant,
}

fn clamp_mos<T: Real>(v: T) -> T {
    v.max(lit(MOS_MIN)).min(lit(MOS_MAX))
}

pub fn mos_base<T: Real>(levels: &QuantizedLevels, coeffs: &MosCoefficients<T>) -> MosScore<T> {
    MosScore {
        value: clamp_mos(coeffs.raw(levels)),
        variant: MosVariant::Base,
    }
}

pub fn mos_calibrated<T: Real>(
    base: &MosScore<T>,
    cal: &CalibrationSlope<T>,
) -> Result<MosScore<T>> {
    if base.variant == MosVariant::Calibrated {
        return Err(Error::AlreadyCalibrated);
    }
    cal.validate()?;
    Ok(MosScore {
        value: clamp_mos(cal.slope * base.value),
        variant: MosVariant::Calibrated,
    })
}

/// Output of the network-to-MOS pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosEstimate<T> {
    pub throughput: T,
    pub metrics: AppQoSMetrics<T>,
    pub levels: QuantizedLevels,
    pub base: MosScore<T>,
    pub calibrated: Option<MosScore<T>>,
}

impl<T: Real> MosEstimate<T> {
    /// Calibrated score when present, else the base score.
    pub fn score(&self) -> MosScore<T> {
        self.calibrated.unwrap_or(self.base)
    }
}

/// Scores already-measured application metrics.
pub fn score_metrics<T: Real>(
    metrics: &AppQoSMetrics<T>,
    cfg: &QuantizationConfig<T>,
    coeffs: &MosCoefficients<T>,
    cal: Option<&CalibrationSlope<T>>,
) -> Result<(QuantizedLevels, MosScore<T>, Option<MosScore<T>>)> {
    cfg.validate()?;
    coeffs.validate()?;
    let levels = quantize(metrics, cfg);
    let base = mos_base(&levels, coeffs);
    let calibrated = cal.map(|c| mos_calibrated(&base, c)).transpose()?;
    Ok((levels, base, calibrated))
}

/// Throughput estimate, buffer simulation, quantization, then MOS.
pub fn estimate_from_throughput<T: Real>(
    throughput: T,
    video: &VideoProfile<T>,
    player: &PlayerConfig<T>,
    cfg: &QuantizationConfig<T>,
    coeffs: &MosCoefficients<T>,
    cal: Option<&CalibrationSlope<T>>,
) -> Result<MosEstimate<T>> {
    let metrics = estimate_metrics_from_averages(throughput, video, player)?;
    let (levels, base, calibrated) = score_metrics(&metrics, cfg, coeffs, cal)?;
    Ok(MosEstimate {
        throughput,
        metrics,
        levels,
        base,
        calibrated,
    })
}

/// Full pipeline from network QoS. Returns the metrics and the final score
/// (calibrated when a slope is given).
pub fn estimate_mos_from_network<T: Real>(
    qos: &NetworkQoS<T>,
    tcp: &TcpParams<T>,
    video: &VideoProfile<T>,
    player: &PlayerConfig<T>,
    cfg: &QuantizationConfig<T>,
    coeffs: &MosCoefficients<T>,
    cal: Option<&CalibrationSlope<T>>,
) -> Result<(AppQoSMetrics<T>, MosScore<T>)> {
    let est = estimate_network_detailed(qos, tcp, video, player, cfg, coeffs, cal)?;
    Ok((est.metrics, est.score()))
}

pub fn estimate_network_detailed<T: Real>(
    qos: &NetworkQoS<T>,
    tcp: &TcpParams<T>,
    video: &VideoProfile<T>,
    player: &PlayerConfig<T>,
    cfg: &QuantizationConfig<T>,
    coeffs: &MosCoefficients<T>,
    cal: Option<&CalibrationSlope<T>>,
) -> Result<MosEstimate<T>> {
    let throughput = steady_state_throughput(qos, tcp)?;
    estimate_from_throughput(throughput, video, player, cfg, coeffs, cal)
}
