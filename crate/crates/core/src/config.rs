//! Pipeline configuration file (TOML). Every section is optional; missing
//! values fall back to the built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advice_engine::AdviceThresholds;
use crate::error::{Error, Result};
use crate::mos_model::{CalibrationSlope, MosCoefficients, QuantizationConfig, TechnologyScope};
use crate::playback_sim::{PlayerConfig, VideoProfile};
use crate::tcp_model::{default_rto, TcpParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TcpDefaults {
    pub mss: f64,
    pub max_window: f64,
    pub acked_per_ack: f64,
    /// Fixed retransmission timeout; `max(1 s, 4 rtt)` when unset.
    pub rto: Option<f64>,
}

impl Default for TcpDefaults {
    fn default() -> Self {
        Self {
            mss: TcpParams::<f64>::DEFAULT_MSS,
            max_window: TcpParams::<f64>::DEFAULT_MAX_WINDOW,
            acked_per_ack: TcpParams::<f64>::DEFAULT_ACKED_PER_ACK,
            rto: None,
        }
    }
}

impl TcpDefaults {
    pub fn params_for_rtt(&self, rtt: f64) -> TcpParams<f64> {
        TcpParams {
            mss: self.mss,
            max_window: self.max_window,
            acked_per_ack: self.acked_per_ack,
            rto: self.rto.unwrap_or_else(|| default_rto(rtt)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VideoDefaults {
    pub throttle_factor: f64,
    /// Initial burst expressed in seconds of media.
    pub initial_burst_seconds: f64,
}

impl Default for VideoDefaults {
    fn default() -> Self {
        Self {
            throttle_factor: 1.25,
            initial_burst_seconds: 40.0,
        }
    }
}

impl VideoDefaults {
    pub fn profile(&self, media_size: f64, duration: f64) -> Result<VideoProfile<f64>> {
        let burst = (media_size / duration * self.initial_burst_seconds).min(media_size);
        VideoProfile::new(media_size, duration, self.throttle_factor, burst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlayerDefaults {
    /// Seconds of media buffered before the first frame.
    pub startup_seconds: f64,
    /// Seconds of media needed to resume after a stall; same as startup
    /// when unset.
    pub resume_seconds: Option<f64>,
    /// Bytes; unbounded when unset.
    pub buffer_capacity: Option<f64>,
}

impl Default for PlayerDefaults {
    fn default() -> Self {
        Self {
            startup_seconds: PlayerConfig::<f64>::DEFAULT_STARTUP_SECONDS,
            resume_seconds: None,
            buffer_capacity: None,
        }
    }
}

impl PlayerDefaults {
    pub fn player_for(&self, video: &VideoProfile<f64>) -> Result<PlayerConfig<f64>> {
        let startup = video.media_bytes(self.startup_seconds);
        let resume = video.media_bytes(self.resume_seconds.unwrap_or(self.startup_seconds));
        PlayerConfig::new(startup, resume, self.buffer_capacity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSet {
    pub pooled: f64,
    pub wifi: f64,
    pub umts: f64,
}

impl Default for CalibrationSet {
    fn default() -> Self {
        Self {
            pooled: CalibrationSlope::<f64>::POOLED,
            wifi: CalibrationSlope::<f64>::WIFI,
            umts: CalibrationSlope::<f64>::UMTS,
        }
    }
}

impl CalibrationSet {
    pub fn slope(&self, scope: TechnologyScope) -> Result<CalibrationSlope<f64>> {
        let slope = match scope {
            TechnologyScope::All => self.pooled,
            TechnologyScope::Wifi => self.wifi,
            TechnologyScope::Umts => self.umts,
        };
        CalibrationSlope::new(slope, scope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectorConfig {
    pub store_path: PathBuf,
    pub listen: String,
}

impl Default for CollectorConfig {
    fn default() -> Self {
        Self {
            store_path: PathBuf::from("qoe-reports.jsonl"),
            listen: "127.0.0.1:8080".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tcp: TcpDefaults,
    pub video: VideoDefaults,
    pub player: PlayerDefaults,
    pub quantization: QuantizationConfig<f64>,
    pub mos: MosCoefficients<f64>,
    pub calibration: CalibrationSet,
    pub advice: AdviceThresholds,
    pub collector: CollectorConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.tcp.params_for_rtt(0.1).validate()?;
        let probe = self.video.profile(1e7, 160.0)?;
        self.player.player_for(&probe)?;
        self.quantization.validate()?;
        self.mos.validate()?;
        for scope in [
            TechnologyScope::All,
            TechnologyScope::Wifi,
            TechnologyScope::Umts,
        ] {
            self.calibration.slope(scope)?;
        }
        Ok(())
    }
}
