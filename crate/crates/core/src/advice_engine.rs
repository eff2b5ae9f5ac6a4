//! Rule-based diagnosis of low QoE.
//!
//! Rules are plain data ([`RuleTable`]) so deployments can extend them from
//! JSON. Each [`RuleChain`] has a gate and an ordered IF / ELSE IF / ELSE
//! list; the first matching branch wins.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    Wifi,
    Cellular,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerProfile {
    Performance,
    Balanced,
    PowerSave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficLevel {
    High,
    Low,
}

/// Snapshot of terminal state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceState {
    pub connection_kind: ConnectionKind,
    pub locked_on_2g: bool,
    pub rssi_dbm: i32,
    pub wifi_available: bool,
    pub wifi_enabled: bool,
    pub bluetooth_enabled: bool,
    pub wifi_tethering: bool,
    pub syncing_apps: u32,
    pub running_apps: u32,
    pub hungry_app_detected: bool,
    pub low_memory: bool,
    pub cpu_load_high: bool,
    pub cpu_freq_low: bool,
    /// Percent.
    pub battery_level: f64,
    pub battery_temp_high: bool,
    pub power_profile: PowerProfile,
    pub device_capability_index: u32,
    pub network_traffic_level: TrafficLevel,
}

impl DeviceState {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=100.0).contains(&self.battery_level) {
            return Err(format!(
                "battery_level {} outside [0, 100]",
                self.battery_level
            ));
        }
        if self.rssi_dbm > 0 {
            return Err(format!("rssi_dbm {} is positive", self.rssi_dbm));
        }
        Ok(())
    }
}

impl Default for DeviceState {
    /// A healthy device: nothing suspicious.
    fn default() -> Self {
        Self {
            connection_kind: ConnectionKind::Cellular,
            locked_on_2g: false,
            rssi_dbm: -70,
            wifi_available: false,
            wifi_enabled: false,
            bluetooth_enabled: false,
            wifi_tethering: false,
            syncing_apps: 0,
            running_apps: 3,
            hungry_app_detected: false,
            low_memory: false,
            cpu_load_high: false,
            cpu_freq_low: false,
            battery_level: 80.0,
            battery_temp_high: false,
            power_profile: PowerProfile::Balanced,
            device_capability_index: 5,
            network_traffic_level: TrafficLevel::Low,
        }
    }
}

/// What is known about the video being played.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionContext {
    /// Bytes/second.
    pub measured_throughput: f64,
    pub video_requirement_index: u32,
    pub video_resolution_low: bool,
    /// Bytes/second.
    pub video_coding_rate: f64,
}

impl SessionContext {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.measured_throughput >= 0.0) {
            return Err("measured_throughput must be non-negative".into());
        }
        if !(self.video_coding_rate >= 0.0) {
            return Err("video_coding_rate must be non-negative".into());
        }
        Ok(())
    }
}

impl Default for SessionContext {
    fn default() -> Self {
        Self {
            measured_throughput: 500_000.0,
            video_requirement_index: 3,
            video_resolution_low: false,
            video_coding_rate: 62_500.0,
        }
    }
}

/// Cut points for the qualitative evidence ("low RSSI", "many apps", ...).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdviceThresholds {
    /// RSSI strictly below this is low on cellular links.
    pub rssi_low_cellular_dbm: i32,
    /// RSSI strictly below this is low on WiFi links.
    pub rssi_low_wifi_dbm: i32,
    /// Running apps at or above this count are "many".
    pub many_apps: u32,
    /// Synchronizing apps at or above this count are "many".
    pub many_syncing_apps: u32,
    /// Battery at or below this percentage is low.
    pub battery_low_percent: f64,
    /// Throughput below `margin * video_coding_rate` is low.
    pub throughput_margin: f64,
    /// Coding rates below this (bytes/second) count as low source quality.
    pub low_coding_rate: f64,
}

impl Default for AdviceThresholds {
    fn default() -> Self {
        Self {
            rssi_low_cellular_dbm: -95,
            rssi_low_wifi_dbm: -80,
            many_apps: 10,
            many_syncing_apps: 3,
            battery_low_percent: 15.0,
            throughput_margin: 1.0,
            low_coding_rate: 31_250.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    LowThroughput,
    LowMemory,
    HighCpuLoad,
    LowCpuFreqForced,
    VideoExceedsCapability,
    LowSourceQuality,
}

impl Cause {
    pub fn label(self) -> &'static str {
        match self {
            Cause::LowThroughput => "Low throughput",
            Cause::LowMemory => "Low memory",
            Cause::HighCpuLoad => "High CPU load",
            Cause::LowCpuFreqForced => "Low CPU frequency forced",
            Cause::VideoExceedsCapability => "Video requirements exceeds terminal capabilities",
            Cause::LowSourceQuality => "Low video quality in origin",
        }
    }
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The advice catalog. [`Advice::text`] is the exact user-facing string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advice {
    StopDataSync,
    SwitchOffApps,
    SwitchTechnology,
    Activate3g,
    SwitchToWifi,
    SwitchOffWifiInterference,
    SwitchOffBluetoothInterference,
    SwitchOffWifiTethering,
    SwitchOffBluetooth,
    SwitchToCellular,
    SwitchOffHungryApp,
    CheckSystemUpdates,
    WaitForBattery,
    SelectPerformanceProfile,
    SelectLessDemandingVideo,
    SelectHigherQualityFile,
}

impl Advice {
    pub const ALL: [Advice; 16] = [
        Advice::StopDataSync,
        Advice::SwitchOffApps,
        Advice::SwitchTechnology,
        Advice::Activate3g,
        Advice::SwitchToWifi,
        Advice::SwitchOffWifiInterference,
        Advice::SwitchOffBluetoothInterference,
        Advice::SwitchOffWifiTethering,
        Advice::SwitchOffBluetooth,
        Advice::SwitchToCellular,
        Advice::SwitchOffHungryApp,
        Advice::CheckSystemUpdates,
        Advice::WaitForBattery,
        Advice::SelectPerformanceProfile,
        Advice::SelectLessDemandingVideo,
        Advice::SelectHigherQualityFile,
    ];

    pub fn text(self) -> &'static str {
        match self {
            Advice::StopDataSync => "Temporarily stop data synchronization",
            Advice::SwitchOffApps => "Offer some apps/services to be switched off",
            Advice::SwitchTechnology => "Switch to other technology (WiFi, Mobile)",
            Advice::Activate3g => "Activate 3G",
            Advice::SwitchToWifi => "Switch to a WiFi connection",
            Advice::SwitchOffWifiInterference => "Switch off WiFi to avoid interference",
            Advice::SwitchOffBluetoothInterference => "Switch off Bluetooth to avoid interference",
            Advice::SwitchOffWifiTethering => "Switch off WiFi Tethering",
            Advice::SwitchOffBluetooth => "Switch off Bluetooth",
            Advice::SwitchToCellular => "Switch to a cellular network connection",
            Advice::SwitchOffHungryApp => "Offer to switch off \u{201c}hungry\u{201d} app",
            Advice::CheckSystemUpdates => "Check for system updates",
            Advice::WaitForBattery => "Wait until battery gets in better conditions",
            Advice::SelectPerformanceProfile => "Select a performance oriented profile",
            Advice::SelectLessDemandingVideo => {
                "Try to select less demanding video files, switch off High Quality (HQ) option."
            }
            Advice::SelectHigherQualityFile => "Select another file of higher quality",
        }
    }
}

impl fmt::Display for Advice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// Evidence predicates over device and session state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Always,
    LowThroughput,
    HighTraffic,
    LowTraffic,
    OnCellular,
    OnWifi,
    ManyAppsSyncing,
    ManyAppsRunning,
    LockedOn2g,
    LowRssi,
    WifiAvailable,
    WifiEnabled,
    BluetoothEnabled,
    WifiTethering,
    LowMemory,
    HungryApp,
    CpuLoadHigh,
    CpuFreqLow,
    LowBattery,
    BatteryTempHigh,
    PowerSaveProfile,
    DeviceBelowRequirement,
    LowSourceQuality,
    All(Vec<Condition>),
    Any(Vec<Condition>),
    Not(Box<Condition>),
}

impl Condition {
    pub fn holds(&self, d: &DeviceState, s: &SessionContext, th: &AdviceThresholds) -> bool {
        match self {
            Condition::Always => true,
            Condition::LowThroughput => {
                s.measured_throughput < th.throughput_margin * s.video_coding_rate
            }
            Condition::HighTraffic => d.network_traffic_level == TrafficLevel::High,
            Condition::LowTraffic => d.network_traffic_level == TrafficLevel::Low,
            Condition::OnCellular => d.connection_kind == ConnectionKind::Cellular,
            Condition::OnWifi => d.connection_kind == ConnectionKind::Wifi,
            Condition::ManyAppsSyncing => d.syncing_apps >= th.many_syncing_apps,
            Condition::ManyAppsRunning => d.running_apps >= th.many_apps,
            Condition::LockedOn2g => d.locked_on_2g,
            Condition::LowRssi => {
                let limit = match d.connection_kind {
                    ConnectionKind::Wifi => th.rssi_low_wifi_dbm,
                    _ => th.rssi_low_cellular_dbm,
                };
                d.rssi_dbm < limit
            }
            Condition::WifiAvailable => d.wifi_available,
            Condition::WifiEnabled => d.wifi_enabled,
            Condition::BluetoothEnabled => d.bluetooth_enabled,
            Condition::WifiTethering => d.wifi_tethering,
            Condition::LowMemory => d.low_memory,
            Condition::HungryApp => d.hungry_app_detected,
            Condition::CpuLoadHigh => d.cpu_load_high,
            Condition::CpuFreqLow => d.cpu_freq_low,
            Condition::LowBattery => d.battery_level <= th.battery_low_percent,
            Condition::BatteryTempHigh => d.battery_temp_high,
            Condition::PowerSaveProfile => d.power_profile == PowerProfile::PowerSave,
            Condition::DeviceBelowRequirement => {
                d.device_capability_index < s.video_requirement_index
            }
            Condition::LowSourceQuality => {
                s.video_resolution_low || s.video_coding_rate < th.low_coding_rate
            }
            Condition::All(cs) => cs.iter().all(|c| c.holds(d, s, th)),
            Condition::Any(cs) => cs.iter().any(|c| c.holds(d, s, th)),
            Condition::Not(c) => !c.holds(d, s, th),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub when: Condition,
    pub advice: Advice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleChain {
    pub cause: Cause,
    /// Short description of the gating evidence.
    pub evidence: String,
    pub gate: Condition,
    pub branches: Vec<Branch>,
}

impl RuleChain {
    /// First branch whose condition holds, if the gate is open.
    pub fn evaluate(
        &self,
        d: &DeviceState,
        s: &SessionContext,
        th: &AdviceThresholds,
    ) -> Option<Advice> {
        if !self.gate.holds(d, s, th) {
            return None;
        }
        self.branches
            .iter()
            .find(|b| b.when.holds(d, s, th))
            .map(|b| b.advice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub chains: Vec<RuleChain>,
}

fn all(cs: impl IntoIterator<Item = Condition>) -> Condition {
    Condition::All(cs.into_iter().collect())
}

fn branch(when: Condition, advice: Advice) -> Branch {
    Branch { when, advice }
}

impl Default for RuleTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl RuleTable {
    /// The built-in causes, evidence and advices.
    pub fn standard() -> Self {
        use Condition as C;
        let chain = |cause, evidence: &str, gate, branches| RuleChain {
            cause,
            evidence: evidence.to_owned(),
            gate,
            branches,
        };
        RuleTable {
            chains: vec![
                chain(
                    Cause::LowThroughput,
                    "High traffic load",
                    all([C::LowThroughput, C::HighTraffic]),
                    vec![
                        branch(C::ManyAppsSyncing, Advice::StopDataSync),
                        branch(C::ManyAppsRunning, Advice::SwitchOffApps),
                        branch(C::Always, Advice::SwitchTechnology),
                    ],
                ),
                chain(
                    Cause::LowThroughput,
                    "Low network traffic and connected to a cellular network",
                    all([C::LowThroughput, C::LowTraffic, C::OnCellular]),
                    vec![
                        branch(C::LockedOn2g, Advice::Activate3g),
                        branch(all([C::LowRssi, C::WifiAvailable]), Advice::SwitchToWifi),
                        branch(
                            all([
                                C::LowRssi,
                                C::WifiEnabled,
                                C::Not(Box::new(C::WifiAvailable)),
                            ]),
                            Advice::SwitchOffWifiInterference,
                        ),
                        branch(
                            all([C::LowRssi, C::BluetoothEnabled]),
                            Advice::SwitchOffBluetoothInterference,
                        ),
                    ],
                ),
                chain(
                    Cause::LowThroughput,
                    "Low network traffic and connected to WiFi",
                    all([C::LowThroughput, C::LowTraffic, C::OnWifi]),
                    vec![
                        branch(C::WifiTethering, Advice::SwitchOffWifiTethering),
                        branch(C::BluetoothEnabled, Advice::SwitchOffBluetooth),
                        branch(C::Always, Advice::SwitchToCellular),
                    ],
                ),
                chain(
                    Cause::LowMemory,
                    "Low memory status flag is TRUE",
                    C::LowMemory,
                    vec![
                        branch(C::ManyAppsRunning, Advice::SwitchOffApps),
                        branch(C::HungryApp, Advice::SwitchOffHungryApp),
                        branch(C::Always, Advice::CheckSystemUpdates),
                    ],
                ),
                chain(
                    Cause::HighCpuLoad,
                    "CPU load is high during a period",
                    C::CpuLoadHigh,
                    vec![branch(C::ManyAppsRunning, Advice::SwitchOffApps)],
                ),
                chain(
                    Cause::LowCpuFreqForced,
                    "CPU freq low",
                    C::CpuFreqLow,
                    vec![
                        branch(
                            C::Any(vec![C::LowBattery, C::BatteryTempHigh]),
                            Advice::WaitForBattery,
                        ),
                        branch(C::PowerSaveProfile, Advice::SelectPerformanceProfile),
                        branch(C::Always, Advice::CheckSystemUpdates),
                    ],
                ),
                chain(
                    Cause::VideoExceedsCapability,
                    "Video source and device hardware information",
                    C::Always,
                    vec![branch(
                        C::DeviceBelowRequirement,
                        Advice::SelectLessDemandingVideo,
                    )],
                ),
                chain(
                    Cause::LowSourceQuality,
                    "Video source information",
                    C::Always,
                    vec![branch(C::LowSourceQuality, Advice::SelectHigherQualityFile)],
                ),
            ],
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagnosis {
    pub cause: Cause,
    pub advice: Advice,
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.cause, self.advice)
    }
}

/// Evaluates `table` in order, emitting at most one advice per chain.
pub fn diagnose_with(
    table: &RuleTable,
    state: &DeviceState,
    session: &SessionContext,
    thresholds: &AdviceThresholds,
) -> Vec<Diagnosis> {
    table
        .chains
        .iter()
        .filter_map(|c| {
            c.evaluate(state, session, thresholds)
                .map(|advice| Diagnosis {
                    cause: c.cause,
                    advice,
                })
        })
        .collect()
}

/// Diagnoses against the built-in rule table.
pub fn diagnose(
    state: &DeviceState,
    session: &SessionContext,
    thresholds: &AdviceThresholds,
) -> Vec<Diagnosis> {
    diagnose_with(&RuleTable::standard(), state, session, thresholds)
}
