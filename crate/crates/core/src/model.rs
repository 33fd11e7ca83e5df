//! Shared domain types: devices, delay classes, VMs, clusters, rewards and
//! learning hyper-parameters. Everything here is plain data.

use std::fmt;
use std::str::FromStr;

/// Deadline group of a device.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Strict,
    Lenient,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Strict, ClassLabel::Lenient];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::Strict => 0,
            ClassLabel::Lenient => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Strict => "STRICT",
            ClassLabel::Lenient => "LENIENT",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "STRICT" => Ok(ClassLabel::Strict),
            "LENIENT" => Ok(ClassLabel::Lenient),
            other => Err(format!("unknown delay class `{other}`")),
        }
    }
}

/// Deadline bounds (milliseconds) of one delay class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayClass {
    pub label: ClassLabel,
    pub deadline_low_ms: f64,
    pub deadline_high_ms: f64,
}

impl DelayClass {
    /// 100–900 ms, mean 0.5 s.
    pub const STRICT: DelayClass = DelayClass {
        label: ClassLabel::Strict,
        deadline_low_ms: 100.0,
        deadline_high_ms: 900.0,
    };

    /// 500–1500 ms, mean 1 s.
    pub const LENIENT: DelayClass = DelayClass {
        label: ClassLabel::Lenient,
        deadline_low_ms: 500.0,
        deadline_high_ms: 1500.0,
    };

    pub fn contains(&self, deadline_ms: f64) -> bool {
        self.deadline_low_ms <= deadline_ms && deadline_ms <= self.deadline_high_ms
    }

    pub fn mean_ms(&self) -> f64 {
        0.5 * (self.deadline_low_ms + self.deadline_high_ms)
    }
}

/// One IoT endpoint: a packet to process and a completion deadline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Device {
    pub id: usize,
    pub packet_bits: f64,
    pub deadline_ms: f64,
    pub class: ClassLabel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VmSpec {
    /// Processing rate in bits per second.
    pub capacity_bps: f64,
    pub count: usize,
}

impl Default for VmSpec {
    fn default() -> Self {
        VmSpec {
            capacity_bps: DEFAULT_VM_CAPACITY_BPS,
            count: 5,
        }
    }
}

/// Default VM processing rate, bits per second.
pub const DEFAULT_VM_CAPACITY_BPS: f64 = 1e9;

/// A group of devices served by a single VM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub vm_index: usize,
    pub member_ids: Vec<usize>,
}

impl Cluster {
    pub fn new(vm_index: usize) -> Self {
        Cluster {
            vm_index,
            member_ids: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }
}

/// Per-step rewards for the two agent actions, with and without a delayed device.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RewardTable {
    pub inc_ok: i64,
    pub dec_ok: i64,
    pub inc_delayed: i64,
    pub dec_delayed: i64,
}

impl Default for RewardTable {
    fn default() -> Self {
        RewardTable {
            inc_ok: 5,
            dec_ok: -1,
            inc_delayed: -10,
            dec_delayed: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnSpec {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Multiplicative per-episode factor applied to epsilon.
    pub epsilon_decay: f64,
    pub episodes: usize,
    /// Occupancy values above this saturate to it in the agent state.
    pub max_occupancy_state: usize,
    /// Cap on the devices-remaining state feature; 0 drops the feature.
    pub max_remaining_state: usize,
}

impl Default for LearnSpec {
    fn default() -> Self {
        LearnSpec {
            alpha: 0.1,
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay: 0.999,
            episodes: 5000,
            max_occupancy_state: 8,
            max_remaining_state: 60,
        }
    }
}

impl LearnSpec {
    /// Exploration rate in effect during training episode `episode`.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let decayed = self.epsilon_start
            * self
                .epsilon_decay
                .powi(episode.min(i32::MAX as usize) as i32);
        decayed.max(self.epsilon_end)
    }
}

/// Which KPI columns a scenario reports, after the per-application KPI table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KpiPreset {
    EHealth,
    FaceRecognition,
    Vehicular,
    HomeSensors,
    All,
}

impl KpiPreset {
    pub fn as_str(self) -> &'static str {
        match self {
            KpiPreset::EHealth => "EHEALTH",
            KpiPreset::FaceRecognition => "FACE_RECOGNITION",
            KpiPreset::Vehicular => "VEHICULAR",
            KpiPreset::HomeSensors => "HOME_SENSORS",
            KpiPreset::All => "ALL",
        }
    }

    pub fn reports_throughput(self) -> bool {
        matches!(
            self,
            KpiPreset::EHealth | KpiPreset::FaceRecognition | KpiPreset::All
        )
    }

    pub fn reports_response_time(self) -> bool {
        !matches!(self, KpiPreset::HomeSensors)
    }

    pub fn reports_energy(self) -> bool {
        matches!(
            self,
            KpiPreset::EHealth | KpiPreset::FaceRecognition | KpiPreset::All
        )
    }
}

impl fmt::Display for KpiPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KpiPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "EHEALTH" => Ok(KpiPreset::EHealth),
            "FACE_RECOGNITION" => Ok(KpiPreset::FaceRecognition),
            "VEHICULAR" => Ok(KpiPreset::Vehicular),
            "HOME_SENSORS" => Ok(KpiPreset::HomeSensors),
            "ALL" => Ok(KpiPreset::All),
            other => Err(format!("unknown kpi preset `{other}`")),
        }
    }
}
