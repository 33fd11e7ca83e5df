//! Scenario configuration, its validation, and the flat `key=value` file format.
//!
//! Keys are the field paths of [`ScenarioConfig`] (`vm.count`, `learn.alpha`, ...).
//! Blank lines and lines starting with `#` are ignored. A file only needs to
//! list the keys it overrides; everything else keeps its default.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result, Violation};
use crate::model::{ClassLabel, DelayClass, KpiPreset, LearnSpec, RewardTable, VmSpec};

/// Packet-size and deadline distributions of generated devices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub packet_min_bits: f64,
    pub packet_max_bits: f64,
    pub strict: DelayClass,
    pub lenient: DelayClass,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            packet_min_bits: 500e3,
            packet_max_bits: 4e6,
            strict: DelayClass::STRICT,
            lenient: DelayClass::LENIENT,
        }
    }
}

impl WorkloadSpec {
    pub fn class(&self, label: ClassLabel) -> &DelayClass {
        match label {
            ClassLabel::Strict => &self.strict,
            ClassLabel::Lenient => &self.lenient,
        }
    }
}

/// Model constants for the energy KPI. Not measured values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyModel {
    /// Radio energy per transmitted bit, J/bit.
    pub tx_joules_per_bit: f64,
    /// Power drawn by a busy VM, W.
    pub vm_power_watts: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            tx_joules_per_bit: 1e-7,
            vm_power_watts: 20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub vm: VmSpec,
    pub rewards: RewardTable,
    pub learn: LearnSpec,
    pub workload: WorkloadSpec,
    pub energy: EnergyModel,
    pub device_count: usize,
    /// Fraction of STRICT devices.
    pub class_mix: f64,
    pub radio_rate_bps: f64,
    pub utilization_window_ms: f64,
    pub seed: u64,
    pub kpi_preset: KpiPreset,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            vm: VmSpec::default(),
            rewards: RewardTable::default(),
            learn: LearnSpec::default(),
            workload: WorkloadSpec::default(),
            energy: EnergyModel::default(),
            device_count: 40,
            class_mix: 0.5,
            radio_rate_bps: 20e6,
            utilization_window_ms: 1500.0,
            seed: 1,
            kpi_preset: KpiPreset::All,
        }
    }
}

/// Every key accepted in a config file, in serialization order.
pub const KEYS: &[&str] = &[
    "vm.count",
    "vm.capacity",
    "rewards.inc_ok",
    "rewards.dec_ok",
    "rewards.inc_delayed",
    "rewards.dec_delayed",
    "learn.alpha",
    "learn.gamma",
    "learn.epsilon_start",
    "learn.epsilon_end",
    "learn.epsilon_decay",
    "learn.episodes",
    "learn.max_occupancy_state",
    "learn.max_remaining_state",
    "workload.packet_min",
    "workload.packet_max",
    "workload.strict.deadline_low",
    "workload.strict.deadline_high",
    "workload.lenient.deadline_low",
    "workload.lenient.deadline_high",
    "energy.e_tx",
    "energy.p_vm",
    "device_count",
    "class_mix",
    "radio_rate",
    "utilization_window",
    "seed",
    "kpi_preset",
];

fn parse_as<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("cannot parse `{value}`: {e}"))
}

impl ScenarioConfig {
    fn get(&self, key: &str) -> Option<String> {
        let v = match key {
            "vm.count" => self.vm.count.to_string(),
            "vm.capacity" => self.vm.capacity_bps.to_string(),
            "rewards.inc_ok" => self.rewards.inc_ok.to_string(),
            "rewards.dec_ok" => self.rewards.dec_ok.to_string(),
            "rewards.inc_delayed" => self.rewards.inc_delayed.to_string(),
            "rewards.dec_delayed" => self.rewards.dec_delayed.to_string(),
            "learn.alpha" => self.learn.alpha.to_string(),
            "learn.gamma" => self.learn.gamma.to_string(),
            "learn.epsilon_start" => self.learn.epsilon_start.to_string(),
            "learn.epsilon_end" => self.learn.epsilon_end.to_string(),
            "learn.epsilon_decay" => self.learn.epsilon_decay.to_string(),
            "learn.episodes" => self.learn.episodes.to_string(),
            "learn.max_occupancy_state" => self.learn.max_occupancy_state.to_string(),
            "learn.max_remaining_state" => self.learn.max_remaining_state.to_string(),
            "workload.packet_min" => self.workload.packet_min_bits.to_string(),
            "workload.packet_max" => self.workload.packet_max_bits.to_string(),
            "workload.strict.deadline_low" => self.workload.strict.deadline_low_ms.to_string(),
            "workload.strict.deadline_high" => self.workload.strict.deadline_high_ms.to_string(),
            "workload.lenient.deadline_low" => self.workload.lenient.deadline_low_ms.to_string(),
            "workload.lenient.deadline_high" => self.workload.lenient.deadline_high_ms.to_string(),
            "energy.e_tx" => self.energy.tx_joules_per_bit.to_string(),
            "energy.p_vm" => self.energy.vm_power_watts.to_string(),
            "device_count" => self.device_count.to_string(),
            "class_mix" => self.class_mix.to_string(),
            "radio_rate" => self.radio_rate_bps.to_string(),
            "utilization_window" => self.utilization_window_ms.to_string(),
            "seed" => self.seed.to_string(),
            "kpi_preset" => self.kpi_preset.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "vm.count" => self.vm.count = parse_as(value)?,
            "vm.capacity" => self.vm.capacity_bps = parse_as(value)?,
            "rewards.inc_ok" => self.rewards.inc_ok = parse_as(value)?,
            "rewards.dec_ok" => self.rewards.dec_ok = parse_as(value)?,
            "rewards.inc_delayed" => self.rewards.inc_delayed = parse_as(value)?,
            "rewards.dec_delayed" => self.rewards.dec_delayed = parse_as(value)?,
            "learn.alpha" => self.learn.alpha = parse_as(value)?,
            "learn.gamma" => self.learn.gamma = parse_as(value)?,
            "learn.epsilon_start" => self.learn.epsilon_start = parse_as(value)?,
            "learn.epsilon_end" => self.learn.epsilon_end = parse_as(value)?,
            "learn.epsilon_decay" => self.learn.epsilon_decay = parse_as(value)?,
            "learn.episodes" => self.learn.episodes = parse_as(value)?,
            "learn.max_occupancy_state" => self.learn.max_occupancy_state = parse_as(value)?,
            "learn.max_remaining_state" => self.learn.max_remaining_state = parse_as(value)?,
            "workload.packet_min" => self.workload.packet_min_bits = parse_as(value)?,
            "workload.packet_max" => self.workload.packet_max_bits = parse_as(value)?,
            "workload.strict.deadline_low" => {
                self.workload.strict.deadline_low_ms = parse_as(value)?
            }
            "workload.strict.deadline_high" => {
                self.workload.strict.deadline_high_ms = parse_as(value)?
            }
            "workload.lenient.deadline_low" => {
                self.workload.lenient.deadline_low_ms = parse_as(value)?
            }
            "workload.lenient.deadline_high" => {
                self.workload.lenient.deadline_high_ms = parse_as(value)?
            }
            "energy.e_tx" => self.energy.tx_joules_per_bit = parse_as(value)?,
            "energy.p_vm" => self.energy.vm_power_watts = parse_as(value)?,
            "device_count" => self.device_count = parse_as(value)?,
            "class_mix" => self.class_mix = parse_as(value)?,
            "radio_rate" => self.radio_rate_bps = parse_as(value)?,
            "utilization_window" => self.utilization_window_ms = parse_as(value)?,
            "seed" => self.seed = parse_as(value)?,
            "kpi_preset" => self.kpi_preset = parse_as(value)?,
            _ => return Err("unknown key".to_string()),
        }
        Ok(())
    }

    /// Renders every key, one `key=value` per line. Parsing the result gives
    /// back an identical config.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = self.get(key).expect("every listed key is readable");
            writeln!(out, "{key}={value}").unwrap();
        }
        out
    }

    /// Parses `key=value` text on top of the defaults. Syntax problems are
    /// reported as violations, all of them at once; the result is not validated.
    pub fn from_kv_str(text: &str) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        let mut problems = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(Violation::new(
                    format!("line {}", lineno + 1),
                    format!("expected key=value, got `{line}`"),
                ));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                problems.push(Violation::new(key, "key given more than once"));
                continue;
            }
            if let Err(reason) = cfg.set(key, value) {
                problems.push(Violation::new(key, reason));
            }
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Invalid(problems))
        }
    }

    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Invalid(vec![Violation::new(
                "config",
                format!("cannot read {}: {e}", path.display()),
            )])
        })?;
        let cfg = ScenarioConfig::from_kv_str(&text)?;
        validate_config(&cfg).map(|_| cfg)
    }
}

fn check(out: &mut Vec<Violation>, ok: bool, field: &str, reason: &str) {
    if !ok {
        out.push(Violation::new(field, reason));
    }
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn check_class(out: &mut Vec<Violation>, prefix: &str, class: &DelayClass) {
    check(
        out,
        positive(class.deadline_low_ms),
        &format!("{prefix}.deadline_low"),
        "must be > 0",
    );
    check(
        out,
        class.deadline_low_ms < class.deadline_high_ms && class.deadline_high_ms.is_finite(),
        &format!("{prefix}.deadline_high"),
        "must be finite and > deadline_low",
    );
}

/// Checks every invariant and returns the full list of violations.
pub fn validate_config(cfg: &ScenarioConfig) -> std::result::Result<&ScenarioConfig, Error> {
    let mut v = Vec::new();

    check(&mut v, cfg.vm.count >= 1, "vm.count", "must be >= 1");
    check(
        &mut v,
        positive(cfg.vm.capacity_bps),
        "vm.capacity",
        "must be > 0",
    );

    let l = &cfg.learn;
    check(&mut v, in_unit(l.alpha), "learn.alpha", "must lie in [0,1]");
    check(
        &mut v,
        (0.0..1.0).contains(&l.gamma),
        "learn.gamma",
        "must lie in [0,1)",
    );
    check(
        &mut v,
        in_unit(l.epsilon_start),
        "learn.epsilon_start",
        "must lie in [0,1]",
    );
    check(
        &mut v,
        in_unit(l.epsilon_end),
        "learn.epsilon_end",
        "must lie in [0,1]",
    );
    check(
        &mut v,
        l.epsilon_end <= l.epsilon_start,
        "learn.epsilon_end",
        "must not exceed epsilon_start",
    );
    check(
        &mut v,
        l.epsilon_decay > 0.0 && l.epsilon_decay <= 1.0,
        "learn.epsilon_decay",
        "must lie in (0,1]",
    );
    check(&mut v, l.episodes >= 1, "learn.episodes", "must be >= 1");
    check(
        &mut v,
        l.max_occupancy_state >= 1,
        "learn.max_occupancy_state",
        "must be >= 1",
    );

    let w = &cfg.workload;
    check(
        &mut v,
        positive(w.packet_min_bits),
        "workload.packet_min",
        "must be > 0",
    );
    check(
        &mut v,
        w.packet_min_bits <= w.packet_max_bits && w.packet_max_bits.is_finite(),
        "workload.packet_max",
        "must be finite and >= packet_min",
    );
    check_class(&mut v, "workload.strict", &w.strict);
    check_class(&mut v, "workload.lenient", &w.lenient);

    let e = &cfg.energy;
    check(
        &mut v,
        e.tx_joules_per_bit >= 0.0 && e.tx_joules_per_bit.is_finite(),
        "energy.e_tx",
        "must be finite and >= 0",
    );
    check(
        &mut v,
        e.vm_power_watts >= 0.0 && e.vm_power_watts.is_finite(),
        "energy.p_vm",
        "must be finite and >= 0",
    );

    check(
        &mut v,
        cfg.device_count >= 1,
        "device_count",
        "must be >= 1",
    );
    check(
        &mut v,
        in_unit(cfg.class_mix),
        "class_mix",
        "must lie in [0,1]",
    );
    check(
        &mut v,
        positive(cfg.radio_rate_bps),
        "radio_rate",
        "must be > 0",
    );
    check(
        &mut v,
        positive(cfg.utilization_window_ms),
        "utilization_window",
        "must be > 0",
    );

    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Invalid(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(err: Error) -> Vec<String> {
        err.violations().iter().map(|v| v.field.clone()).collect()
    }

    #[test]
    fn default_is_valid_case_study() {
        let cfg = ScenarioConfig::default();
        assert!(validate_config(&cfg).is_ok());
        assert_eq!(cfg.vm.count, 5);
        assert_eq!(cfg.learn.alpha, 0.1);
        assert_eq!(cfg.learn.gamma, 0.9);
        assert_eq!(cfg.workload.packet_min_bits, 500_000.0);
        assert_eq!(cfg.workload.packet_max_bits, 4_000_000.0);
        assert_eq!(cfg.workload.strict, DelayClass::STRICT);
        assert_eq!(cfg.workload.lenient, DelayClass::LENIENT);
        assert_eq!(cfg.utilization_window_ms, 1500.0);
    }

    #[test]
    fn zero_alpha_is_valid() {
        let mut cfg = ScenarioConfig::default();
        cfg.learn.alpha = 0.0;
        assert!(validate_config(&cfg).is_ok());
    }

    #[test]
    fn zero_vms_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.vm.count = 0;
        assert_eq!(fields(validate_config(&cfg).unwrap_err()), ["vm.count"]);
    }

    #[test]
    fn all_violations_reported() {
        let mut cfg = ScenarioConfig::default();
        cfg.vm.count = 0;
        cfg.learn.gamma = 1.0;
        cfg.radio_rate_bps = f64::NAN;
        cfg.learn.epsilon_end = 1.0;
        cfg.learn.epsilon_start = 0.5;
        cfg.workload.strict.deadline_high_ms = 50.0;
        let got = fields(validate_config(&cfg).unwrap_err());
        assert_eq!(
            got,
            [
                "vm.count",
                "learn.gamma",
                "learn.epsilon_end",
                "workload.strict.deadline_high",
                "radio_rate"
            ]
        );
    }

    #[test]
    fn parse_overrides_and_comments() {
        let cfg = ScenarioConfig::from_kv_str(
            "# comment\n\nvm.count = 3\nlearn.alpha=0.5\nkpi_preset=VEHICULAR\n",
        )
        .unwrap();
        assert_eq!(cfg.vm.count, 3);
        assert_eq!(cfg.learn.alpha, 0.5);
        assert_eq!(cfg.kpi_preset, KpiPreset::Vehicular);
        assert_eq!(cfg.learn.gamma, 0.9);
    }

    #[test]
    fn unknown_and_malformed_keys_are_errors() {
        let err =
            ScenarioConfig::from_kv_str("vm.cuont=3\nlearn.alpha=abc\nnonsense\nseed=1\nseed=2\n")
                .unwrap_err();
        assert_eq!(fields(err), ["vm.cuont", "learn.alpha", "line 3", "seed"]);
    }

    #[test]
    fn every_key_round_trips() {
        let cfg = ScenarioConfig::default();
        let text = cfg.to_kv_string();
        assert_eq!(text.lines().count(), KEYS.len());
        assert_eq!(ScenarioConfig::from_kv_str(&text).unwrap(), cfg);
    }
}
