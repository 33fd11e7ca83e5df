//! Delay, resource-utilization, energy and throughput KPIs over evaluation runs.
//!
//! VM utilization is the busy time of each used VM (its members' bits divided
//! by capacity) over a fixed window, clipped at 1 and averaged over used VMs.
//! Energy is `e_tx * bits + p_vm * busy seconds` with model constants from
//! [`EnergyModel`](crate::config::EnergyModel). Throughput is bits served over
//! the episode makespan (the largest completion delay).

use std::io::Write;

use crate::config::ScenarioConfig;
use crate::engine::EpisodeOutcome;
use crate::error::{Error, Result};
use crate::model::KpiPreset;

fn busy_ms_per_vm(outcome: &EpisodeOutcome, cfg: &ScenarioConfig) -> Vec<f64> {
    outcome
        .clusters
        .iter()
        .map(|c| {
            let bits: f64 = c
                .member_ids
                .iter()
                .map(|&id| {
                    outcome
                        .batch
                        .iter()
                        .find(|d| d.id == id)
                        .expect("member from batch")
                        .packet_bits
                })
                .sum();
            bits / cfg.vm.capacity_bps * 1000.0
        })
        .collect()
}

/// Mean clipped busy fraction over used VMs; 0 when no VM is used.
pub fn vm_utilization(outcome: &EpisodeOutcome, cfg: &ScenarioConfig) -> f64 {
    let busy = busy_ms_per_vm(outcome, cfg);
    if busy.is_empty() {
        return 0.0;
    }
    let total: f64 = busy
        .iter()
        .map(|b| (b / cfg.utilization_window_ms).min(1.0))
        .sum();
    total / busy.len() as f64
}

/// KPI values of one evaluation replication.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplicationKpis {
    pub clusters_used: f64,
    pub vm_utilization: f64,
    pub delayed_devices: f64,
    pub response_time_ms: f64,
    pub energy_j: f64,
    pub throughput_bps: f64,
}

impl ReplicationKpis {
    pub fn of(outcome: &EpisodeOutcome, cfg: &ScenarioConfig) -> Self {
        let bits: f64 = outcome.batch.iter().map(|d| d.packet_bits).sum();
        let busy_s: f64 = busy_ms_per_vm(outcome, cfg).iter().sum::<f64>() / 1000.0;
        let n = outcome.delay_reports.len().max(1) as f64;
        let response = outcome
            .delay_reports
            .iter()
            .map(|r| r.total_ms)
            .sum::<f64>()
            / n;
        let makespan_ms = outcome
            .delay_reports
            .iter()
            .map(|r| r.total_ms)
            .fold(0.0, f64::max);
        let throughput = if makespan_ms > 0.0 {
            bits / (makespan_ms / 1000.0)
        } else {
            0.0
        };
        ReplicationKpis {
            clusters_used: outcome.clusters_used as f64,
            vm_utilization: vm_utilization(outcome, cfg),
            delayed_devices: outcome.delayed_count as f64,
            response_time_ms: response,
            energy_j: cfg.energy.tx_joules_per_bit * bits + cfg.energy.vm_power_watts * busy_s,
            throughput_bps: throughput,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KpiReport {
    pub mean_clusters_used: f64,
    pub mean_vm_utilization: f64,
    pub mean_delayed_devices: f64,
    pub mean_response_time_ms: f64,
    pub energy_j: f64,
    pub throughput_bps: f64,
    pub replication_count: usize,
    pub per_replication: Vec<ReplicationKpis>,
}

/// Arithmetic mean, summed in sorted order so the result does not depend on
/// the order of `values`.
pub fn order_free_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

impl KpiReport {
    pub fn from_rows(per_replication: Vec<ReplicationKpis>) -> Result<Self> {
        if per_replication.is_empty() {
            return Err(Error::EmptyInput);
        }
        let col = |f: fn(&ReplicationKpis) -> f64| order_free_mean(per_replication.iter().map(f));
        Ok(KpiReport {
            mean_clusters_used: col(|r| r.clusters_used),
            mean_vm_utilization: col(|r| r.vm_utilization),
            mean_delayed_devices: col(|r| r.delayed_devices),
            mean_response_time_ms: col(|r| r.response_time_ms),
            energy_j: col(|r| r.energy_j),
            throughput_bps: col(|r| r.throughput_bps),
            replication_count: per_replication.len(),
            per_replication,
        })
    }
}

pub fn aggregate(outcomes: &[EpisodeOutcome], cfg: &ScenarioConfig) -> Result<KpiReport> {
    KpiReport::from_rows(
        outcomes
            .iter()
            .map(|o| ReplicationKpis::of(o, cfg))
            .collect(),
    )
}

/// One KPI CSV row: a policy at one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub policy: String,
    pub device_count: usize,
    pub class_mix: f64,
    pub seed: u64,
    pub report: KpiReport,
}

/// KPI CSV. Columns the preset does not report are left out.
pub fn write_kpi_csv<W: Write>(
    mut out: W,
    points: &[SweepPoint],
    preset: KpiPreset,
) -> std::io::Result<()> {
    let mut header = vec![
        "policy",
        "device_count",
        "class_mix",
        "mean_clusters",
        "mean_util",
        "mean_delayed",
    ];
    if preset.reports_response_time() {
        header.push("mean_response_ms");
    }
    if preset.reports_energy() {
        header.push("energy_j");
    }
    if preset.reports_throughput() {
        header.push("throughput_bps");
    }
    header.extend(["reps", "seed"]);
    writeln!(out, "{}", header.join(","))?;

    for p in points {
        let r = &p.report;
        let mut row = vec![
            p.policy.clone(),
            p.device_count.to_string(),
            p.class_mix.to_string(),
            r.mean_clusters_used.to_string(),
            r.mean_vm_utilization.to_string(),
            r.mean_delayed_devices.to_string(),
        ];
        if preset.reports_response_time() {
            row.push(r.mean_response_time_ms.to_string());
        }
        if preset.reports_energy() {
            row.push(r.energy_j.to_string());
        }
        if preset.reports_throughput() {
            row.push(r.throughput_bps.to_string());
        }
        row.push(r.replication_count.to_string());
        row.push(p.seed.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Companion per-replication CSV for plotting.
pub fn write_replication_csv<W: Write>(mut out: W, points: &[SweepPoint]) -> std::io::Result<()> {
    writeln!(
        out,
        "policy,device_count,class_mix,replication,clusters_used,vm_util,delayed,response_ms,energy_j,throughput_bps"
    )?;
    for p in points {
        for (i, r) in p.report.per_replication.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                p.policy,
                p.device_count,
                p.class_mix,
                i,
                r.clusters_used,
                r.vm_utilization,
                r.delayed_devices,
                r.response_time_ms,
                r.energy_j,
                r.throughput_bps
            )?;
        }
    }
    Ok(())
}
