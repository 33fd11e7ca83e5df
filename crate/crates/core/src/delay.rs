//! Completion delay of a device inside a cluster.
//!
//! Members of a cluster share their VM under egalitarian processor sharing and
//! are all present from the start, so a packet of `s` bits in a cluster of `n`
//! finishes after `s * n / C`. The radio link adds `s / R`. Cluster-head relay
//! overhead is zero.

use crate::model::{Device, VmSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayReport {
    pub device_id: usize,
    pub transmission_ms: f64,
    pub processing_ms: f64,
    pub total_ms: f64,
    /// `total_ms > deadline`; meeting the deadline exactly is on time.
    pub delayed: bool,
}

pub fn device_delay(
    device: &Device,
    cluster_size: usize,
    vm: &VmSpec,
    radio_rate_bps: f64,
) -> DelayReport {
    debug_assert!(cluster_size >= 1);
    let transmission_ms = device.packet_bits / radio_rate_bps * 1000.0;
    let processing_ms = device.packet_bits * cluster_size as f64 / vm.capacity_bps * 1000.0;
    let total_ms = transmission_ms + processing_ms;
    DelayReport {
        device_id: device.id,
        transmission_ms,
        processing_ms,
        total_ms,
        delayed: total_ms > device.deadline_ms,
    }
}

pub fn cluster_delays<'a, I>(members: I, vm: &VmSpec, radio_rate_bps: f64) -> Vec<DelayReport>
where
    I: IntoIterator<Item = &'a Device>,
    I::IntoIter: ExactSizeIterator,
{
    let members = members.into_iter();
    let n = members.len();
    members
        .map(|d| device_delay(d, n, vm, radio_rate_bps))
        .collect()
}
