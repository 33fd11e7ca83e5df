//! Oracles shared by the integration tests. They restate the model from its
//! formulas instead of calling into the crate's delay code.

#![allow(dead_code)]

use iotclust::{Device, ScenarioConfig};

/// Completion time of one device in a cluster of `k`, milliseconds.
pub fn total_ms(d: &Device, k: usize, capacity_bps: f64, radio_bps: f64) -> f64 {
    1000.0 * d.packet_bits / radio_bps + 1000.0 * d.packet_bits * k as f64 / capacity_bps
}

pub fn late(d: &Device, k: usize, cfg: &ScenarioConfig) -> bool {
    total_ms(d, k, cfg.vm.capacity_bps, cfg.radio_rate_bps) > d.deadline_ms
}

/// Calls `visit` with every partition of `0..n` into at most `max_blocks`
/// blocks, encoded as a restricted-growth string (block index per element).
pub fn for_each_partition(n: usize, max_blocks: usize, visit: &mut impl FnMut(&[usize], usize)) {
    fn rec(
        i: usize,
        used: usize,
        a: &mut Vec<usize>,
        max_blocks: usize,
        visit: &mut impl FnMut(&[usize], usize),
    ) {
        if i == a.len() {
            visit(a, used);
            return;
        }
        let limit = (used + 1).min(max_blocks);
        for b in 0..limit {
            a[i] = b;
            rec(i + 1, used.max(b + 1), a, max_blocks, visit);
        }
    }
    let mut a = vec![0; n];
    if n == 0 {
        visit(&a, 0);
    } else {
        rec(0, 0, &mut a, max_blocks, visit);
    }
}

/// Minimum (delayed devices, clusters) over all partitions into at most
/// `cfg.vm.count` clusters, compared lexicographically.
pub fn best_partition(batch: &[Device], cfg: &ScenarioConfig) -> (usize, usize) {
    let mut best = (usize::MAX, usize::MAX);
    for_each_partition(batch.len(), cfg.vm.count, &mut |blocks, used| {
        let mut sizes = vec![0usize; used];
        for &b in blocks {
            sizes[b] += 1;
        }
        let delayed = batch
            .iter()
            .zip(blocks)
            .filter(|(d, &b)| late(d, sizes[b], cfg))
            .count();
        best = best.min((delayed, used));
    });
    best
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Kolmogorov-Smirnov distance between a sample and Uniform(low, high).
pub fn ks_uniform(xs: &[f64], low: f64, high: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - low) / (high - low)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Number of set partitions of n elements into at most k blocks.
pub fn partition_count(n: usize, k: usize) -> usize {
    // Stirling numbers of the second kind, summed over 0..=k blocks.
    let mut s = vec![vec![0usize; n + 1]; n + 1];
    s[0][0] = 1;
    for i in 1..=n {
        for j in 1..=i {
            s[i][j] = j * s[i - 1][j] + s[i - 1][j - 1];
        }
    }
    (0..=k.min(n)).map(|j| s[n][j]).sum()
}
