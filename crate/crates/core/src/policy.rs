//! Clustering decision makers: the tabular Q-learning agent that grows or
//! closes the cluster currently being filled, and the uniform random baseline.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ClassLabel, Cluster, Device, RewardTable, VmSpec};
use crate::workload::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    /// Add the candidate to the cluster currently being filled.
    Increment,
    /// Seal the current cluster and open a fresh one, on the next free VM,
    /// with the candidate as its first member.
    Decrement,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Increment, Action::Decrement];

    fn index(self) -> usize {
        match self {
            Action::Increment => 0,
            Action::Decrement => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Increment => "INCREMENT",
            Action::Decrement => "DECREMENT",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "INCREMENT" => Ok(Action::Increment),
            "DECREMENT" => Ok(Action::Decrement),
            other => Err(format!("unknown action `{other}`")),
        }
    }
}

/// What the agent sees before placing a candidate device.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AgentState {
    /// Members of the cluster currently being filled, saturated at the table's
    /// occupancy cap. Zero only before the first cluster is opened.
    pub occupancy: usize,
    pub candidate_class: ClassLabel,
    /// VMs not yet bound to a cluster.
    pub vms_remaining: usize,
    /// Arrivals still to come after the candidate, saturated at the table's
    /// horizon cap. Always 0 when the cap is 0.
    pub devices_remaining: usize,
}

const SNAPSHOT_HEADER: &str = "occupancy,class,vms_remaining,devices_remaining,action,q_value";

/// Dense state-action value table. Unvisited entries are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    max_occupancy: usize,
    vm_count: usize,
    max_remaining: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(max_occupancy: usize, vm_count: usize, max_remaining: usize) -> Self {
        let len = (max_occupancy + 1)
            * ClassLabel::ALL.len()
            * (vm_count + 1)
            * (max_remaining + 1)
            * Action::ALL.len();
        QTable {
            max_occupancy,
            vm_count,
            max_remaining,
            values: vec![0.0; len],
        }
    }

    pub fn max_occupancy(&self) -> usize {
        self.max_occupancy
    }

    pub fn vm_count(&self) -> usize {
        self.vm_count
    }

    pub fn max_remaining(&self) -> usize {
        self.max_remaining
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Builds the state from raw counts, applying the saturation caps.
    pub fn state(
        &self,
        occupancy: usize,
        candidate_class: ClassLabel,
        vms_remaining: usize,
        devices_remaining: usize,
    ) -> AgentState {
        AgentState {
            occupancy: occupancy.min(self.max_occupancy),
            candidate_class,
            vms_remaining: vms_remaining.min(self.vm_count),
            devices_remaining: devices_remaining.min(self.max_remaining),
        }
    }

    fn slot(&self, s: &AgentState, a: Action) -> usize {
        assert!(s.occupancy <= self.max_occupancy, "occupancy outside table");
        assert!(
            s.vms_remaining <= self.vm_count,
            "vms_remaining outside table"
        );
        assert!(
            s.devices_remaining <= self.max_remaining,
            "devices_remaining outside table"
        );
        let cell =
            (s.occupancy * 2 + s.candidate_class.index()) * (self.vm_count + 1) + s.vms_remaining;
        (cell * (self.max_remaining + 1) + s.devices_remaining) * 2 + a.index()
    }

    pub fn get(&self, s: &AgentState, a: Action) -> f64 {
        self.values[self.slot(s, a)]
    }

    pub fn set(&mut self, s: &AgentState, a: Action, value: f64) {
        let i = self.slot(s, a);
        self.values[i] = value;
    }

    pub fn max_value(&self, s: &AgentState) -> f64 {
        self.get(s, Action::Increment)
            .max(self.get(s, Action::Decrement))
    }

    /// Argmax over actions; ties go to `Increment`.
    pub fn greedy(&self, s: &AgentState) -> Action {
        if self.get(s, Action::Increment) >= self.get(s, Action::Decrement) {
            Action::Increment
        } else {
            Action::Decrement
        }
    }

    /// Every `(state, action)` pair in snapshot order.
    pub fn entries(&self) -> impl Iterator<Item = (AgentState, Action, f64)> + '_ {
        (0..=self.max_occupancy).flat_map(move |occupancy| {
            ClassLabel::ALL
                .into_iter()
                .flat_map(move |candidate_class| {
                    (0..=self.vm_count).flat_map(move |vms_remaining| {
                        (0..=self.max_remaining).flat_map(move |devices_remaining| {
                            let s = AgentState {
                                occupancy,
                                candidate_class,
                                vms_remaining,
                                devices_remaining,
                            };
                            Action::ALL
                                .into_iter()
                                .map(move |a| (s, a, self.get(&s, a)))
                        })
                    })
                })
        })
    }

    /// CSV snapshot: `occupancy,class,vms_remaining,devices_remaining,action,q_value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SNAPSHOT_HEADER}")?;
        for (s, a, q) in self.entries() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.occupancy, s.candidate_class, s.vms_remaining, s.devices_remaining, a, q
            )?;
        }
        Ok(())
    }

    /// Reads a snapshot written by [`QTable::write_csv`]. Table dimensions are
    /// taken from the largest occupancy, vms_remaining and devices_remaining present.
    pub fn read_csv<R: BufRead>(input: R) -> Result<QTable> {
        let mut rows = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.trim() != SNAPSHOT_HEADER {
                    return Err(Error::Snapshot {
                        line: 1,
                        reason: "unexpected header".into(),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Snapshot {
                line: i + 1,
                reason,
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad(format!("expected 6 columns, got {}", cols.len())));
            }
            let occupancy: usize = cols[0]
                .parse()
                .map_err(|e| bad(format!("occupancy: {e}")))?;
            let class: ClassLabel = cols[1].parse().map_err(bad)?;
            let vms: usize = cols[2]
                .parse()
                .map_err(|e| bad(format!("vms_remaining: {e}")))?;
            let remaining: usize = cols[3]
                .parse()
                .map_err(|e| bad(format!("devices_remaining: {e}")))?;
            let action: Action = cols[4].parse().map_err(bad)?;
            let q: f64 = cols[5].parse().map_err(|e| bad(format!("q_value: {e}")))?;
            if !q.is_finite() {
                return Err(bad("q_value must be finite".into()));
            }
            rows.push((occupancy, class, vms, remaining, action, q));
        }
        let max_occupancy = rows.iter().map(|r| r.0).max().unwrap_or(0);
        let vm_count = rows.iter().map(|r| r.2).max().unwrap_or(0);
        let max_remaining = rows.iter().map(|r| r.3).max().unwrap_or(0);
        let mut table = QTable::new(max_occupancy, vm_count, max_remaining);
        for (occupancy, candidate_class, vms_remaining, devices_remaining, action, q) in rows {
            let s = AgentState {
                occupancy,
                candidate_class,
                vms_remaining,
                devices_remaining,
            };
            table.set(&s, action, q);
        }
        Ok(table)
    }
}

/// One-step Q-learning update of `Q(s, a)`; `next` is `None` on the terminal
/// step. Returns the new value.
pub fn q_update(
    q: &mut QTable,
    s: &AgentState,
    a: Action,
    reward: i64,
    next: Option<&AgentState>,
    alpha: f64,
    gamma: f64,
) -> f64 {
    let bootstrap = next.map_or(0.0, |n| gamma * q.max_value(n));
    let target = reward as f64 + bootstrap;
    let old = q.get(s, a);
    let new = old + alpha * (target - old);
    q.set(s, a, new);
    new
}

pub fn reward(action: Action, delayed_occurred: bool, table: &RewardTable) -> i64 {
    match (action, delayed_occurred) {
        (Action::Increment, false) => table.inc_ok,
        (Action::Decrement, false) => table.dec_ok,
        (Action::Increment, true) => table.inc_delayed,
        (Action::Decrement, true) => table.dec_delayed,
    }
}

/// Epsilon-greedy choice. No random draw is consumed when `epsilon == 0`.
pub fn select_action(q: &QTable, s: &AgentState, epsilon: f64, rng: &mut RngStream) -> Action {
    if epsilon > 0.0 && rng.bernoulli(epsilon) {
        Action::ALL[rng.index(Action::ALL.len())]
    } else {
        q.greedy(s)
    }
}

/// Spreads devices independently and uniformly over the VMs. Returns one
/// cluster per VM, in VM order; empty clusters are unused VMs.
pub fn random_assign(devices: &[Device], vm: &VmSpec, rng: &mut RngStream) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = (0..vm.count).map(Cluster::new).collect();
    for d in devices {
        clusters[rng.index(vm.count)].member_ids.push(d.id);
    }
    clusters
}
