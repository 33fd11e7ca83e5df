//! Episode runner, training loop and evaluation replications.
//!
//! An episode streams a batch through a policy in id order. For the Q agent
//! every candidate is either added to the cluster being filled or starts a
//! new cluster on the next free VM. Once all VMs are bound, a `Decrement` is
//! coerced into an increment on the least-loaded cluster and counted in
//! `forced_increments`.
//!
//! The per-step reward uses the provisional cluster size at assignment time;
//! the reported delays use each cluster's final size.

use std::collections::HashSet;
use std::io::Write;

use crate::config::ScenarioConfig;
use crate::delay::{cluster_delays, device_delay, DelayReport};
use crate::model::{Cluster, Device, VmSpec};
use crate::policy::{q_update, random_assign, reward, select_action, Action, AgentState, QTable};
use crate::workload::{generate_batch, RngStream};

/// Evaluation streams start here so they never collide with training episodes.
pub const EVAL_STREAM_BASE: u64 = 1 << 32;

/// A frozen, owned policy used for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    QLearning(QTable),
    Random,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::QLearning(_) => "rl",
            Policy::Random => "random",
        }
    }

    pub fn greedy(&self) -> PolicyHandle<'_> {
        match self {
            Policy::QLearning(q) => PolicyHandle::Greedy(q),
            Policy::Random => PolicyHandle::Random,
        }
    }
}

/// How a single episode consults (and possibly trains) a policy.
pub enum PolicyHandle<'a> {
    /// Epsilon-greedy with a Q-update after every step.
    Learning {
        q: &'a mut QTable,
        epsilon: f64,
    },
    /// Pure argmax, table untouched.
    Greedy(&'a QTable),
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub device_id: usize,
    pub state: AgentState,
    /// The action the agent chose.
    pub action: Action,
    /// The action that was carried out; differs from `action` only when forced.
    pub executed: Action,
    pub reward: i64,
    /// Whether this assignment made some member of the receiving cluster late,
    /// judged at the cluster's provisional size.
    pub delayed: bool,
    pub forced: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeOutcome {
    /// The devices this pass assigned, in arrival order.
    pub batch: Vec<Device>,
    /// Non-empty clusters in VM order.
    pub clusters: Vec<Cluster>,
    /// Final delays, in batch order.
    pub delay_reports: Vec<DelayReport>,
    pub clusters_used: usize,
    pub delayed_count: usize,
    pub forced_increments: usize,
    pub total_reward: i64,
    /// Empty for the random baseline.
    pub steps: Vec<StepRecord>,
}

impl EpisodeOutcome {
    fn from_clusters(
        batch: &[Device],
        clusters: Vec<Cluster>,
        vm: &VmSpec,
        radio_rate_bps: f64,
    ) -> Self {
        let clusters: Vec<Cluster> = clusters.into_iter().filter(|c| !c.is_empty()).collect();
        let position = |id: usize| {
            batch
                .iter()
                .position(|d| d.id == id)
                .expect("member from batch")
        };
        let mut reports: Vec<Option<DelayReport>> = vec![None; batch.len()];
        for c in &clusters {
            let idx: Vec<usize> = c.member_ids.iter().map(|&id| position(id)).collect();
            let members = idx.iter().map(|&i| &batch[i]);
            for (i, r) in idx.iter().zip(cluster_delays(members, vm, radio_rate_bps)) {
                reports[*i] = Some(r);
            }
        }
        let delay_reports: Vec<DelayReport> = reports
            .into_iter()
            .map(|r| r.expect("every device is placed"))
            .collect();
        EpisodeOutcome {
            batch: batch.to_vec(),
            clusters_used: clusters.len(),
            delayed_count: delay_reports.iter().filter(|r| r.delayed).count(),
            clusters,
            delay_reports,
            forced_increments: 0,
            total_reward: 0,
            steps: Vec::new(),
        }
    }

    /// Checks the partition and counting invariants against the batch it came from.
    pub fn verify(&self, batch: &[Device], vm: &VmSpec) -> Result<(), String> {
        let mut seen = HashSet::new();
        for c in &self.clusters {
            if c.is_empty() {
                return Err(format!("empty cluster on vm {}", c.vm_index));
            }
            if c.vm_index >= vm.count {
                return Err(format!("vm index {} out of range", c.vm_index));
            }
            for &id in &c.member_ids {
                if !seen.insert(id) {
                    return Err(format!("device {id} placed twice"));
                }
            }
        }
        let vms: HashSet<usize> = self.clusters.iter().map(|c| c.vm_index).collect();
        if vms.len() != self.clusters.len() {
            return Err("a vm hosts two clusters".into());
        }
        let expected: HashSet<usize> = batch.iter().map(|d| d.id).collect();
        if seen != expected {
            return Err("clusters do not partition the batch".into());
        }
        if self.clusters_used != self.clusters.len() || self.clusters_used > vm.count {
            return Err(format!("clusters_used {} inconsistent", self.clusters_used));
        }
        let delayed = self.delay_reports.iter().filter(|r| r.delayed).count();
        if delayed != self.delayed_count || self.delay_reports.len() != batch.len() {
            return Err("delayed_count inconsistent".into());
        }
        if !self.steps.is_empty() {
            let total: i64 = self.steps.iter().map(|s| s.reward).sum();
            if total != self.total_reward {
                return Err("total_reward differs from the step log".into());
            }
            if self.steps.iter().filter(|s| s.forced).count() != self.forced_increments {
                return Err("forced_increments differs from the step log".into());
            }
        }
        Ok(())
    }

    /// Writes the step log:
    /// `step,device_id,state_occ,state_class,state_vms,state_remaining,action,reward,delayed,forced`.
    pub fn write_step_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "step,device_id,state_occ,state_class,state_vms,state_remaining,action,reward,delayed,forced"
        )?;
        for s in &self.steps {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.step,
                s.device_id,
                s.state.occupancy,
                s.state.candidate_class,
                s.state.vms_remaining,
                s.state.devices_remaining,
                s.action,
                s.reward,
                s.delayed,
                s.forced
            )?;
        }
        Ok(())
    }
}

/// True if adding `candidate` to a cluster whose current members are
/// `members` makes anyone late who was not late before.
fn assignment_causes_delay(
    members: &[&Device],
    candidate: &Device,
    vm: &VmSpec,
    radio: f64,
) -> bool {
    let n = members.len();
    device_delay(candidate, n + 1, vm, radio).delayed
        || members.iter().any(|m| {
            !device_delay(m, n, vm, radio).delayed && device_delay(m, n + 1, vm, radio).delayed
        })
}

fn run_agent(
    batch: &[Device],
    mut handle: PolicyHandle<'_>,
    cfg: &ScenarioConfig,
    rng: &mut RngStream,
) -> EpisodeOutcome {
    let vm = &cfg.vm;
    let radio = cfg.radio_rate_bps;
    // members as batch positions
    let mut clusters: Vec<Vec<usize>> = Vec::with_capacity(vm.count);
    let mut current: Option<usize> = None;
    let mut steps = Vec::with_capacity(batch.len());

    for (step, dev) in batch.iter().enumerate() {
        let table: &QTable = match &handle {
            PolicyHandle::Learning { q, .. } => q,
            PolicyHandle::Greedy(q) => q,
            PolicyHandle::Random => unreachable!("random policy has no agent"),
        };
        let occupancy = current.map_or(0, |c| clusters[c].len());
        let vms_remaining = vm.count - clusters.len();
        let state = table.state(occupancy, dev.class, vms_remaining, batch.len() - step - 1);
        let action = match &handle {
            PolicyHandle::Learning { epsilon, .. } => select_action(table, &state, *epsilon, rng),
            _ => table.greedy(&state),
        };

        let (executed, target, forced) = match (current, action) {
            (Some(c), Action::Increment) => (Action::Increment, Some(c), false),
            (Some(_), Action::Decrement) if vms_remaining == 0 => {
                let least = (0..clusters.len()).min_by_key(|&i| (clusters[i].len(), i));
                (Action::Increment, least, true)
            }
            (_, a) => (a, None, false),
        };
        let target = target.unwrap_or_else(|| {
            clusters.push(Vec::new());
            current = Some(clusters.len() - 1);
            clusters.len() - 1
        });

        let members: Vec<&Device> = clusters[target].iter().map(|&i| &batch[i]).collect();
        let delayed = assignment_causes_delay(&members, dev, vm, radio);
        clusters[target].push(step);

        let r = reward(executed, delayed, &cfg.rewards);
        if let PolicyHandle::Learning { q, .. } = &mut handle {
            let next = batch.get(step + 1).map(|nd| {
                let occ = current.map_or(0, |c| clusters[c].len());
                q.state(
                    occ,
                    nd.class,
                    vm.count - clusters.len(),
                    batch.len() - step - 2,
                )
            });
            q_update(
                q,
                &state,
                action,
                r,
                next.as_ref(),
                cfg.learn.alpha,
                cfg.learn.gamma,
            );
        }

        steps.push(StepRecord {
            step,
            device_id: dev.id,
            state,
            action,
            executed,
            reward: r,
            delayed,
            forced,
        });
    }

    let clusters = clusters
        .into_iter()
        .enumerate()
        .map(|(vm_index, members)| Cluster {
            vm_index,
            member_ids: members.into_iter().map(|i| batch[i].id).collect(),
        })
        .collect();
    let mut outcome = EpisodeOutcome::from_clusters(batch, clusters, vm, radio);
    outcome.total_reward = steps.iter().map(|s| s.reward).sum();
    outcome.forced_increments = steps.iter().filter(|s| s.forced).count();
    outcome.steps = steps;
    outcome
}

/// Runs one assignment pass over `batch`.
pub fn run_episode(
    batch: &[Device],
    handle: PolicyHandle<'_>,
    cfg: &ScenarioConfig,
    rng: &mut RngStream,
) -> EpisodeOutcome {
    match handle {
        PolicyHandle::Random => {
            let clusters = random_assign(batch, &cfg.vm, rng);
            EpisodeOutcome::from_clusters(batch, clusters, &cfg.vm, cfg.radio_rate_bps)
        }
        agent => run_agent(batch, agent, cfg, rng),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub episode: usize,
    pub total_reward: i64,
    pub clusters_used: usize,
    pub delayed_count: usize,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Training {
    pub q: QTable,
    pub trace: Vec<TraceRow>,
}

impl Training {
    /// Mean episode reward over the trailing `window` episodes.
    pub fn tail_mean_reward(&self, window: usize) -> f64 {
        let tail = &self.trace[self.trace.len().saturating_sub(window)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|r| r.total_reward as f64).sum::<f64>() / tail.len() as f64
    }

    pub fn final_epsilon(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.epsilon)
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "episode,total_reward,clusters_used,delayed_count,epsilon"
        )?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.episode, r.total_reward, r.clusters_used, r.delayed_count, r.epsilon
            )?;
        }
        Ok(())
    }
}

/// Trains a fresh agent for `cfg.learn.episodes` episodes. Episode `e` draws
/// its batch and exploration from stream `e` of the seed.
pub fn train(cfg: &ScenarioConfig) -> Training {
    let mut q = QTable::new(
        cfg.learn.max_occupancy_state,
        cfg.vm.count,
        cfg.learn.max_remaining_state,
    );
    let mut trace = Vec::with_capacity(cfg.learn.episodes);
    for episode in 0..cfg.learn.episodes {
        let mut rng = RngStream::new(cfg.seed, episode as u64);
        let batch = generate_batch(cfg, &mut rng);
        let epsilon = cfg.learn.epsilon_at(episode);
        let out = run_episode(
            &batch,
            PolicyHandle::Learning { q: &mut q, epsilon },
            cfg,
            &mut rng,
        );
        trace.push(TraceRow {
            episode,
            total_reward: out.total_reward,
            clusters_used: out.clusters_used,
            delayed_count: out.delayed_count,
            epsilon,
        });
    }
    Training { q, trace }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

fn replication(policy: &Policy, cfg: &ScenarioConfig, r: usize) -> EpisodeOutcome {
    let mut rng = RngStream::new(cfg.seed, EVAL_STREAM_BASE + r as u64);
    let batch = generate_batch(cfg, &mut rng);
    run_episode(&batch, policy.greedy(), cfg, &mut rng)
}

/// Greedy evaluation over independent replications. Output is in replication
/// order regardless of `exec`.
pub fn evaluate_with(
    policy: &Policy,
    cfg: &ScenarioConfig,
    replications: usize,
    exec: Execution,
) -> Vec<EpisodeOutcome> {
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..replications)
                .into_par_iter()
                .map(|r| replication(policy, cfg, r))
                .collect()
        }
        _ => (0..replications)
            .map(|r| replication(policy, cfg, r))
            .collect(),
    }
}

pub fn evaluate(policy: &Policy, cfg: &ScenarioConfig, replications: usize) -> Vec<EpisodeOutcome> {
    evaluate_with(policy, cfg, replications, Execution::Parallel)
}
