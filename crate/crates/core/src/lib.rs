//! Edge-IoT device clustering simulator.
//!
//! IoT devices, each with a packet and a completion deadline, arrive one at a
//! time and are grouped into clusters, one cluster per edge VM. A tabular
//! Q-learning agent decides for every arrival whether to grow the current
//! cluster or open a new one; a baseline spreads devices uniformly over the
//! VMs. Evaluation reports cluster count, VM utilization, delayed devices,
//! response time, energy and throughput.

pub mod commands;
pub mod config;
pub mod delay;
pub mod engine;
pub mod error;
pub mod kpi;
pub mod model;
pub mod policy;
pub mod workload;

pub use config::{validate_config, ScenarioConfig};
pub use engine::{
    evaluate, evaluate_with, run_episode, train, EpisodeOutcome, Execution, Policy, PolicyHandle,
};
pub use error::{Error, Result, Violation};
pub use kpi::{aggregate, vm_utilization, KpiReport};
pub use model::{
    ClassLabel, Cluster, DelayClass, Device, KpiPreset, LearnSpec, RewardTable, VmSpec,
};
pub use policy::{q_update, random_assign, reward, select_action, Action, AgentState, QTable};
pub use workload::{generate_batch, RngStream};
