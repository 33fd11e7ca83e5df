//! The two CLI operations as library calls. `main` only parses flags and maps
//! errors to exit codes, so everything here is reachable without the binary.
//!
//! Output files:
//!
//! | command | file | content |
//! |---|---|---|
//! | train | `qtable.csv` | Q-table snapshot |
//! | train | `training_trace.csv` | one row per episode |
//! | compare | `kpi.csv` | one row per (policy, sweep point) |
//! | compare | `replications.csv` | one row per replication |
//! | compare | `fig5a_clusters.csv`, `fig5b_utilization.csv`, `fig5c_delayed.csv` | plot data |
//! | compare | `run_meta.txt` | effective config and model constants |

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{validate_config, ScenarioConfig};
use crate::engine::{evaluate, train, Policy, Training};
use crate::error::{Error, Result, Violation};
use crate::kpi::{aggregate, write_kpi_csv, write_replication_csv, KpiReport, SweepPoint};
use crate::policy::QTable;

pub const DEFAULT_SWEEP: [usize; 6] = [10, 20, 30, 40, 50, 60];
pub const DEFAULT_REPS: usize = 100;

/// Picks one KPI column out of a report.
pub type Metric = fn(&KpiReport) -> f64;

/// Process exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 2,
        _ => 1,
    }
}

/// Loads the config file (or the defaults when no path is given) and applies
/// the seed override before validating.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    validate_config(&cfg)?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub struct TrainArgs {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

pub struct TrainSummary {
    pub final_epsilon: f64,
    pub last_500_mean_reward: f64,
    pub training: Training,
}

/// Trains one agent and writes `qtable.csv` and `training_trace.csv` into `out`.
pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary> {
    let cfg = load_config(args.config.as_deref(), args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let training = train(&cfg);

    let mut snap = create(&args.out, "qtable.csv")?;
    training.q.write_csv(&mut snap)?;
    snap.flush()?;
    let mut trace = create(&args.out, "training_trace.csv")?;
    training.write_trace_csv(&mut trace)?;
    trace.flush()?;

    Ok(TrainSummary {
        final_epsilon: training.final_epsilon(),
        last_500_mean_reward: training.tail_mean_reward(500),
        training,
    })
}

pub struct CompareArgs {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub sweep: Vec<usize>,
    pub reps: usize,
    pub out: PathBuf,
    /// Use this snapshot at every sweep point instead of training inline.
    pub qtable: Option<PathBuf>,
}

/// Mean KPIs of both policies at one (device_count, class_mix) point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub device_count: usize,
    pub class_mix: f64,
    pub rl: KpiReport,
    pub random: KpiReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// At the configured class mix, in sweep order.
    pub mixed: Vec<PointResult>,
    /// Every device STRICT.
    pub strict: Vec<PointResult>,
    /// Every device LENIENT.
    pub lenient: Vec<PointResult>,
}

fn check_sweep(sweep: &[usize], reps: usize) -> Result<()> {
    let mut v = Vec::new();
    if sweep.is_empty() {
        v.push(Violation::new(
            "sweep",
            "must list at least one device count",
        ));
    }
    if sweep.contains(&0) {
        v.push(Violation::new("sweep", "device counts must be >= 1"));
    }
    if reps == 0 {
        v.push(Violation::new("reps", "must be >= 1"));
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(v))
    }
}

/// Evaluates both policies at one point. Without a snapshot the agent is
/// trained on batches of exactly this size and mix.
pub fn run_point(
    cfg: &ScenarioConfig,
    device_count: usize,
    class_mix: f64,
    reps: usize,
    q: Option<&QTable>,
) -> Result<PointResult> {
    let mut c = *cfg;
    c.device_count = device_count;
    c.class_mix = class_mix;
    let table = match q {
        Some(q) => q.clone(),
        None => train(&c).q,
    };
    let rl = aggregate(&evaluate(&Policy::QLearning(table), &c, reps), &c)?;
    let random = aggregate(&evaluate(&Policy::Random, &c, reps), &c)?;
    Ok(PointResult {
        device_count,
        class_mix,
        rl,
        random,
    })
}

#[cfg(feature = "parallel")]
fn run_all(
    cfg: &ScenarioConfig,
    jobs: &[(usize, f64)],
    reps: usize,
    q: Option<&QTable>,
) -> Vec<Result<PointResult>> {
    use rayon::prelude::*;
    jobs.par_iter()
        .map(|&(n, mix)| run_point(cfg, n, mix, reps, q))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all(
    cfg: &ScenarioConfig,
    jobs: &[(usize, f64)],
    reps: usize,
    q: Option<&QTable>,
) -> Vec<Result<PointResult>> {
    jobs.iter()
        .map(|&(n, mix)| run_point(cfg, n, mix, reps, q))
        .collect()
}

/// Runs the three sweeps (configured mix, pure STRICT, pure LENIENT).
/// Points shared between sweeps are computed once.
pub fn compare(
    cfg: &ScenarioConfig,
    sweep: &[usize],
    reps: usize,
    q: Option<&QTable>,
) -> Result<Comparison> {
    check_sweep(sweep, reps)?;
    let mixes = [cfg.class_mix, 1.0, 0.0];
    let mut jobs: Vec<(usize, f64)> = Vec::new();
    for &mix in &mixes {
        for &n in sweep {
            if !jobs.iter().any(|&(m, x)| m == n && x == mix) {
                jobs.push((n, mix));
            }
        }
    }
    let mut done: BTreeMap<(usize, u64), PointResult> = BTreeMap::new();
    for (job, res) in jobs.iter().zip(run_all(cfg, &jobs, reps, q)) {
        done.insert((job.0, job.1.to_bits()), res?);
    }
    let series = |mix: f64| -> Vec<PointResult> {
        sweep
            .iter()
            .map(|&n| done[&(n, mix.to_bits())].clone())
            .collect()
    };
    Ok(Comparison {
        mixed: series(mixes[0]),
        strict: series(1.0),
        lenient: series(0.0),
    })
}

impl Comparison {
    /// KPI rows ordered by policy name, then sweep point.
    pub fn sweep_points(&self, seed: u64) -> Vec<SweepPoint> {
        let mut rows = Vec::with_capacity(2 * self.mixed.len());
        for policy in ["random", "rl"] {
            for p in &self.mixed {
                let report = if policy == "rl" { &p.rl } else { &p.random };
                rows.push(SweepPoint {
                    policy: policy.to_string(),
                    device_count: p.device_count,
                    class_mix: p.class_mix,
                    seed,
                    report: report.clone(),
                });
            }
        }
        rows
    }

    /// Plot data: one row per device count, one column per (policy, mix).
    pub fn write_plot_csv<W: Write>(&self, mut out: W, metric: Metric) -> std::io::Result<()> {
        writeln!(
            out,
            "device_count,rl,random,rl_strict,random_strict,rl_lenient,random_lenient"
        )?;
        for ((m, s), l) in self.mixed.iter().zip(&self.strict).zip(&self.lenient) {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                m.device_count,
                metric(&m.rl),
                metric(&m.random),
                metric(&s.rl),
                metric(&s.random),
                metric(&l.rl),
                metric(&l.random)
            )?;
        }
        Ok(())
    }
}

fn write_meta<W: Write>(
    mut out: W,
    cfg: &ScenarioConfig,
    args: &CompareArgs,
) -> std::io::Result<()> {
    writeln!(
        out,
        "# energy model constants (not measured): energy.e_tx J/bit, energy.p_vm W"
    )?;
    writeln!(out, "# reps={}", args.reps)?;
    let sweep: Vec<String> = args.sweep.iter().map(|n| n.to_string()).collect();
    writeln!(out, "# sweep={}", sweep.join(","))?;
    match &args.qtable {
        Some(_) => writeln!(out, "# agent=snapshot")?,
        None => writeln!(out, "# agent=trained per sweep point")?,
    }
    out.write_all(cfg.to_kv_string().as_bytes())
}

fn read_snapshot(path: &Path) -> Result<QTable> {
    let file = File::open(path).map_err(|e| {
        Error::Invalid(vec![Violation::new(
            "qtable",
            format!("cannot read {}: {e}", path.display()),
        )])
    })?;
    QTable::read_csv(BufReader::new(file))
}

/// Runs the comparison and writes every output file into `args.out`.
pub fn cmd_compare(args: &CompareArgs) -> Result<Comparison> {
    let cfg = load_config(args.config.as_deref(), args.seed)?;
    check_sweep(&args.sweep, args.reps)?;
    let q = args.qtable.as_deref().map(read_snapshot).transpose()?;
    let cmp = compare(&cfg, &args.sweep, args.reps, q.as_ref())?;

    std::fs::create_dir_all(&args.out)?;
    let points = cmp.sweep_points(cfg.seed);
    let mut f = create(&args.out, "kpi.csv")?;
    write_kpi_csv(&mut f, &points, cfg.kpi_preset)?;
    f.flush()?;
    let mut f = create(&args.out, "replications.csv")?;
    write_replication_csv(&mut f, &points)?;
    f.flush()?;
    let plots: [(&str, Metric); 3] = [
        ("fig5a_clusters.csv", |r| r.mean_clusters_used),
        ("fig5b_utilization.csv", |r| r.mean_vm_utilization),
        ("fig5c_delayed.csv", |r| r.mean_delayed_devices),
    ];
    for (name, metric) in plots {
        let mut f = create(&args.out, name)?;
        cmp.write_plot_csv(&mut f, metric)?;
        f.flush()?;
    }
    let mut f = create(&args.out, "run_meta.txt")?;
    write_meta(&mut f, &cfg, args)?;
    f.flush()?;
    Ok(cmp)
}
