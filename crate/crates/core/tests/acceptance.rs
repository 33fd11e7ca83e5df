//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with `cargo test --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use iotclust::commands::{cmd_compare, compare, CompareArgs, Comparison, DEFAULT_SWEEP};
use iotclust::engine::EVAL_STREAM_BASE;
use iotclust::workload::{sample_deadline, sample_packet_size};
use iotclust::{
    generate_batch, q_update, reward, run_episode, train, vm_utilization, Action, ClassLabel,
    DelayClass, KpiPreset, PolicyHandle, QTable, RewardTable, RngStream, ScenarioConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Runs one criterion, enforcing its wall-clock budget.
fn run(id: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = budget.is_none_or(|b| took <= b);
    let pass = out.pass && in_time;
    let budget_note = budget.map_or(String::new(), |b| format!(", budget {:.0?}", b));
    println!(
        "{} criterion {id}: {} [{:.2?}{budget_note}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took
    );
    pass
}

fn c1_reward_table() -> Outcome {
    let t = RewardTable::default();
    let cells = [
        (Action::Increment, false, 5),
        (Action::Decrement, false, -1),
        (Action::Increment, true, -10),
        (Action::Decrement, true, 5),
    ];
    let bad: Vec<_> = cells
        .iter()
        .filter(|&&(a, d, want)| reward(a, d, &t) != want)
        .collect();
    check(
        bad.is_empty(),
        format!("4 reward cells, {} mismatched", bad.len()),
    )
}

fn c2_q_update() -> Outcome {
    let mut rng = RngStream::new(2024, 7);
    let mut q = QTable::new(8, 5, 60);
    let mut worst_rel = 0.0f64;
    let mut worst_contraction = 0.0f64;
    let classes = ClassLabel::ALL;
    for _ in 0..10_000 {
        let mut state = || {
            q.state(
                rng.index(12),
                classes[rng.index(2)],
                rng.index(6),
                rng.index(70),
            )
        };
        let s = state();
        let s_next = state();
        let a = Action::ALL[rng.index(2)];
        for (st, act) in [
            (s, Action::Increment),
            (s, Action::Decrement),
            (s_next, Action::Increment),
            (s_next, Action::Decrement),
        ] {
            q.set(&st, act, rng.uniform(-100.0, 100.0));
        }
        let r = rng.index(21) as i64 - 10;
        let alpha = rng.unit();
        let gamma = rng.unit();
        let terminal = rng.bernoulli(0.5);

        let old = q.get(&s, a);
        let max_next = q
            .get(&s_next, Action::Increment)
            .max(q.get(&s_next, Action::Decrement));
        let target = if terminal {
            r as f64
        } else {
            r as f64 + gamma * max_next
        };
        let expected = old + alpha * (target - old);
        let next = (!terminal).then_some(&s_next);
        let new = q_update(&mut q, &s, a, r, next, alpha, gamma);

        let scale = expected.abs().max(1e-300);
        worst_rel = worst_rel.max((new - expected).abs() / scale);
        // Contraction, to a few ULPs of the quantities involved.
        let lhs = (new - target).abs();
        let rhs = (1.0 - alpha) * (old - target).abs();
        let ulp = f64::EPSILON * old.abs().max(target.abs()).max(1.0);
        worst_contraction = worst_contraction.max((lhs - rhs).abs() / ulp);
    }
    check(
        worst_rel <= 1e-12 && worst_contraction <= 8.0,
        format!("10^4 updates, max rel err {worst_rel:.2e}, max contraction gap {worst_contraction:.1} ulp"),
    )
}

fn c3_distributions() -> Outcome {
    let cfg = ScenarioConfig::default();
    let n = 100_000;
    let mut rng = RngStream::new(cfg.seed, 99);
    let packets: Vec<f64> = (0..n)
        .map(|_| sample_packet_size(&mut rng, &cfg.workload))
        .collect();
    let strict: Vec<f64> = (0..n)
        .map(|_| sample_deadline(&mut rng, &DelayClass::STRICT))
        .collect();
    let lenient: Vec<f64> = (0..n)
        .map(|_| sample_deadline(&mut rng, &DelayClass::LENIENT))
        .collect();
    let in_bounds = packets.iter().all(|&p| (500e3..=4e6).contains(&p));
    let (mp, ms, ml) = (
        common::mean(&packets),
        common::mean(&strict),
        common::mean(&lenient),
    );
    let within = |x: f64, want: f64| (x - want).abs() <= 0.01 * want;
    check(
        in_bounds && within(mp, 2.25e6) && within(ms, 500.0) && within(ml, 1000.0),
        format!(
            "packets in bounds={in_bounds}, mean {mp:.0} b, STRICT {ms:.2} ms, LENIENT {ml:.2} ms"
        ),
    )
}

fn c4_clusters(cmp: &Comparison) -> Outcome {
    let mut all_le = true;
    let mut strict = 0;
    let mut cells = Vec::new();
    for p in &cmp.mixed {
        let (rl, rnd) = (p.rl.mean_clusters_used, p.random.mean_clusters_used);
        all_le &= rl <= rnd;
        strict += usize::from(rl < rnd);
        cells.push(format!("{}:{rl:.2}/{rnd:.2}", p.device_count));
    }
    check(
        all_le && strict >= 4,
        format!(
            "rl/random clusters {}; strictly fewer at {strict}/6",
            cells.join(" ")
        ),
    )
}

fn c5_utilization(cmp: &Comparison) -> Outcome {
    let util_ok = cmp
        .mixed
        .iter()
        .all(|p| p.rl.mean_vm_utilization > p.random.mean_vm_utilization);
    let vm_ok = cmp.strict.iter().zip(&cmp.lenient).all(|(s, l)| {
        s.rl.mean_clusters_used >= l.rl.mean_clusters_used
            && s.random.mean_clusters_used >= l.random.mean_clusters_used
    });
    let util: Vec<String> = cmp
        .mixed
        .iter()
        .map(|p| {
            format!(
                "{}:{:.4}/{:.4}",
                p.device_count, p.rl.mean_vm_utilization, p.random.mean_vm_utilization
            )
        })
        .collect();
    let vms: Vec<String> = cmp
        .strict
        .iter()
        .zip(&cmp.lenient)
        .map(|(s, l)| {
            format!(
                "{}:{:.2}/{:.2}",
                s.device_count, s.rl.mean_clusters_used, l.rl.mean_clusters_used
            )
        })
        .collect();
    check(
        util_ok && vm_ok,
        format!(
            "rl/random util {}; rl STRICT/LENIENT VMs {}",
            util.join(" "),
            vms.join(" ")
        ),
    )
}

fn c6_delayed(cmp: &Comparison) -> Outcome {
    let ok = cmp.strict.iter().zip(&cmp.lenient).all(|(s, l)| {
        s.rl.mean_delayed_devices >= l.rl.mean_delayed_devices
            && s.random.mean_delayed_devices >= l.random.mean_delayed_devices
    });
    let cells: Vec<String> = cmp
        .strict
        .iter()
        .zip(&cmp.lenient)
        .map(|(s, l)| {
            format!(
                "{}:rl {:.2}/{:.2} rnd {:.2}/{:.2}",
                s.device_count,
                s.rl.mean_delayed_devices,
                l.rl.mean_delayed_devices,
                s.random.mean_delayed_devices,
                l.random.mean_delayed_devices
            )
        })
        .collect();
    check(ok, format!("STRICT/LENIENT delayed {}", cells.join(" ")))
}

fn c7_oracle() -> Outcome {
    let base = ScenarioConfig::default();
    let agents: Vec<QTable> = (1..=6)
        .map(|n| {
            let mut cfg = base;
            cfg.device_count = n;
            train(&cfg).q
        })
        .collect();
    let mut within = 0;
    let trials = 200;
    for i in 0..trials {
        let mut rng = RngStream::new(base.seed, EVAL_STREAM_BASE * 3 + i as u64);
        let mut cfg = base;
        cfg.device_count = 1 + rng.index(6);
        let batch = generate_batch(&cfg, &mut rng);
        let (_, optimum) = common::best_partition(&batch, &cfg);
        let out = run_episode(
            &batch,
            PolicyHandle::Greedy(&agents[cfg.device_count - 1]),
            &cfg,
            &mut rng,
        );
        within += usize::from(out.clusters_used <= optimum + 1);
    }
    let share = within as f64 / trials as f64;
    check(
        share >= 0.8,
        format!(
            "{within}/{trials} batches within +1 of the optimum ({:.0}%)",
            100.0 * share
        ),
    )
}

fn c8_determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let args = CompareArgs {
            config: None,
            seed: Some(11),
            sweep: vec![10, 30],
            reps: 100,
            out: d.path().to_path_buf(),
            qtable: None,
        };
        if let Err(e) = cmd_compare(&args) {
            return check(false, format!("compare failed: {e}"));
        }
    }
    let names = [
        "kpi.csv",
        "replications.csv",
        "fig5a_clusters.csv",
        "fig5b_utilization.csv",
        "fig5c_delayed.csv",
        "run_meta.txt",
    ];
    let differing: Vec<&str> = names
        .iter()
        .copied()
        .filter(|n| {
            std::fs::read(dirs[0].path().join(n)).ok() != std::fs::read(dirs[1].path().join(n)).ok()
        })
        .collect();
    check(
        differing.is_empty(),
        format!(
            "{} output files compared, differing: {:?}",
            names.len(),
            differing
        ),
    )
}

fn random_config(rng: &mut RngStream) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.vm.count = 1 + rng.index(8);
    cfg.vm.capacity_bps = 10f64.powf(rng.uniform(5.0, 10.0));
    cfg.radio_rate_bps = 10f64.powf(rng.uniform(5.0, 9.0));
    cfg.device_count = 1 + rng.index(40);
    cfg.class_mix = rng.unit();
    cfg.utilization_window_ms = rng.uniform(1.0, 5000.0);
    cfg.learn.max_occupancy_state = 1 + rng.index(12);
    cfg.learn.max_remaining_state = rng.index(20);
    cfg.workload.packet_min_bits = rng.uniform(1.0, 1e6);
    cfg.workload.packet_max_bits = cfg.workload.packet_min_bits + rng.uniform(0.0, 5e6);
    cfg.kpi_preset = KpiPreset::All;
    cfg
}

fn c9_partition_fuzz() -> Outcome {
    let mut rng = RngStream::new(909, 0);
    let mut failures = Vec::new();
    for i in 0..10_000u64 {
        let cfg = random_config(&mut rng);
        iotclust::validate_config(&cfg).expect("fuzzed config is valid");
        let mut ep = RngStream::new(i, 1);
        let batch = generate_batch(&cfg, &mut ep);
        let mut q = QTable::new(
            cfg.learn.max_occupancy_state,
            cfg.vm.count,
            cfg.learn.max_remaining_state,
        );
        let out = match i % 3 {
            0 => run_episode(&batch, PolicyHandle::Random, &cfg, &mut ep),
            1 => run_episode(
                &batch,
                PolicyHandle::Learning {
                    q: &mut q,
                    epsilon: 0.5,
                },
                &cfg,
                &mut ep,
            ),
            _ => {
                for (s, a, _) in q.clone().entries() {
                    q.set(&s, a, ep.uniform(-10.0, 10.0));
                }
                run_episode(&batch, PolicyHandle::Greedy(&q), &cfg, &mut ep)
            }
        };
        let util = vm_utilization(&out, &cfg);
        if let Err(e) = out.verify(&batch, &cfg.vm) {
            failures.push(format!("episode {i}: {e}"));
        } else if !(0.0..=1.0).contains(&util) {
            failures.push(format!("episode {i}: utilization {util}"));
        }
    }
    check(
        failures.is_empty(),
        format!(
            "10^4 episodes, {} violations {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn main() {
    let mut ok = true;
    ok &= run(
        "1 reward table",
        Some(Duration::from_secs(1)),
        c1_reward_table,
    );
    ok &= run("2 q-update", None, c2_q_update);
    ok &= run(
        "3 distributions",
        Some(Duration::from_secs(5)),
        c3_distributions,
    );

    let start = Instant::now();
    let cmp = compare(&ScenarioConfig::default(), &DEFAULT_SWEEP, 100, None);
    let sweep_time = start.elapsed();
    match cmp {
        Ok(cmp) => {
            println!("sweep (three class mixes, trained per point) took {sweep_time:.2?}");
            let budget = Duration::from_secs(120);
            ok &= run("4 cluster count trend", None, || {
                let mut o = c4_clusters(&cmp);
                o.pass &= sweep_time <= budget;
                o
            });
            ok &= run("5 utilization trend", None, || c5_utilization(&cmp));
            ok &= run("6 delayed-device trend", None, || c6_delayed(&cmp));
        }
        Err(e) => {
            for id in ["4", "5", "6"] {
                println!("FAIL criterion {id}: sweep failed: {e}");
            }
            ok = false;
        }
    }

    ok &= run(
        "7 brute-force oracle",
        Some(Duration::from_secs(60)),
        c7_oracle,
    );
    ok &= run("8 determinism", None, c8_determinism);
    ok &= run("9 partition fuzz", None, c9_partition_fuzz);

    if !ok {
        std::process::exit(1);
    }
}
