// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

use qoc_cli::bench::{run_sweep, Experiment};
use qoc_cli::commands;
use qoc_cli::config::LatticeConfig;
use qoc_cli::output::{self, BenchRecord, BenchSink, BENCH_HEADER, CONVERGENCE_HEADER};
use qoc_cli::{ExperimentConfig, Overrides};
use qoc_core::{GradientStrategy, InitialCondition};

fn tiny(dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.lattice = LatticeConfig {
        width: 1,
        length: 3,
    };
    c.time.total_ns = 4.0;
    c.time.steps = 12;
    c.optimizer.iterations = 5;
    c.initial = InitialCondition::staggered(0.0, -1.0, 0.05);
    c.bench.iterations = 2;
    c.bench.width = 1;
    c.bench.lengths = vec![2];
    c.output_dir = dir.to_path_buf();
    c
}

#[test]
fn bench_header_is_pinned() {
    let literal = "experiment,width,length,qubits,dim,steps,period,strategy,iterations,seed,status,\
total_ms,forward_ms,backward_ms,ms_per_iteration,peak_matrices,checkpoints,workspace_matrices,\
scratch_matrices,step_recomputations,linearizations,peak_bytes_estimate,rss_peak_bytes,\
loss_first,loss_last,loss_best,error";
    assert_eq!(BENCH_HEADER, literal);

    // The header must agree with the serialized field order.
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    let path = dir.path().join("b.csv");
    let mut sink = BenchSink::create(&path).unwrap();
    let rows = run_sweep(&c, Experiment::VaryQubits, &mut sink, None, |_| {}).unwrap();
    drop(sink);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some(BENCH_HEADER));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(&rows[0]).unwrap();
    let derived = String::from_utf8(w.into_inner().unwrap()).unwrap();
    assert_eq!(derived.lines().next(), Some(BENCH_HEADER));
}

#[test]
fn convergence_and_schedule_headers_are_pinned() {
    assert_eq!(CONVERGENCE_HEADER, "iter,loss,grad_inf_norm,wall_ms");
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    commands::optimize(&c, |_| {}).unwrap();
    let conv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(conv.lines().next(), Some(CONVERGENCE_HEADER));
    assert_eq!(conv.lines().count(), 1 + 5);
    let m = c.lattice.build().unwrap().qubits();
    let header = format!("# dt_ns={} units=rad/ns channels={m} steps=12\n", 4.0 / 12.0);
    for name in ["schedule.csv", "best_schedule.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with(&header), "{text}");
        let s = output::read_schedule(&dir.path().join(name)).unwrap();
        assert_eq!(s.amplitudes().dim(), (m, 12));
    }
    let echoed = ExperimentConfig::load(&dir.path().join(commands::CONFIG_FILE)).unwrap();
    assert_eq!(echoed.to_json(), c.to_json());
}

#[test]
fn config_round_trips_and_overrides_win() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
    assert_eq!(back.to_json(), c.to_json());

    let path = dir.path().join("in.json");
    std::fs::write(&path, r#"{"seed": 3, "strategy": "reverse", "time": {"steps": 40}}"#).unwrap();
    let resolved = ExperimentConfig::resolve(
        Some(&path),
        &Overrides {
            strategy: Some(GradientStrategy::PeriodicCheckpointing(4)),
            output_dir: None,
            seed: None,
        },
    )
    .unwrap();
    assert_eq!(resolved.seed, 3);
    assert_eq!(resolved.time.steps, 40);
    assert_eq!(resolved.strategy, GradientStrategy::PeriodicCheckpointing(4));
    assert!(ExperimentConfig::from_json(r#"{"sed": 3}"#).is_err());
}

#[test]
fn optimization_is_deterministic_for_a_seed() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny(dir.path());
        commands::optimize(&c, |_| {}).unwrap();
        output::read_convergence(&dir.path().join("convergence.csv")).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.loss.to_bits(), y.loss.to_bits());
        assert_eq!(x.grad_inf_norm.to_bits(), y.grad_inf_norm.to_bits());
    }
    assert!(a.last().unwrap().loss < a[0].loss);
}

#[test]
fn failing_rows_do_not_abort_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(dir.path());
    c.bench.iterations = 1;
    c.bench.periods = vec![3, 13, 12];
    c.bench.lattice = LatticeConfig {
        width: 1,
        length: 2,
    };
    let rows = commands::bench(&c, Experiment::VaryCheckpoints, None, |_| {}).unwrap();
    let status: Vec<&str> = rows.iter().map(|r| r.status.as_str()).collect();
    assert_eq!(status, ["ok", "ok", "error", "error", "ok", "ok"]);
    let on_disk: Vec<BenchRecord> =
        output::read_bench(&dir.path().join(Experiment::VaryCheckpoints.file_name())).unwrap();
    assert_eq!(on_disk, rows);
    assert!(on_disk[2].error.as_deref().unwrap().contains("13"));
}
