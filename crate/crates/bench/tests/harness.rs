use std::path::{Path, PathBuf};
use std::process::Command;

use dsa_bench::experiments::{self, SweepAxis};
use dsa_bench::plot::{self, Frame};
use dsa_bench::records::{self, HEADER};
use dsa_bench::{execute, execute_all, presets, write_outputs, OptimizerId, RunConfig};
use dsa_core::data::{default_data_dir, DatasetId};
use dsa_core::optim::Rule;

fn data() -> PathBuf {
    default_data_dir()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dsa-bench"))
}

fn short_iris(opt: OptimizerId, epochs: usize) -> RunConfig {
    let mut c = presets::train(DatasetId::Iris, opt);
    c.epochs = epochs;
    c
}

fn preset_run(case: &str, opt: &str) -> RunConfig {
    presets::case(case)
        .unwrap()
        .into_iter()
        .find(|c| c.optimizer == opt)
        .unwrap()
}

#[test]
fn csv_bytes_deterministic_per_seed() {
    for cfg in [short_iris(OptimizerId::Dsa, 5), preset_run("quadratic-95", "hd")] {
        let a = records::to_csv_bytes(&execute(&cfg, &data()).unwrap().records).unwrap();
        let b = records::to_csv_bytes(&execute(&cfg, &data()).unwrap().records).unwrap();
        assert_eq!(a, b, "{}", cfg.name);
    }
    let mut other = short_iris(OptimizerId::Dsa, 5);
    other.seed = 1;
    let a = execute(&short_iris(OptimizerId::Dsa, 5), &data()).unwrap();
    let b = execute(&other, &data()).unwrap();
    assert_ne!(records::to_csv_bytes(&a.records).unwrap(), records::to_csv_bytes(&b.records).unwrap());
}

#[test]
fn csv_header_is_exact() {
    let out = execute(&preset_run("scalar-square", "dsa"), &data()).unwrap();
    let bytes = records::to_csv_bytes(&out.records).unwrap();
    let first = String::from_utf8(bytes).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first, HEADER.join(","));
}

#[test]
fn miss_probe_does_not_perturb_training() {
    for opt in [OptimizerId::Dsa, OptimizerId::Hd] {
        let plain = short_iris(opt, 4);
        let mut probed = plain.clone();
        probed.miss_probe = true;
        let a = execute(&plain, &data()).unwrap();
        let b = execute(&probed, &data()).unwrap();
        assert_eq!(a.params, b.params);
        let losses = |o: &dsa_bench::RunOutput| o.records.iter().map(|r| r.loss.map(f64::to_bits)).collect::<Vec<_>>();
        assert_eq!(losses(&a), losses(&b));
        assert!(b.records[1..].iter().all(|r| r.miss.is_some()));
        assert!(a.records.iter().all(|r| r.miss.is_none()));
    }
}

#[test]
fn dsa_rate_inside_open_interval_for_all_runs() {
    let mut cfgs: Vec<RunConfig> = ["quadratic-95", "quadratic-1000", "minibatch-trap", "scalar-square"]
        .iter()
        .flat_map(|c| presets::case(c).unwrap())
        .filter(|c| c.optimizer == "dsa")
        .collect();
    let mut scalar = short_iris(OptimizerId::Dsa, 10);
    scalar.per_parameter = false;
    cfgs.extend([short_iris(OptimizerId::Dsa, 10), scalar]);
    for out in execute_all(&cfgs, &data()).unwrap() {
        let gamma = out.config.gamma;
        for r in &out.records[1..] {
            for lr in [r.lr_min, r.lr_mean, r.lr_max] {
                let lr = lr.unwrap();
                assert!(lr > 0.0 && lr < gamma, "{} iter {}: {lr}", out.config.name, r.iter);
            }
            assert!(r.lr_min <= r.lr_mean && r.lr_mean <= r.lr_max);
        }
    }
}

#[test]
fn iterations_strictly_increase_and_metrics_on_epoch_ends() {
    let mut cfg = short_iris(OptimizerId::Classic(Rule::Adam), 3);
    cfg.batch_size = Some(32);
    let out = execute(&cfg, &data()).unwrap();
    assert_eq!(out.records.len(), 1 + 3 * 4);
    for w in out.records.windows(2) {
        assert_eq!(w[1].iter, w[0].iter + 1);
    }
    let with_metrics: Vec<u64> = out.records.iter().filter(|r| r.accuracy.is_some()).map(|r| r.iter).collect();
    assert_eq!(with_metrics, [0, 4, 8, 12]);
}

#[test]
fn single_value_sweep_equals_plain_run() {
    let axis = SweepAxis::Beta;
    let base = axis.default_base();
    let points = experiments::run_sweep(axis, &[0.3], &base, 1e-4, &data()).unwrap();
    let mut plain = base.clone();
    plain.beta = Some(0.3);
    let direct = execute(&plain, &data()).unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(
        records::to_csv_bytes(&points[0].1.records).unwrap(),
        records::to_csv_bytes(&direct.records).unwrap()
    );
    assert_eq!(
        points[0].0.iters_to_tol,
        experiments::iters_to_tol(&direct.records, 1e-4)
    );
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let axis = SweepAxis::Lr;
    let points = experiments::run_sweep(axis, &axis.default_values(), &axis.default_base(), 1e-4, &data()).unwrap();
    experiments::write_sweep(dir.path(), axis, &points).unwrap();
    for v in axis.default_values() {
        assert!(dir.path().join(format!("lr={v}")).join("records.csv").exists());
    }
    let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn trajectory_svg_ends_at_final_csv_point() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = execute_all(&presets::case("quadratic-1000").unwrap(), &data()).unwrap();
    write_outputs(dir.path(), &outputs).unwrap();
    let rows = records::read_csv(&dir.path().join("records.csv")).unwrap();
    plot::write_plots(dir.path(), &rows).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("trajectory.svg")).unwrap();
    let frame = Frame::from_svg(&svg).unwrap();
    let lines = plot::polylines(&svg);
    assert_eq!(lines.len(), outputs.len());
    let span = (frame.x_max - frame.x_min).max(frame.y_max - frame.y_min);
    for out in &outputs {
        let last = out.records.last().unwrap();
        let &(px, py) = lines[&out.config.name].last().unwrap();
        let (x, y) = frame.from_px(px, py);
        assert!((x - last.w1.unwrap()).abs() <= 1e-5 * span, "{}", out.config.name);
        assert!((y - last.w2.unwrap()).abs() <= 1e-5 * span, "{}", out.config.name);
    }
    let loss = std::fs::read_to_string(dir.path().join("loss.svg")).unwrap();
    assert!(Frame::from_svg(&loss).unwrap().log_y);
    assert!(loss.contains("class=\"x-label\"") && loss.contains("class=\"y-label\""));
}

#[test]
fn finetune_with_empty_second_phase_matches_first_phase() {
    let (mut pre, mut fine) = experiments::finetune_plan(DatasetId::Iris);
    pre.epochs = 6;
    fine.epochs = 0;
    let two = experiments::run_finetune(&pre, &fine, &data()).unwrap();
    let one = execute(&pre, &data()).unwrap();
    let mut a = two.output.summary.clone();
    let mut b = one.summary.clone();
    a.wall_time_s = 0.0;
    b.wall_time_s = 0.0;
    assert_eq!(a, b);
    assert_eq!(two.output.records, one.records);
}

#[test]
fn finetune_continues_under_one_run_id() {
    let (mut pre, mut fine) = experiments::finetune_plan(DatasetId::Iris);
    pre.epochs = 3;
    fine.epochs = 2;
    let out = experiments::run_finetune(&pre, &fine, &data()).unwrap();
    let recs = &out.output.records;
    assert_eq!(recs.len(), 1 + 3 * 4 + 2);
    assert!(recs.iter().all(|r| r.run_id == pre.name));
    assert_eq!(recs.last().unwrap().epoch, 5);
    assert_eq!(out.output.summary.optimizer, "momentum+dsa");

    let mut wrong = fine.clone();
    wrong.dataset = Some("wine".into());
    assert!(experiments::run_finetune(&pre, &wrong, &data()).is_err());
    assert!(experiments::run_finetune(&fine, &fine, &data()).is_err());
}

#[test]
fn ablation_table_carries_variant_flags() {
    let dir = tempfile::tempdir().unwrap();
    let rows = experiments::run_ablation("quadratic-95", &[0], &Default::default(), &data()).unwrap();
    experiments::write_ablation(dir.path(), "quadratic-95", &rows).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("per_parameter") && header.contains("sign_step"));
    assert!(lines.next().unwrap().starts_with("dsa,dsa,on,on"));
    assert!(lines.next().unwrap().starts_with("dsa-scalar,dsa,off,on"));
    assert!(lines.next().unwrap().starts_with("dsa-grad-step,dsa,on,off"));
    assert!(std::fs::read_to_string(dir.path().join("table.md")).unwrap().contains("| per_parameter |"));
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn assert_error(args: &[&str], kind: &str) {
    let (code, _, err) = run_cli(args);
    assert_ne!(code, 0, "{args:?}");
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with(&format!("error kind={kind} msg=\"")), "{err}");
}

#[test]
fn cli_errors_are_one_machine_readable_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_error(&["train", "--dataset", "iris", "--optimizer", "nadam", "--out", out], "config");
    assert_error(&["case", "no-such-case", "--out", out], "config");
    assert_error(&["train", "--dataset", "iris", "--optimizer", "sgd", "--data-dir", "/nonexistent", "--out", out], "io");
    assert_error(&["train", "--dataset", "iris", "--optimizer", "sgd", "--bogus-flag"], "config");
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert_error(&["plot", empty.to_str().unwrap()], "records");
}

#[test]
fn cli_train_divergence_exits_nonzero_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset_run("quadratic-95", "sgd");
    cfg.lr = Some(1.0);
    cfg.epochs = 2000;
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, cfg.to_toml().unwrap()).unwrap();
    let out = dir.path().join("out");
    assert_error(
        &["train", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()],
        "diverged",
    );
    let rows = records::read_csv(&out.join("records.csv")).unwrap();
    assert!(rows.last().unwrap().loss.unwrap().is_nan());
}

#[test]
fn cli_config_round_trip_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let (code, stdout, err) = run_cli(&[
        "train", "--dataset", "iris", "--optimizer", "dsa", "--epochs", "4", "--seed", "3", "--beta", "0.2",
        "--no-per-parameter", "--miss-probe", "--out", first.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("run=iris-dsa"));
    let cfg = RunConfig::load(&first.join("config.toml")).unwrap();
    assert_eq!((cfg.epochs, cfg.seed, cfg.beta, cfg.per_parameter, cfg.miss_probe), (4, 3, Some(0.2), false, true));
    assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);

    let second = dir.path().join("second");
    let (code, _, err) = run_cli(&[
        "train", "--config", first.join("config.toml").to_str().unwrap(), "--out", second.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let read = |d: &Path| std::fs::read(d.join("records.csv")).unwrap();
    assert_eq!(read(&first), read(&second));
    for svg in ["loss.svg", "accuracy.svg", "miss.svg"] {
        assert!(second.join(svg).exists(), "{svg}");
    }
}

#[test]
fn cli_case_and_fetch_verify() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, err) = run_cli(&["case", "minibatch-trap", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("run=")).count(), 4);
    assert!(dir.path().join("configs").join("dsa-full.toml").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 4);

    let (code, stdout, err) = run_cli(&["fetch-data", "--verify-only"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("verified")).count(), 4);
    assert_error(&["fetch-data", "--verify-only", "--data-dir", dir.path().to_str().unwrap()], "io");
}
