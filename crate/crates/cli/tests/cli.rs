mod common;

use std::fs;

use common::{expect_code, ok, read, summary_value, swingshot, tiny_pipeline, write_reference};

const ALL_KEYS: &[&str] = &[
    "seed", "out", "threads", "n_lookahead", "min_duration", "max_duration", "unrecoverable", "capture_radius",
    "total_samples", "samples_per_iter", "n_envs", "lr_init", "lr_final", "checkpoint_every", "distribution",
    "seq_len", "eval_sequences", "simple_checkpoint", "full_checkpoint", "checkpoint", "refs", "sequences", "config",
    "w_tracking", "w_reaching", "w_upright", "w_arm", "w_legs", "w_energy", "episodes", "trace", "mode", "terrains",
    "terrain_seed", "k", "horizon", "h", "svg", "wall_time", "study", "seeds", "lookaheads", "sequence_seed",
];

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn help_lists_every_command_and_key() {
    let dir = tmp();
    let out = ok(dir.path(), &["--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["train-simple", "record-refs", "train-full", "eval", "export", "plan", "ablate"] {
        assert!(text.contains(cmd), "missing command {cmd}");
    }
    for key in ALL_KEYS {
        assert!(text.contains(key), "missing key {key}");
    }
    let plan = String::from_utf8(ok(dir.path(), &["plan", "--help"]).stdout).unwrap();
    for flag in ["--k", "--horizon", "--full-checkpoint", "--wall-time", "--no-svg", "--config-file"] {
        assert!(plan.contains(flag), "plan --help lacks {flag}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tmp();
    let d = dir.path();
    expect_code(d, &[], 2);
    expect_code(d, &["fly"], 2);
    expect_code(d, &["plan", "--bogus", "1"], 2);
    expect_code(d, &["plan", "--k", "many"], 2);
    expect_code(d, &["train-full", "--config", "z"], 2);
    expect_code(d, &["ablate", "--lookaheads", "1,x"], 2);
    expect_code(d, &["eval", "--k", "3"], 2);
    let out = expect_code(d, &["train-simple", "--no-min-duration", "--no-max-duration", "--no-unrecoverable"], 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn config_file_errors_name_the_line() {
    let dir = tmp();
    fs::write(dir.path().join("run.cfg"), "# comment\nseed = 3\nhorizons = 2\n").unwrap();
    let out = expect_code(dir.path(), &["plan", "--config-file", "run.cfg"], 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run.cfg:3") && err.contains("horizons"), "{err}");
    expect_code(dir.path(), &["plan", "-f", "missing.cfg"], 2);
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tmp();
    let d = dir.path();
    let out = expect_code(d, &["eval", "--checkpoint", "nowhere.ckpt"], 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.ckpt"));
    fs::write(d.join("junk.ckpt"), "not a checkpoint\n").unwrap();
    expect_code(d, &["export", "--checkpoint", "junk.ckpt"], 1);
    expect_code(d, &["train-full", "--refs", "empty", "--total-samples", "100"], 1);
}

#[test]
fn file_values_apply_and_flags_override_them() {
    let dir = tmp();
    let d = dir.path();
    fs::write(
        d.join("run.cfg"),
        "out = from-file\ntotal_samples = 200\nsamples_per_iter = 200\nn_envs = 20\neval_sequences = 2\nseq_len = 5\nseed = 9\n",
    )
    .unwrap();
    ok(d, &["train-simple", "-f", "run.cfg", "--seed", "4", "--n-lookahead", "2"]);
    let cfg = read(d.join("from-file/train-simple_config.txt"));
    assert!(cfg.contains("seed = 4\n"), "{cfg}");
    assert!(cfg.contains("total_samples = 200\n"));
    assert!(cfg.contains("n_lookahead = 2\n"));
    let ckpt = read(d.join("from-file/simple.ckpt"));
    assert!(ckpt.contains("lookahead"));
    assert_eq!(summary_value(d.join("from-file/simple_summary.txt"), "episodes"), 2.0);
}

#[test]
fn configuration_e_needs_grabbing_references() {
    let dir = tmp();
    let d = dir.path();
    let mut r = common::synthetic_reference();
    for p in &mut r.points {
        p.grab = true;
    }
    fs::create_dir_all(d.join("refs")).unwrap();
    fs::write(d.join("refs/ref_0000.csv"), r.to_text()).unwrap();
    expect_code(d, &["train-full", "--refs", "refs", "--config", "e", "--total-samples", "100"], 2);

    write_reference(&d.join("grabbing"));
    ok(
        d,
        &[
            "train-full", "--refs", "grabbing", "--config", "e", "--out", "e", "--total-samples", "100",
            "--samples-per-iter", "100", "--n-envs", "4", "--eval-sequences", "1",
        ],
    );
    assert_eq!(read(d.join("e/full_summary.txt")).lines().next(), Some("config = E"));
}

#[test]
fn pipeline_outputs_have_expected_layout() {
    let dir = tmp();
    let d = dir.path();
    tiny_pipeline(d);

    assert_eq!(read(d.join("simple/simple_curve.csv")).lines().next(), Some("samples,mean_ep_reward,mean_handholds"));
    assert_eq!(read(d.join("simple/simple_curve.csv")).lines().count(), 3);
    assert!(read(d.join("refs/rejections.txt")).starts_with("requested = 2\n"));
    assert!(read(d.join("export/trajectory.csv")).starts_with("t,px,py,vx,vy,grab,arm_len,reward,event\n"));
    assert!(read(d.join("eval-full/eval_trace.csv")).starts_with("t,root_x,root_y,pitch,"));
    assert!(read(d.join("eval-full/eval_trace.svg")).starts_with("<svg"));

    let results = read(d.join("plan/plan_results.csv"));
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines[0], "terrain_seed,mode,gaps_passed,holds_completed,wall_ms");
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1..].iter().all(|l| l.ends_with(",0")), "wall time recorded by default");
    let summary = read(d.join("plan/plan_summary.csv"));
    for mode in ["value-only", "reward-only", "combined"] {
        assert!(summary.contains(&format!("\n{mode},2,2,")), "{summary}");
        assert!(d.join(format!("plan/plan_{mode}_1.svg")).exists());
    }

    let ablate = read(d.join("ablate/ablate_summary.csv"));
    assert_eq!(ablate.lines().count(), 5);
    assert!(d.join("ablate/no-max-duration/seed0/simple.ckpt").exists());
}

#[test]
fn version_flag_succeeds() {
    let dir = tmp();
    let out = swingshot(dir.path(), &["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("swingshot "));
}
