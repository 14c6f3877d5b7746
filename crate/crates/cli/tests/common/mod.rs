#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swingshot::full_env::{ReferencePoint, ReferenceTrajectory};
use swingshot::{Handhold, HandholdSequence, Vec2};

pub fn swingshot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swingshot"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn swingshot")
}

/// Runs and panics with the captured stderr unless the exit code matches.
pub fn expect_code(dir: &Path, args: &[&str], code: i32) -> Output {
    let out = swingshot(dir, args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "swingshot {}\nstdout:\n{}\nstderr:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn ok(dir: &Path, args: &[&str]) -> Output {
    expect_code(dir, args, 0)
}

/// A hand-made arc from the first hold to the second: hang, release at
/// 40 steps, grab again at 80.
pub fn synthetic_reference() -> ReferenceTrajectory {
    let holds = vec![Handhold::new(0.0, 0.0), Handhold::new(1.2, 0.0), Handhold::new(2.4, 0.1)];
    let points = (0..=120)
        .map(|k| {
            let s = k as f64 / 120.0;
            ReferencePoint {
                t: k as f64 / 60.0,
                p: Vec2::new(-0.6 + 1.8 * s, -0.3 * (std::f64::consts::PI * s).sin()),
                grab: !(41..80).contains(&k),
            }
        })
        .collect();
    ReferenceTrajectory {
        seq: HandholdSequence::new(holds, 1),
        points,
        releases: vec![40.0 / 60.0],
    }
}

pub fn write_reference(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("ref_0000.csv"), synthetic_reference().to_text()).unwrap();
}

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn read(path: impl AsRef<Path>) -> String {
    let path = path.as_ref();
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// `key = value` lines of a summary file.
pub fn summary_value(path: impl AsRef<Path>, key: &str) -> f64 {
    read(path)
        .lines()
        .find_map(|l| {
            let (k, v) = l.split_once('=')?;
            (k.trim() == key).then(|| v.trim().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no `{key}` in summary"))
}

/// A tiny pipeline that touches every command, written under `dir`.
pub fn tiny_pipeline(dir: &Path) {
    ok(
        dir,
        &[
            "train-simple", "--out", "simple", "--total-samples", "400", "--samples-per-iter", "200",
            "--n-envs", "20", "--eval-sequences", "3", "--seq-len", "5",
        ],
    );
    ok(
        dir,
        &["record-refs", "--out", "refs", "--simple-checkpoint", "simple/simple.ckpt", "--sequences", "2"],
    );
    write_reference(&dir.join("handmade"));
    ok(
        dir,
        &[
            "train-full", "--out", "full", "--refs", "handmade", "--config", "d", "--total-samples", "200",
            "--samples-per-iter", "100", "--n-envs", "4", "--eval-sequences", "1",
        ],
    );
    ok(
        dir,
        &["eval", "--out", "eval-full", "--checkpoint", "full/full.ckpt", "--refs", "handmade", "--episodes", "2", "--trace", "true"],
    );
    ok(dir, &["eval", "--out", "eval-simple", "--checkpoint", "simple/simple.ckpt", "--episodes", "2", "--seq-len", "5"]);
    ok(dir, &["export", "--out", "export", "--checkpoint", "simple/simple.ckpt", "--seq-len", "5"]);
    ok(
        dir,
        &[
            "plan", "--out", "plan", "--simple-checkpoint", "simple/simple.ckpt", "--full-checkpoint", "full/full.ckpt",
            "--k", "20", "--terrains", "2", "--mode", "all",
        ],
    );
    ok(
        dir,
        &[
            "ablate", "--out", "ablate", "--study", "termination", "--seeds", "1", "--total-samples", "200",
            "--samples-per-iter", "200", "--n-envs", "20", "--eval-sequences", "2", "--seq-len", "5",
        ],
    );
}
